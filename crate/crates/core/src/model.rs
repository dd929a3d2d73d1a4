//! Decoupled system description: a finite scatterer, semi-infinite
//! tight-binding leads and a finite-rank coupling between them.
//!
//! Everything downstream consumes a [`SystemModel`], which can only be
//! obtained through [`validate_model`]. Raw input lives in
//! [`ModelDescription`] and friends; those types carry no invariants.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Absolute tolerance on unit norms and pairwise overlaps.
pub const NORM_TOL: f64 = 1e-12;
/// Relative tolerance on the self-adjointness of the scatterer matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Identifier of a lead (reservoir).
pub type LeadId = u32;

/// Sparse amplitude map on lead sites, sites are 1-indexed from the boundary.
pub type SiteAmplitudes = BTreeMap<usize, Complex64>;

/// Raw, unvalidated model input.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelDescription {
    /// Dense scatterer Hamiltonian, row-major.
    pub scatterer: Vec<Vec<Complex64>>,
    pub leads: Vec<RawLead>,
    pub couplings: Vec<RawCoupling>,
    pub contacts: Vec<RawContact>,
    /// Electron charge magnitude; `None` means 1.
    pub charge: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawLead {
    pub id: LeadId,
    pub onsite: f64,
    pub hopping: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawCoupling {
    pub lead: LeadId,
    pub strength: f64,
    pub scatterer_vector: Vec<Complex64>,
    pub lead_vector: SiteAmplitudes,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawContact {
    pub leads: (LeadId, LeadId),
    pub strength: f64,
    pub vector_j: SiteAmplitudes,
    pub vector_k: SiteAmplitudes,
}

/// A finitely supported vector on a lead, stored densely from site 1 up to the
/// last nonzero site.
#[derive(Clone, Debug, PartialEq)]
pub struct LeadVector(Vec<Complex64>);

impl LeadVector {
    /// Builds a vector from a sparse map, trimming the zero tail.
    pub fn from_sites(sites: &SiteAmplitudes) -> Result<Self, String> {
        if sites.contains_key(&0) {
            return Err("site index 0 is invalid, lead sites start at 1".into());
        }
        let last = sites
            .iter()
            .filter(|(_, a)| a.norm() > 0.0)
            .map(|(&n, _)| n)
            .max()
            .unwrap_or(0);
        let mut dense = vec![Complex64::new(0.0, 0.0); last];
        for (&n, &a) in sites.iter().filter(|(&n, _)| n <= last) {
            dense[n - 1] = a;
        }
        Ok(Self(dense))
    }

    pub fn from_dense(mut amplitudes: Vec<Complex64>) -> Self {
        while amplitudes.last().is_some_and(|a| a.norm() == 0.0) {
            amplitudes.pop();
        }
        Self(amplitudes)
    }

    /// Unit vector on a single site.
    pub fn site(n: usize) -> Self {
        assert!(n >= 1, "lead sites start at 1");
        let mut dense = vec![Complex64::new(0.0, 0.0); n];
        dense[n - 1] = Complex64::new(1.0, 0.0);
        Self(dense)
    }

    /// Amplitudes for sites `1..=support()`.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.0
    }

    /// Index of the last nonzero site (0 for the zero vector).
    pub fn support(&self) -> usize {
        self.0.len()
    }

    pub fn amplitude(&self, site: usize) -> Complex64 {
        if site == 0 || site > self.0.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.0[site - 1]
        }
    }

    /// `<self, other>`, antilinear in `self`.
    pub fn inner(&self, other: &LeadVector) -> Complex64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn conj(&self) -> Self {
        Self(self.0.iter().map(|a| a.conj()).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeadSpec {
    pub id: LeadId,
    pub onsite: f64,
    pub hopping: f64,
    /// Sites carrying any coupling or contact amplitude, ascending.
    pub coupling_sites: Vec<usize>,
}

impl LeadSpec {
    /// Absolutely continuous spectrum `[onsite - 2t, onsite + 2t]`.
    pub fn band(&self) -> (f64, f64) {
        band(self)
    }

    /// True if `energy` lies strictly inside the band.
    pub fn is_open(&self, energy: f64) -> bool {
        let (lo, hi) = self.band();
        energy > lo && energy < hi
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScattererSpec {
    pub matrix: DMatrix<Complex64>,
}

impl ScattererSpec {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest entry modulus, floored at 1.
    pub fn scale(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(1.0, f64::max)
    }
}

/// `v |s><f| + h.c.` between the scatterer and one lead.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingTerm {
    pub lead: LeadId,
    pub strength: f64,
    pub scatterer_vector: Vec<Complex64>,
    pub lead_vector: LeadVector,
}

/// `v |g_j><g_k| + h.c.` directly between two leads.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectContactTerm {
    pub leads: (LeadId, LeadId),
    pub strength: f64,
    pub vector_j: LeadVector,
    pub vector_k: LeadVector,
}

/// Inverse temperature and chemical potential of one reservoir.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReservoirState {
    pub beta: f64,
    pub mu: f64,
}

impl ReservoirState {
    pub fn new(beta: f64, mu: f64) -> Result<Self, String> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(format!("beta must be positive (got {beta})"));
        }
        if !mu.is_finite() {
            return Err(format!("mu must be finite (got {mu})"));
        }
        Ok(Self { beta, mu })
    }

    /// Scaled energy `beta * (E - mu)`.
    pub fn scaled_energy(&self, energy: f64) -> f64 {
        self.beta * (energy - self.mu)
    }
}

/// Validated, immutable model.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemModel {
    scatterer: ScattererSpec,
    leads: Vec<LeadSpec>,
    couplings: Vec<CouplingTerm>,
    contacts: Vec<DirectContactTerm>,
    charge: f64,
}

impl SystemModel {
    pub fn scatterer(&self) -> &ScattererSpec {
        &self.scatterer
    }

    /// Leads in ascending id order.
    pub fn leads(&self) -> &[LeadSpec] {
        &self.leads
    }

    pub fn couplings(&self) -> &[CouplingTerm] {
        &self.couplings
    }

    pub fn contacts(&self) -> &[DirectContactTerm] {
        &self.contacts
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    pub fn lead(&self, id: LeadId) -> Option<&LeadSpec> {
        self.leads.iter().find(|l| l.id == id)
    }

    pub fn lead_index(&self, id: LeadId) -> Option<usize> {
        self.leads.iter().position(|l| l.id == id)
    }

    /// True if all Hamiltonian and coupling data are real.
    pub fn is_real(&self) -> bool {
        let real = |z: &Complex64| z.im == 0.0;
        self.scatterer.matrix.iter().all(real)
            && self.couplings.iter().all(|c| {
                c.scatterer_vector.iter().all(real) && c.lead_vector.amplitudes().iter().all(real)
            })
            && self.contacts.iter().all(|c| {
                c.vector_j.amplitudes().iter().all(real) && c.vector_k.amplitudes().iter().all(real)
            })
    }

    /// The same model with every amplitude complex-conjugated.
    pub fn conjugate(&self) -> SystemModel {
        SystemModel {
            scatterer: ScattererSpec {
                matrix: self.scatterer.matrix.map(|z| z.conj()),
            },
            leads: self.leads.clone(),
            couplings: self
                .couplings
                .iter()
                .map(|c| CouplingTerm {
                    lead: c.lead,
                    strength: c.strength,
                    scatterer_vector: c.scatterer_vector.iter().map(|z| z.conj()).collect(),
                    lead_vector: c.lead_vector.conj(),
                })
                .collect(),
            contacts: self
                .contacts
                .iter()
                .map(|c| DirectContactTerm {
                    leads: c.leads,
                    strength: c.strength,
                    vector_j: c.vector_j.conj(),
                    vector_k: c.vector_k.conj(),
                })
                .collect(),
            charge: self.charge,
        }
    }

    /// Lower and upper edge over all lead bands.
    pub fn spectral_hull(&self) -> (f64, f64) {
        self.leads.iter().map(band).fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), (a, b)| (lo.min(a), hi.max(b)),
        )
    }

    /// All band edges, sorted and deduplicated.
    pub fn band_edges(&self) -> Vec<f64> {
        let mut edges: Vec<f64> = self
            .leads
            .iter()
            .flat_map(|l| {
                let (a, b) = band(l);
                [a, b]
            })
            .collect();
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        edges
    }

    /// Back to raw form; `validate_model(model.describe())` reproduces `model`.
    pub fn describe(&self) -> ModelDescription {
        let to_sites = |v: &LeadVector| -> SiteAmplitudes {
            v.amplitudes()
                .iter()
                .enumerate()
                .filter(|(_, a)| a.norm() > 0.0)
                .map(|(i, &a)| (i + 1, a))
                .collect()
        };
        let m = &self.scatterer.matrix;
        ModelDescription {
            scatterer: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect(),
            leads: self
                .leads
                .iter()
                .map(|l| RawLead {
                    id: l.id,
                    onsite: l.onsite,
                    hopping: l.hopping,
                })
                .collect(),
            couplings: self
                .couplings
                .iter()
                .map(|c| RawCoupling {
                    lead: c.lead,
                    strength: c.strength,
                    scatterer_vector: c.scatterer_vector.clone(),
                    lead_vector: to_sites(&c.lead_vector),
                })
                .collect(),
            contacts: self
                .contacts
                .iter()
                .map(|c| RawContact {
                    leads: c.leads,
                    strength: c.strength,
                    vector_j: to_sites(&c.vector_j),
                    vector_k: to_sites(&c.vector_k),
                })
                .collect(),
            charge: Some(self.charge),
        }
    }
}

/// One reason a model description was rejected.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    EmptyScatterer,
    NonSquareScatterer { row: usize, len: usize, dim: usize },
    NonHermitianScatterer { deviation: f64 },
    NonFinite { location: String },
    DuplicateLead { id: LeadId },
    NonPositiveHopping { lead: LeadId, hopping: f64 },
    UnknownLead { term: String, lead: LeadId },
    NonPositiveStrength { term: String, strength: f64 },
    BadVector { term: String, reason: String },
    NotNormalized { term: String, norm: f64 },
    NotOrthonormal { what: &'static str, first: usize, second: usize, overlap: f64 },
    SelfContact { term: usize, lead: LeadId },
    NonPositiveCharge { charge: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyScatterer => write!(f, "scatterer must have dimension >= 1"),
            Violation::NonSquareScatterer { row, len, dim } => {
                write!(f, "scatterer row {row} has {len} entries, expected {dim}")
            }
            Violation::NonHermitianScatterer { deviation } => {
                write!(f, "scatterer not self-adjoint (max deviation {deviation:e})")
            }
            Violation::NonFinite { location } => write!(f, "non-finite value in {location}"),
            Violation::DuplicateLead { id } => write!(f, "duplicate lead id {id}"),
            Violation::NonPositiveHopping { lead, hopping } => {
                write!(f, "lead {lead}: hopping must be positive (got {hopping})")
            }
            Violation::UnknownLead { term, lead } => {
                write!(f, "{term} references unknown lead {lead}")
            }
            Violation::NonPositiveStrength { term, strength } => {
                write!(f, "{term}: strength must be positive (got {strength})")
            }
            Violation::BadVector { term, reason } => write!(f, "{term}: {reason}"),
            Violation::NotNormalized { term, norm } => {
                write!(f, "{term}: vector not normalized (norm {norm})")
            }
            Violation::NotOrthonormal {
                what,
                first,
                second,
                overlap,
            } => write!(
                f,
                "{what} not orthonormal (terms {first} and {second}, overlap {overlap:e})"
            ),
            Violation::SelfContact { term, lead } => {
                write!(f, "contact {term} connects lead {lead} to itself")
            }
            Violation::NonPositiveCharge { charge } => {
                write!(f, "charge must be positive (got {charge})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("invalid model: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ModelError(pub Vec<Violation>);

impl ModelError {
    pub fn violations(&self) -> &[Violation] {
        &self.0
    }
}

/// Checks every structural invariant and returns the immutable model, or the
/// full list of violations.
pub fn validate_model(desc: &ModelDescription) -> Result<SystemModel, ModelError> {
    let mut violations = Vec::new();

    let dim = desc.scatterer.len();
    if dim == 0 {
        violations.push(Violation::EmptyScatterer);
    }
    for (row, entries) in desc.scatterer.iter().enumerate() {
        if entries.len() != dim {
            violations.push(Violation::NonSquareScatterer {
                row,
                len: entries.len(),
                dim,
            });
        }
    }
    let square = violations.is_empty();
    let matrix = if square {
        DMatrix::from_fn(dim, dim, |i, j| desc.scatterer[i][j])
    } else {
        DMatrix::zeros(0, 0)
    };
    if square {
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            violations.push(Violation::NonFinite {
                location: "scatterer".into(),
            });
        } else {
            let scale = matrix.iter().map(|z| z.norm()).fold(1.0, f64::max);
            let deviation = (&matrix - matrix.adjoint())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            if deviation > HERMITIAN_TOL * scale {
                violations.push(Violation::NonHermitianScatterer { deviation });
            }
        }
    }

    let mut leads: Vec<LeadSpec> = Vec::with_capacity(desc.leads.len());
    for raw in &desc.leads {
        if leads.iter().any(|l| l.id == raw.id) {
            violations.push(Violation::DuplicateLead { id: raw.id });
            continue;
        }
        if !raw.onsite.is_finite() || !raw.hopping.is_finite() {
            violations.push(Violation::NonFinite {
                location: format!("lead {}", raw.id),
            });
        }
        if !(raw.hopping > 0.0) {
            violations.push(Violation::NonPositiveHopping {
                lead: raw.id,
                hopping: raw.hopping,
            });
        }
        leads.push(LeadSpec {
            id: raw.id,
            onsite: raw.onsite,
            hopping: raw.hopping,
            coupling_sites: Vec::new(),
        });
    }
    leads.sort_by_key(|l| l.id);
    let known = |id: LeadId| leads.iter().any(|l| l.id == id);

    let mut couplings = Vec::with_capacity(desc.couplings.len());
    for (i, raw) in desc.couplings.iter().enumerate() {
        let term = format!("coupling {i}");
        if !known(raw.lead) {
            violations.push(Violation::UnknownLead {
                term: term.clone(),
                lead: raw.lead,
            });
        }
        check_strength(&term, raw.strength, &mut violations);
        if raw.scatterer_vector.len() != dim {
            violations.push(Violation::BadVector {
                term: term.clone(),
                reason: format!(
                    "scatterer vector has length {}, expected {dim}",
                    raw.scatterer_vector.len()
                ),
            });
        } else {
            let norm = raw
                .scatterer_vector
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt();
            if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
                violations.push(Violation::NotNormalized {
                    term: format!("{term} scatterer vector"),
                    norm,
                });
            }
        }
        let lead_vector = checked_lead_vector(&term, "lead vector", &raw.lead_vector, &mut violations);
        couplings.push(CouplingTerm {
            lead: raw.lead,
            strength: raw.strength,
            scatterer_vector: raw.scatterer_vector.clone(),
            lead_vector,
        });
    }

    // orthonormality per lead: {f_jl}_l and {s_jl}_l
    for lead in &leads {
        let family: Vec<usize> = (0..couplings.len())
            .filter(|&i| couplings[i].lead == lead.id)
            .collect();
        for (a, &i) in family.iter().enumerate() {
            for &k in &family[a + 1..] {
                let overlap = couplings[i].lead_vector.inner(&couplings[k].lead_vector).norm();
                if overlap > NORM_TOL {
                    violations.push(Violation::NotOrthonormal {
                        what: "lead vectors",
                        first: i,
                        second: k,
                        overlap,
                    });
                }
                let (s1, s2) = (&couplings[i].scatterer_vector, &couplings[k].scatterer_vector);
                if s1.len() == s2.len() {
                    let overlap = s1
                        .iter()
                        .zip(s2)
                        .map(|(a, b)| a.conj() * b)
                        .sum::<Complex64>()
                        .norm();
                    if overlap > NORM_TOL {
                        violations.push(Violation::NotOrthonormal {
                            what: "scatterer vectors",
                            first: i,
                            second: k,
                            overlap,
                        });
                    }
                }
            }
        }
    }

    let mut contacts = Vec::with_capacity(desc.contacts.len());
    for (i, raw) in desc.contacts.iter().enumerate() {
        let term = format!("contact {i}");
        let (j, k) = raw.leads;
        for id in [j, k] {
            if !known(id) {
                violations.push(Violation::UnknownLead {
                    term: term.clone(),
                    lead: id,
                });
            }
        }
        if j == k {
            violations.push(Violation::SelfContact { term: i, lead: j });
        }
        check_strength(&term, raw.strength, &mut violations);
        let vector_j = checked_lead_vector(&term, "vector_j", &raw.vector_j, &mut violations);
        let vector_k = checked_lead_vector(&term, "vector_k", &raw.vector_k, &mut violations);
        contacts.push(DirectContactTerm {
            leads: raw.leads,
            strength: raw.strength,
            vector_j,
            vector_k,
        });
    }

    // a contact family is all contacts between the same unordered lead pair;
    // each side of the family must be orthonormal
    for a in 0..contacts.len() {
        for b in a + 1..contacts.len() {
            let (ca, cb) = (&contacts[a], &contacts[b]);
            let (va_j, va_k) = (&ca.vector_j, &ca.vector_k);
            let (vb_j, vb_k) = if cb.leads == ca.leads {
                (&cb.vector_j, &cb.vector_k)
            } else if cb.leads == (ca.leads.1, ca.leads.0) {
                (&cb.vector_k, &cb.vector_j)
            } else {
                continue;
            };
            let overlap = va_j.inner(vb_j).norm().max(va_k.inner(vb_k).norm());
            if overlap > NORM_TOL {
                violations.push(Violation::NotOrthonormal {
                    what: "contact vectors",
                    first: a,
                    second: b,
                    overlap,
                });
            }
        }
    }

    let charge = desc.charge.unwrap_or(1.0);
    if !(charge > 0.0) || !charge.is_finite() {
        violations.push(Violation::NonPositiveCharge { charge });
    }

    if !violations.is_empty() {
        return Err(ModelError(violations));
    }

    for lead in &mut leads {
        let mut sites: Vec<usize> = couplings
            .iter()
            .filter(|c| c.lead == lead.id)
            .map(|c| &c.lead_vector)
            .chain(contacts.iter().flat_map(|c| {
                let mut v = Vec::new();
                if c.leads.0 == lead.id {
                    v.push(&c.vector_j);
                }
                if c.leads.1 == lead.id {
                    v.push(&c.vector_k);
                }
                v
            }))
            .flat_map(|v| {
                v.amplitudes()
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| a.norm() > 0.0)
                    .map(|(i, _)| i + 1)
            })
            .collect();
        sites.sort_unstable();
        sites.dedup();
        lead.coupling_sites = sites;
    }

    Ok(SystemModel {
        scatterer: ScattererSpec { matrix },
        leads,
        couplings,
        contacts,
        charge,
    })
}

fn check_strength(term: &str, strength: f64, violations: &mut Vec<Violation>) {
    if !(strength > 0.0) || !strength.is_finite() {
        violations.push(Violation::NonPositiveStrength {
            term: term.to_string(),
            strength,
        });
    }
}

fn checked_lead_vector(
    term: &str,
    name: &str,
    sites: &SiteAmplitudes,
    violations: &mut Vec<Violation>,
) -> LeadVector {
    match LeadVector::from_sites(sites) {
        Ok(v) => {
            let norm = v.norm();
            if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
                violations.push(Violation::NotNormalized {
                    term: format!("{term} {name}"),
                    norm,
                });
            }
            v
        }
        Err(reason) => {
            violations.push(Violation::BadVector {
                term: format!("{term} {name}"),
                reason,
            });
            LeadVector::from_dense(Vec::new())
        }
    }
}

/// Absolutely continuous spectrum `[onsite - 2t, onsite + 2t]` of a
/// semi-infinite nearest-neighbour chain.
pub fn band(lead: &LeadSpec) -> (f64, f64) {
    (lead.onsite - 2.0 * lead.hopping, lead.onsite + 2.0 * lead.hopping)
}

/// Ids of leads whose open band interior contains `energy`, ascending.
pub fn open_channels(model: &SystemModel, energy: f64) -> Vec<LeadId> {
    model
        .leads
        .iter()
        .filter(|l| l.is_open(energy))
        .map(|l| l.id)
        .collect()
}
