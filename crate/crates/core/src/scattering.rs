//! On-shell transition matrix by exact reduction of the Lippmann-Schwinger
//! equation to the finite subspace spanned by the coupling vectors.
//!
//! With `P` the projection onto that subspace, `V = P V P`, so `u = V psi+`
//! lives in the subspace and satisfies `(1 + V G0(E)) u = V psi0` where
//! `G0(E) = (H0 - E - i0)^{-1}`. In coordinates of an orthonormal basis
//! `{b_a}` this is a small dense system, and `T_jk = <psi0_j, u_k>`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::leads::{self, LeadError};
use crate::model::{open_channels, LeadId, LeadSpec, LeadVector, SystemModel};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Numerical thresholds of the scattering solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Bound on optical, normality and unitarity residuals.
    pub tol_scatter: f64,
    /// Distance (relative to the scatterer scale) below which an energy counts
    /// as a pole of the scatterer resolvent.
    pub tol_pole: f64,
    /// Largest accepted condition number of `1 + V G0`.
    pub cond_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_scatter: 1e-9,
            tol_pole: 1e-8,
            cond_max: 1e12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ScatteringError {
    #[error(transparent)]
    Lead(#[from] LeadError),
    #[error("exceptional energy E = {energy}: {reason}")]
    Exceptional { energy: f64, reason: String },
    #[error("no open channels at E = {energy}")]
    NoOpenChannels { energy: f64 },
    #[error("near-singular at E = {energy} (condition number {condition:e})")]
    NearSingular { energy: f64, condition: f64 },
    #[error("scattering inconsistency at E = {energy}: {what} residual {residual:e}")]
    Inconsistent {
        energy: f64,
        what: &'static str,
        residual: f64,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl ScatteringError {
    /// Energies that quadrature may step around rather than abort on.
    pub fn is_exceptional(&self) -> bool {
        matches!(
            self,
            ScatteringError::Exceptional { .. }
                | ScatteringError::NearSingular { .. }
                | ScatteringError::Lead(LeadError::Exceptional { .. })
        )
    }
}

/// Where a coupling-basis vector lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Location {
    Scatterer,
    Lead(LeadId),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisVector {
    pub location: Location,
    /// Scatterer components, or lead amplitudes from site 1.
    pub amplitudes: Vec<Complex64>,
}

impl BasisVector {
    fn overlap(&self, location: Location, v: &[Complex64]) -> Complex64 {
        if self.location != location {
            return ZERO;
        }
        self.amplitudes.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
    }

    fn lead_vector(&self) -> LeadVector {
        LeadVector::from_dense(self.amplitudes.clone())
    }
}

/// Orthonormal basis of the span of all rank factors of `V`, and `V` in it.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingSubspace {
    pub basis: Vec<BasisVector>,
    pub v_matrix: DMatrix<Complex64>,
}

impl CouplingSubspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn indices(&self, location: Location) -> Vec<usize> {
        (0..self.basis.len())
            .filter(|&a| self.basis[a].location == location)
            .collect()
    }
}

/// Gram-Schmidt that keeps already-orthonormal input unchanged and drops
/// vectors lying in the span of earlier ones.
fn orthonormalize(candidates: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = Vec::new();
    for v in candidates {
        let len = v.len().max(out.iter().map(Vec::len).max().unwrap_or(0));
        let mut w: Vec<Complex64> = (0..len).map(|i| v.get(i).copied().unwrap_or(ZERO)).collect();
        for q in &out {
            let proj: Complex64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= proj * qi;
            }
        }
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-10 {
            out.push(w.into_iter().map(|z| z / norm).collect());
        }
    }
    out
}

pub fn coupling_subspace(model: &SystemModel) -> CouplingSubspace {
    let mut basis = Vec::new();
    let scatterer: Vec<Vec<Complex64>> = model
        .couplings()
        .iter()
        .map(|c| c.scatterer_vector.clone())
        .collect();
    for v in orthonormalize(&scatterer) {
        basis.push(BasisVector {
            location: Location::Scatterer,
            amplitudes: v,
        });
    }
    for lead in model.leads() {
        let mut vectors: Vec<Vec<Complex64>> = model
            .couplings()
            .iter()
            .filter(|c| c.lead == lead.id)
            .map(|c| c.lead_vector.amplitudes().to_vec())
            .collect();
        for c in model.contacts() {
            if c.leads.0 == lead.id {
                vectors.push(c.vector_j.amplitudes().to_vec());
            }
            if c.leads.1 == lead.id {
                vectors.push(c.vector_k.amplitudes().to_vec());
            }
        }
        for v in orthonormalize(&vectors) {
            basis.push(BasisVector {
                location: Location::Lead(lead.id),
                amplitudes: LeadVector::from_dense(v).amplitudes().to_vec(),
            });
        }
    }

    let n = basis.len();
    let mut v_matrix = DMatrix::from_element(n, n, ZERO);
    for (a, ba) in basis.iter().enumerate() {
        for (b, bb) in basis.iter().enumerate() {
            let mut acc = ZERO;
            for c in model.couplings() {
                let lead = Location::Lead(c.lead);
                let (s, f) = (&c.scatterer_vector[..], c.lead_vector.amplitudes());
                acc += c.strength
                    * (ba.overlap(Location::Scatterer, s) * bb.overlap(lead, f).conj()
                        + ba.overlap(lead, f) * bb.overlap(Location::Scatterer, s).conj());
            }
            for c in model.contacts() {
                let (lj, lk) = (Location::Lead(c.leads.0), Location::Lead(c.leads.1));
                let (gj, gk) = (c.vector_j.amplitudes(), c.vector_k.amplitudes());
                acc += c.strength
                    * (ba.overlap(lj, gj) * bb.overlap(lk, gk).conj()
                        + ba.overlap(lk, gk) * bb.overlap(lj, gj).conj());
            }
            v_matrix[(a, b)] = acc;
        }
    }
    CouplingSubspace { basis, v_matrix }
}

/// Per-energy transition matrix on the open channels (ascending lead id).
#[derive(Clone, Debug, PartialEq)]
pub struct TMatrix {
    pub energy: f64,
    pub channels: Vec<LeadId>,
    pub entries: DMatrix<Complex64>,
}

impl TMatrix {
    fn position(&self, lead: LeadId) -> Option<usize> {
        self.channels.iter().position(|&c| c == lead)
    }

    /// `T_jk`, or `None` if either channel is closed.
    pub fn get(&self, j: LeadId, k: LeadId) -> Option<Complex64> {
        Some(self.entries[(self.position(j)?, self.position(k)?)])
    }

    /// `|T_jk|^2`, zero for closed channels.
    pub fn weight(&self, j: LeadId, k: LeadId) -> f64 {
        self.get(j, k).map_or(0.0, |t| t.norm_sqr())
    }
}

/// `S(E) = 1 - 2 pi i T(E)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SMatrix {
    pub energy: f64,
    pub channels: Vec<LeadId>,
    pub entries: DMatrix<Complex64>,
    pub unitarity_residual: f64,
}

impl SMatrix {
    pub fn get(&self, j: LeadId, k: LeadId) -> Option<Complex64> {
        let a = self.channels.iter().position(|&c| c == j)?;
        let b = self.channels.iter().position(|&c| c == k)?;
        Some(self.entries[(a, b)])
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ScatteringResiduals {
    /// `max |T - T* + 2 pi i T T*|`
    pub optical: f64,
    /// `max |T T* - T* T|`
    pub normality: f64,
    /// `max_l |sum_m |T_lm|^2 - sum_m |T_ml|^2|`
    pub rowcol: f64,
}

impl ScatteringResiduals {
    pub fn max(&self) -> f64 {
        self.optical.max(self.normality).max(self.rowcol)
    }
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn scattering_residuals(t: &TMatrix) -> ScatteringResiduals {
    let m = &t.entries;
    let adj = m.adjoint();
    let ttd = m * &adj;
    let tdt = &adj * m;
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let optical = max_abs(&(m - &adj + ttd.map(|z| z * two_pi_i)));
    let normality = max_abs(&(&ttd - &tdt));
    let n = m.nrows();
    let rowcol = (0..n)
        .map(|l| {
            let row: f64 = (0..n).map(|k| m[(l, k)].norm_sqr()).sum();
            let col: f64 = (0..n).map(|k| m[(k, l)].norm_sqr()).sum();
            (row - col).abs()
        })
        .fold(0.0, f64::max);
    ScatteringResiduals {
        optical,
        normality,
        rowcol,
    }
}

pub fn s_matrix(t: &TMatrix, tol: &Tolerances) -> Result<SMatrix, ScatteringError> {
    let n = t.entries.nrows();
    let s = DMatrix::identity(n, n) - t.entries.map(|z| z * Complex64::new(0.0, 2.0 * PI));
    let unitarity_residual = max_abs(&(&s * s.adjoint() - DMatrix::<Complex64>::identity(n, n)));
    if unitarity_residual > tol.tol_scatter {
        return Err(ScatteringError::Inconsistent {
            energy: t.energy,
            what: "unitarity",
            residual: unitarity_residual,
        });
    }
    Ok(SMatrix {
        energy: t.energy,
        channels: t.channels.clone(),
        entries: s,
        unitarity_residual,
    })
}

/// A model prepared for repeated on-shell solves.
#[derive(Clone, Debug)]
pub struct ScatteringSolver<'m> {
    model: &'m SystemModel,
    subspace: CouplingSubspace,
    scatterer_eigenvalues: Vec<f64>,
    tol: Tolerances,
}

impl<'m> ScatteringSolver<'m> {
    pub fn new(model: &'m SystemModel, tol: Tolerances) -> Self {
        let hs = model.scatterer().matrix.clone();
        let mut scatterer_eigenvalues: Vec<f64> = hs.symmetric_eigenvalues().iter().copied().collect();
        scatterer_eigenvalues.sort_by(f64::total_cmp);
        Self {
            model,
            subspace: coupling_subspace(model),
            scatterer_eigenvalues,
            tol,
        }
    }

    pub fn model(&self) -> &'m SystemModel {
        self.model
    }

    pub fn subspace(&self) -> &CouplingSubspace {
        &self.subspace
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn scatterer_eigenvalues(&self) -> &[f64] {
        &self.scatterer_eigenvalues
    }

    fn check_pole(&self, energy: f64) -> Result<(), ScatteringError> {
        let scale = self.model.scatterer().scale();
        if let Some(&ev) = self
            .scatterer_eigenvalues
            .iter()
            .find(|&&ev| (ev - energy).abs() <= self.tol.tol_pole * scale)
        {
            return Err(ScatteringError::Exceptional {
                energy,
                reason: format!("scatterer eigenvalue {ev}"),
            });
        }
        Ok(())
    }

    fn check_edges(&self, energy: f64) -> Result<(), ScatteringError> {
        for lead in self.model.leads() {
            let (lo, hi) = lead.band();
            if energy == lo || energy == hi {
                return Err(ScatteringError::Exceptional {
                    energy,
                    reason: format!("band edge of lead {}", lead.id),
                });
            }
        }
        Ok(())
    }

    /// `<b_a, (H0 - E - i0)^{-1} b_b>` over the coupling basis.
    pub fn g0_matrix(&self, energy: f64) -> Result<DMatrix<Complex64>, ScatteringError> {
        self.check_edges(energy)?;
        self.check_pole(energy)?;
        let n = self.subspace.dim();
        let mut g = DMatrix::from_element(n, n, ZERO);

        let scat = self.subspace.indices(Location::Scatterer);
        if !scat.is_empty() {
            let hs = &self.model.scatterer().matrix;
            let m = hs.nrows();
            let shifted = hs - DMatrix::<Complex64>::identity(m, m) * Complex64::new(energy, 0.0);
            let q = DMatrix::from_fn(m, scat.len(), |i, c| self.subspace.basis[scat[c]].amplitudes[i]);
            let x = shifted.lu().solve(&q).ok_or_else(|| ScatteringError::Exceptional {
                energy,
                reason: "singular scatterer resolvent".into(),
            })?;
            let block = q.adjoint() * x;
            for (r, &a) in scat.iter().enumerate() {
                for (c, &b) in scat.iter().enumerate() {
                    g[(a, b)] = block[(r, c)];
                }
            }
        }

        for lead in self.model.leads() {
            let idx = self.subspace.indices(Location::Lead(lead.id));
            if idx.is_empty() {
                continue;
            }
            let size = idx
                .iter()
                .map(|&a| self.subspace.basis[a].amplitudes.len())
                .max()
                .unwrap_or(0);
            let r = leads::resolvent_matrix(lead, energy, size)?;
            for &a in &idx {
                let fa = self.subspace.basis[a].lead_vector();
                for &b in &idx {
                    g[(a, b)] = leads::sandwich(&r, &fa, &self.subspace.basis[b].lead_vector());
                }
            }
        }
        Ok(g)
    }

    /// Coordinates `<b_a, psi0_{k,E}>` of the free eigenfunction of lead `k`.
    fn free_coordinates(&self, lead: &LeadSpec, energy: f64) -> Result<DVector<Complex64>, ScatteringError> {
        let mut p = DVector::from_element(self.subspace.dim(), ZERO);
        for a in self.subspace.indices(Location::Lead(lead.id)) {
            let fa = self.subspace.basis[a].lead_vector();
            p[a] = leads::generalized_fourier(lead, energy, &fa)?.conj();
        }
        Ok(p)
    }

    pub fn t_matrix(&self, energy: f64) -> Result<TMatrix, ScatteringError> {
        let channels = open_channels(self.model, energy);
        if channels.is_empty() {
            return Err(ScatteringError::NoOpenChannels { energy });
        }
        let nc = channels.len();
        let n = self.subspace.dim();
        if n == 0 {
            self.check_edges(energy)?;
            return Ok(TMatrix {
                energy,
                channels,
                entries: DMatrix::from_element(nc, nc, ZERO),
            });
        }
        let g = self.g0_matrix(energy)?;
        let v = &self.subspace.v_matrix;
        let system = DMatrix::<Complex64>::identity(n, n) + v * &g;

        let singular = system.clone().singular_values();
        let smax = singular.iter().copied().fold(0.0, f64::max);
        let smin = singular.iter().copied().fold(f64::INFINITY, f64::min);
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(condition <= self.tol.cond_max) {
            return Err(ScatteringError::NearSingular { energy, condition });
        }

        let mut p = DMatrix::from_element(n, nc, ZERO);
        for (col, &id) in channels.iter().enumerate() {
            let lead = self.model.lead(id).expect("open channel is a model lead");
            p.set_column(col, &self.free_coordinates(lead, energy)?);
        }
        let w = system
            .lu()
            .solve(&(v * &p))
            .ok_or(ScatteringError::NearSingular {
                energy,
                condition: f64::INFINITY,
            })?;
        let entries = p.adjoint() * w;
        let t = TMatrix {
            energy,
            channels,
            entries,
        };
        let res = scattering_residuals(&t);
        for (what, residual) in [("optical", res.optical), ("normality", res.normality)] {
            if !(residual <= self.tol.tol_scatter) {
                return Err(ScatteringError::Inconsistent {
                    energy,
                    what,
                    residual,
                });
            }
        }
        Ok(t)
    }

    /// `det(H_S - E) * det(1 + V G0(E))`: real and pole-free off the lead
    /// spectra, vanishing exactly at eigenvalues of `H0 + V`.
    pub fn secular_function(&self, energy: f64) -> Result<f64, ScatteringError> {
        let n = self.subspace.dim();
        let scatterer_det: f64 = self.scatterer_eigenvalues.iter().map(|ev| ev - energy).product();
        if n == 0 {
            return Ok(scatterer_det);
        }
        let g = self.g0_matrix(energy)?;
        let det = (DMatrix::<Complex64>::identity(n, n) + &self.subspace.v_matrix * g).determinant();
        Ok(det.re * scatterer_det)
    }

    /// Eigenvalues of `H0 + V` in `window`, which must avoid every band.
    pub fn bound_states(&self, window: (f64, f64), grid: usize) -> Result<Vec<f64>, ScatteringError> {
        let (a, b) = window;
        if !(a < b) || grid < 2 {
            return Err(ScatteringError::Precondition(format!(
                "bound-state window [{a}, {b}] with grid {grid}"
            )));
        }
        for lead in self.model.leads() {
            let (lo, hi) = lead.band();
            if a <= hi && b >= lo {
                return Err(ScatteringError::Precondition(format!(
                    "bound-state window [{a}, {b}] overlaps the band [{lo}, {hi}] of lead {}",
                    lead.id
                )));
            }
        }
        let eval = |e: f64| -> Result<f64, ScatteringError> {
            // step off scatterer poles, where the product form is 0 * inf
            let mut e = e;
            for _ in 0..8 {
                match self.secular_function(e) {
                    Err(err) if err.is_exceptional() => e += 1e-7 * (1.0 + e.abs()),
                    other => return other,
                }
            }
            self.secular_function(e)
        };
        let mut found = Vec::new();
        let step = (b - a) / (grid - 1) as f64;
        let mut prev_e = a;
        let mut prev_f = eval(a)?;
        if prev_f == 0.0 {
            found.push(a);
        }
        for i in 1..grid {
            let e = if i + 1 == grid { b } else { a + step * i as f64 };
            let f = eval(e)?;
            if f == 0.0 {
                found.push(e);
            } else if prev_f != 0.0 && prev_f.signum() != f.signum() {
                found.push(self.bisect(prev_e, e, prev_f, &eval)?);
            }
            prev_e = e;
            prev_f = f;
        }
        Ok(found)
    }

    fn bisect(
        &self,
        mut lo: f64,
        mut hi: f64,
        mut f_lo: f64,
        eval: &dyn Fn(f64) -> Result<f64, ScatteringError>,
    ) -> Result<f64, ScatteringError> {
        while hi - lo > 1e-11 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let f_mid = eval(mid)?;
            if f_mid == 0.0 {
                return Ok(mid);
            }
            if f_mid.signum() == f_lo.signum() {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Every gap of the lead spectra, including the two outer half-lines cut
    /// at a norm bound of `H0 + V`.
    pub fn bound_state_windows(&self) -> Vec<(f64, f64)> {
        let model = self.model;
        let hs_norm = self
            .scatterer_eigenvalues
            .iter()
            .map(|e| e.abs())
            .fold(0.0, f64::max);
        let lead_norm = model
            .leads()
            .iter()
            .map(|l| l.onsite.abs() + 2.0 * l.hopping)
            .fold(0.0, f64::max);
        let coupling: f64 = model.couplings().iter().map(|c| c.strength).sum::<f64>()
            + model.contacts().iter().map(|c| c.strength).sum::<f64>();
        let reach = hs_norm.max(lead_norm) + coupling + 1.0;

        let mut bands: Vec<(f64, f64)> = model.leads().iter().map(|l| l.band()).collect();
        bands.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in bands {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        let margin = |x: f64| 1e-9 * (1.0 + x.abs());
        let mut windows = Vec::new();
        let mut cursor = -reach;
        for (lo, hi) in merged {
            if lo - margin(lo) > cursor {
                windows.push((cursor, lo - margin(lo)));
            }
            cursor = hi + margin(hi);
        }
        if cursor < reach {
            windows.push((cursor, reach));
        }
        windows
    }

    /// Bound states over all spectral gaps.
    pub fn all_bound_states(&self, grid: usize) -> Result<Vec<f64>, ScatteringError> {
        let mut out = Vec::new();
        for w in self.bound_state_windows() {
            out.extend(self.bound_states(w, grid)?);
        }
        Ok(out)
    }
}

/// Coupling subspace, `G0` and `T` for a one-off evaluation.
pub fn g0_matrix(model: &SystemModel, energy: f64) -> Result<DMatrix<Complex64>, ScatteringError> {
    ScatteringSolver::new(model, Tolerances::default()).g0_matrix(energy)
}

pub fn t_matrix(model: &SystemModel, energy: f64) -> Result<TMatrix, ScatteringError> {
    ScatteringSolver::new(model, Tolerances::default()).t_matrix(energy)
}

pub fn bound_states(model: &SystemModel, window: (f64, f64), grid: usize) -> Result<Vec<f64>, ScatteringError> {
    ScatteringSolver::new(model, Tolerances::default()).bound_states(window, grid)
}

/// Single level coupled to two leads, the exactly solvable reference case.
#[derive(Clone, Debug, PartialEq)]
pub struct FriedrichsParams {
    pub level: f64,
    pub leads: [LeadSpec; 2],
    pub strengths: [f64; 2],
    /// Unit-modulus scatterer components of the two couplings.
    pub phases: [Complex64; 2],
    pub lead_vectors: [LeadVector; 2],
}

impl FriedrichsParams {
    pub fn from_model(model: &SystemModel) -> Result<Self, ScatteringError> {
        let fail = |msg: &str| Err(ScatteringError::Precondition(msg.to_string()));
        if model.scatterer().dim() != 1 {
            return fail("reference model needs a one-level scatterer");
        }
        if model.leads().len() != 2 {
            return fail("reference model needs exactly two leads");
        }
        if !model.contacts().is_empty() {
            return fail("reference model has no direct contacts");
        }
        let leads = [model.leads()[0].clone(), model.leads()[1].clone()];
        let mut strengths = [0.0; 2];
        let mut phases = [ONE; 2];
        let mut vectors = [LeadVector::from_dense(vec![]), LeadVector::from_dense(vec![])];
        for (i, lead) in leads.iter().enumerate() {
            let terms: Vec<_> = model.couplings().iter().filter(|c| c.lead == lead.id).collect();
            match terms.as_slice() {
                [] => {}
                [c] => {
                    strengths[i] = c.strength;
                    phases[i] = c.scatterer_vector[0];
                    vectors[i] = c.lead_vector.clone();
                }
                _ => return fail("reference model has at most one coupling per lead"),
            }
        }
        Ok(Self {
            level: model.scatterer().matrix[(0, 0)].re,
            leads,
            strengths,
            phases,
            lead_vectors: vectors,
        })
    }
}

/// Closed form `T_jk = v_j v_k conj(s_j) s_k f_j(E) conj(f_k(E)) / D(E)` with
/// `D(E) = E - level + sum_m v_m^2 <f_m, (H_m - E - i0)^{-1} f_m>`.
pub fn friedrichs_reference_t(params: &FriedrichsParams, energy: f64) -> Result<DMatrix<Complex64>, ScatteringError> {
    let mut fourier = [ZERO; 2];
    let mut self_energy = ZERO;
    for i in 0..2 {
        let lead = &params.leads[i];
        if !lead.is_open(energy) {
            return Err(ScatteringError::Precondition(format!(
                "E = {energy} is not open in lead {}",
                lead.id
            )));
        }
        let f = &params.lead_vectors[i];
        if params.strengths[i] > 0.0 {
            fourier[i] = leads::generalized_fourier(lead, energy, f)?;
            self_energy += params.strengths[i].powi(2) * leads::lead_resolvent(lead, energy, f, f)?;
        }
    }
    let denom = Complex64::new(energy - params.level, 0.0) + self_energy;
    if denom.norm() == 0.0 {
        return Err(ScatteringError::Exceptional {
            energy,
            reason: "vanishing Friedrichs denominator".into(),
        });
    }
    Ok(DMatrix::from_fn(2, 2, |j, k| {
        params.strengths[j]
            * params.strengths[k]
            * params.phases[j].conj()
            * params.phases[k]
            * fourier[j]
            * fourier[k].conj()
            / denom
    }))
}
