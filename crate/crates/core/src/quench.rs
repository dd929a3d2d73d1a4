//! Finite-lead quench oracle.
//!
//! Each lead is cut to `L` sites with a Dirichlet end. The leads start in
//! their own grand-canonical states, the scatterer in `occupation * 1`, the
//! coupling is switched on at `t = 0` and the one-particle density evolves
//! exactly as `rho(t) = e^{-iHt} F0 e^{iHt}`. Currents are read off before the
//! ballistic front returns from the far ends.
//!
//! Sign conventions match [`crate::transport`]: `j_k = e dN_k/dt` and `Phi_k`
//! is the energy leaving lead `k`.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use faer::{c64, Mat, Side};

use crate::model::{LeadId, ReservoirState, SystemModel};
use crate::scattering::{ScatteringError, ScatteringSolver, Tolerances};
use crate::transport::{fermi_dirac, transport, QuadratureSettings, TransportError};

/// Safety factor on the echo time `L / (2 max t)`.
pub const ECHO_SAFETY: f64 = 0.8;
/// Minimum number of lead sites beyond the last coupled site.
pub const LEAD_MARGIN: usize = 10;

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum QuenchError {
    #[error("lead length {got} too small: need at least {required}")]
    LeadTooShort { required: usize, got: usize },
    #[error("scatterer occupation {0} outside [0, 1]")]
    Occupation(f64),
    #[error("{got} reservoir states for {leads} leads")]
    StateCount { got: usize, leads: usize },
    #[error("diagonalization failed")]
    Diagonalization,
    #[error("eigenvector matrix not unitary (residual {0:e})")]
    NotUnitary(f64),
    #[error("window end {t2} beyond the echo bound {bound}")]
    EchoBound { t2: f64, bound: f64 },
    #[error("invalid window: {0}")]
    Window(String),
    #[error("current not real at t = {time}: imaginary part {imag:e}")]
    NotReal { time: f64, imag: f64 },
    #[error("charge not conserved at t = {time}: residual {residual:e}")]
    Conservation { time: f64, residual: f64 },
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
}

/// Sparse self-adjoint operator, entries keyed by `(row, col)`.
type Sparse = BTreeMap<(usize, usize), c64>;

fn add(m: &mut Sparse, i: usize, j: usize, z: c64) {
    *m.entry((i, j)).or_insert(ZERO) += z;
}

fn commutator(a: &Sparse, b: &Sparse) -> Sparse {
    let mut out = Sparse::new();
    for (&(i, l), &x) in a {
        for (&(l2, j), &y) in b.range((l, 0)..(l + 1, 0)) {
            debug_assert_eq!(l, l2);
            add(&mut out, i, j, x * y);
        }
    }
    for (&(i, l), &x) in b {
        for (&(_, j), &y) in a.range((l, 0)..(l + 1, 0)) {
            add(&mut out, i, j, -x * y);
        }
    }
    out.retain(|_, z| *z != ZERO);
    out
}

/// Truncated model `H = H0 + V` on `M + N L` sites, diagonalized once.
pub struct FiniteSystem {
    model: SystemModel,
    states: Vec<ReservoirState>,
    lead_length: usize,
    occupation: f64,
    /// First index of each lead block, leads in ascending id order.
    offsets: Vec<usize>,
    h0: Sparse,
    v: Sparse,
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<c64>,
    /// `U^dagger F0 U`.
    density: Mat<c64>,
}

/// Sparse entries of `H0` and `V`; lead site `n` of block `b` sits at
/// `offsets[b] + n - 1`.
fn assemble(model: &SystemModel, lead_length: usize) -> (Vec<usize>, Sparse, Sparse) {
    let m = model.scatterer().dim();
    let offsets: Vec<usize> = (0..model.leads().len()).map(|b| m + b * lead_length).collect();
    let mut h0 = Sparse::new();
    for i in 0..m {
        for j in 0..m {
            let z = model.scatterer().matrix[(i, j)];
            if z != ZERO {
                add(&mut h0, i, j, z);
            }
        }
    }
    for (b, lead) in model.leads().iter().enumerate() {
        let o = offsets[b];
        for n in 0..lead_length {
            if lead.onsite != 0.0 {
                add(&mut h0, o + n, o + n, c64::new(lead.onsite, 0.0));
            }
            if n + 1 < lead_length {
                add(&mut h0, o + n, o + n + 1, c64::new(lead.hopping, 0.0));
                add(&mut h0, o + n + 1, o + n, c64::new(lead.hopping, 0.0));
            }
        }
    }
    let site = |id: LeadId, n: usize| offsets[model.lead_index(id).expect("lead exists")] + n - 1;
    let mut v = Sparse::new();
    for c in model.couplings() {
        for (a, &s) in c.scatterer_vector.iter().enumerate() {
            for (n, &f) in c.lead_vector.amplitudes().iter().enumerate() {
                let z = c.strength * s * f.conj();
                if z != ZERO {
                    let i = site(c.lead, n + 1);
                    add(&mut v, a, i, z);
                    add(&mut v, i, a, z.conj());
                }
            }
        }
    }
    for c in model.contacts() {
        for (n, &gj) in c.vector_j.amplitudes().iter().enumerate() {
            for (l, &gk) in c.vector_k.amplitudes().iter().enumerate() {
                let z = c.strength * gj * gk.conj();
                if z != ZERO {
                    let (i, j) = (site(c.leads.0, n + 1), site(c.leads.1, l + 1));
                    add(&mut v, i, j, z);
                    add(&mut v, j, i, z.conj());
                }
            }
        }
    }
    v.retain(|_, z| *z != ZERO);
    (offsets, h0, v)
}

fn dense(dim: usize, m: &Sparse) -> Mat<c64> {
    let mut out = Mat::<c64>::zeros(dim, dim);
    for (&(i, j), &z) in m {
        out[(i, j)] = z;
    }
    out
}

fn required_length(model: &SystemModel) -> usize {
    let deepest = model
        .leads()
        .iter()
        .flat_map(|l| l.coupling_sites.iter().copied())
        .max()
        .unwrap_or(0);
    deepest + LEAD_MARGIN
}

fn check_length(model: &SystemModel, lead_length: usize) -> Result<(), QuenchError> {
    let required = required_length(model);
    if lead_length < required {
        return Err(QuenchError::LeadTooShort {
            required,
            got: lead_length,
        });
    }
    Ok(())
}

/// Eigenvalues of the truncated `H`, ascending.
pub fn finite_spectrum(model: &SystemModel, lead_length: usize) -> Result<Vec<f64>, QuenchError> {
    check_length(model, lead_length)?;
    let dim = model.scatterer().dim() + model.leads().len() * lead_length;
    let (_, h0, v) = assemble(model, lead_length);
    let mut h = h0;
    for (&(i, j), &z) in &v {
        add(&mut h, i, j, z);
    }
    if h.values().all(|z| z.im == 0.0) {
        let mut real = Mat::<f64>::zeros(dim, dim);
        for (&(i, j), &z) in &h {
            real[(i, j)] = z.re;
        }
        real.self_adjoint_eigenvalues(Side::Lower)
    } else {
        dense(dim, &h).self_adjoint_eigenvalues(Side::Lower)
    }
    .map_err(|_| QuenchError::Diagonalization)
}

/// Eigenvalues of the truncated `H` outside every lead band.
pub fn out_of_band_eigenvalues(model: &SystemModel, lead_length: usize) -> Result<Vec<f64>, QuenchError> {
    Ok(finite_spectrum(model, lead_length)?
        .into_iter()
        .filter(|&e| {
            model.leads().iter().all(|l| {
                let (lo, hi) = l.band();
                e < lo || e > hi
            })
        })
        .collect())
}

/// `f(H_j)` of a Dirichlet chain, from its sine eigenvectors.
fn lead_density(lead_length: usize, onsite: f64, hopping: f64, state: &ReservoirState) -> Mat<f64> {
    let l = lead_length;
    let scale = (2.0 / (l + 1) as f64).sqrt();
    let phi = Mat::<f64>::from_fn(l, l, |n, m| {
        scale * (PI * ((n + 1) * (m + 1)) as f64 / (l + 1) as f64).sin()
    });
    let occ: Vec<f64> = (1..=l)
        .map(|m| {
            let e = onsite + 2.0 * hopping * (PI * m as f64 / (l + 1) as f64).cos();
            fermi_dirac(state, e)
        })
        .collect();
    let weighted = Mat::<f64>::from_fn(l, l, |n, m| phi[(n, m)] * occ[m]);
    &weighted * phi.transpose()
}

impl FiniteSystem {
    /// Builds and diagonalizes the truncated system. `states[i]` belongs to
    /// the `i`-th lead in ascending id order.
    pub fn build(
        model: &SystemModel,
        states: &[ReservoirState],
        lead_length: usize,
        occupation: f64,
    ) -> Result<Self, QuenchError> {
        check_length(model, lead_length)?;
        if !(0.0..=1.0).contains(&occupation) {
            return Err(QuenchError::Occupation(occupation));
        }
        if states.len() != model.leads().len() {
            return Err(QuenchError::StateCount {
                got: states.len(),
                leads: model.leads().len(),
            });
        }
        let m = model.scatterer().dim();
        let dim = m + model.leads().len() * lead_length;
        let (offsets, h0, v) = assemble(model, lead_length);

        let mut h = h0.clone();
        for (&(i, j), &z) in &v {
            add(&mut h, i, j, z);
        }
        let (eigenvalues, eigenvectors) = if h.values().all(|z| z.im == 0.0) {
            let mut real = Mat::<f64>::zeros(dim, dim);
            for (&(i, j), &z) in &h {
                real[(i, j)] = z.re;
            }
            let evd = real
                .self_adjoint_eigen(Side::Lower)
                .map_err(|_| QuenchError::Diagonalization)?;
            let s = evd.S().column_vector();
            let u = evd.U();
            (
                (0..dim).map(|i| s[i]).collect::<Vec<_>>(),
                Mat::<c64>::from_fn(dim, dim, |i, j| c64::new(u[(i, j)], 0.0)),
            )
        } else {
            let evd = dense(dim, &h)
                .self_adjoint_eigen(Side::Lower)
                .map_err(|_| QuenchError::Diagonalization)?;
            let s = evd.S().column_vector();
            ((0..dim).map(|i| s[i].re).collect::<Vec<_>>(), evd.U().to_owned())
        };

        let unitarity = {
            let g = eigenvectors.adjoint() * &eigenvectors;
            let mut r = 0.0f64;
            for j in 0..dim {
                for i in 0..dim {
                    let d = if i == j { g[(i, j)] - 1.0 } else { g[(i, j)] };
                    r = r.max(d.norm());
                }
            }
            r
        };
        if unitarity > 1e-10 * dim as f64 {
            return Err(QuenchError::NotUnitary(unitarity));
        }

        let mut f0 = Mat::<c64>::zeros(dim, dim);
        for i in 0..m {
            f0[(i, i)] = c64::new(occupation, 0.0);
        }
        for (b, lead) in model.leads().iter().enumerate() {
            let block = lead_density(lead_length, lead.onsite, lead.hopping, &states[b]);
            let o = offsets[b];
            for j in 0..lead_length {
                for i in 0..lead_length {
                    f0[(o + i, o + j)] = c64::new(block[(i, j)], 0.0);
                }
            }
        }
        let density = eigenvectors.adjoint() * (&f0 * &eigenvectors);

        Ok(Self {
            model: model.clone(),
            states: states.to_vec(),
            lead_length,
            occupation,
            offsets,
            h0,
            v,
            eigenvalues,
            eigenvectors,
            density,
        })
    }

    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    pub fn lead_length(&self) -> usize {
        self.lead_length
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn occupation(&self) -> f64 {
        self.occupation
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Dense `H0`.
    pub fn h0(&self) -> Mat<c64> {
        dense(self.dim(), &self.h0)
    }

    /// Dense `V`.
    pub fn v(&self) -> Mat<c64> {
        dense(self.dim(), &self.v)
    }

    /// Index range of lead `id`.
    pub fn lead_range(&self, id: LeadId) -> Option<std::ops::Range<usize>> {
        let b = self.model.lead_index(id)?;
        Some(self.offsets[b]..self.offsets[b] + self.lead_length)
    }

    pub fn scatterer_range(&self) -> std::ops::Range<usize> {
        0..self.model.scatterer().dim()
    }

    /// `L / (2 max t)` scaled by [`ECHO_SAFETY`].
    pub fn echo_bound(&self) -> f64 {
        let t = self.model.leads().iter().map(|l| l.hopping).fold(0.0, f64::max);
        ECHO_SAFETY * self.lead_length as f64 / (2.0 * t)
    }

    fn projector(&self, range: std::ops::Range<usize>) -> Sparse {
        range.map(|i| ((i, i), c64::new(1.0, 0.0))).collect()
    }

    fn lead_hamiltonian(&self, range: std::ops::Range<usize>) -> Sparse {
        self.h0
            .iter()
            .filter(|((i, j), _)| range.contains(i) && range.contains(j))
            .map(|(&k, &z)| (k, z))
            .collect()
    }

    /// Evaluator for `[V, Pi_k]`, `[V, H_k]` of every lead and `[V, Pi_S]`.
    pub fn probe(&self) -> CurrentProbe<'_> {
        let mut ops = Vec::new();
        for lead in self.model.leads() {
            let range = self.lead_range(lead.id).expect("lead exists");
            ops.push(commutator(&self.v, &self.projector(range.clone())));
            ops.push(commutator(&self.v, &self.lead_hamiltonian(range)));
        }
        ops.push(commutator(&self.v, &self.projector(self.scatterer_range())));

        let sites: Vec<usize> = ops
            .iter()
            .flat_map(|op| op.keys().flat_map(|&(i, j)| [i, j]))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let local: BTreeMap<usize, usize> = sites.iter().enumerate().map(|(a, &s)| (s, a)).collect();
        let ops = ops
            .into_iter()
            .map(|op| op.into_iter().map(|((i, j), z)| (local[&i], local[&j], z)).collect())
            .collect();
        let rows = Mat::<c64>::from_fn(sites.len(), self.dim(), |a, b| self.eigenvectors[(sites[a], b)]);
        CurrentProbe {
            system: self,
            rows,
            ops,
        }
    }

    /// Charge and energy current of lead `id` at time `t`.
    pub fn transient_current(&self, id: LeadId, t: f64) -> Result<(f64, f64), QuenchError> {
        let b = self
            .model
            .lead_index(id)
            .ok_or_else(|| QuenchError::Window(format!("unknown lead {id}")))?;
        let sample = self.probe().sample(t)?;
        Ok((sample.charge[b], sample.energy[b]))
    }

    /// Time-averages over `samples` uniform points of `window` and compares
    /// with the Landauer-Buttiker currents.
    pub fn steady_compare(
        &self,
        window: (f64, f64),
        samples: usize,
        settings: &QuadratureSettings,
    ) -> Result<QuenchReport, QuenchError> {
        let (t1, t2) = window;
        if !(t1 >= 0.0 && t2 > t1) {
            return Err(QuenchError::Window(format!("need 0 <= T1 < T2, got [{t1}, {t2}]")));
        }
        if samples < 2 {
            return Err(QuenchError::Window("need at least 2 samples".into()));
        }
        let bound = self.echo_bound();
        if t2 > bound {
            return Err(QuenchError::EchoBound { t2, bound });
        }
        let probe = self.probe();
        let times: Vec<f64> = (0..samples)
            .map(|i| t1 + (t2 - t1) * i as f64 / (samples - 1) as f64)
            .collect();
        let series = times
            .iter()
            .map(|&t| probe.sample(t))
            .collect::<Result<Vec<_>, _>>()?;

        let n = self.model.leads().len();
        let stats = |pick: &dyn Fn(&CurrentSample) -> f64| {
            let values: Vec<f64> = series.iter().map(pick).collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            (mean, max - min)
        };
        let charge: Vec<(f64, f64)> = (0..n).map(|k| stats(&|s: &CurrentSample| s.charge[k])).collect();
        let energy: Vec<(f64, f64)> = (0..n).map(|k| stats(&|s: &CurrentSample| s.energy[k])).collect();

        let solver = ScatteringSolver::new(&self.model, Tolerances::default());
        let reference = transport(&solver, &self.states, settings)?;
        let bound_states = solver.all_bound_states(2000)?;

        let deviation = |mean: f64, lb: f64| {
            if lb.abs() > 1e-14 {
                (mean - lb).abs() / lb.abs()
            } else {
                (mean - lb).abs()
            }
        };
        Ok(QuenchReport {
            leads: self.model.leads().iter().map(|l| l.id).collect(),
            lead_length: self.lead_length,
            window,
            echo_bound: bound,
            times,
            charge_mean: charge.iter().map(|c| c.0).collect(),
            charge_band: charge.iter().map(|c| c.1).collect(),
            energy_mean: energy.iter().map(|c| c.0).collect(),
            energy_band: energy.iter().map(|c| c.1).collect(),
            charge_reference: reference.charge_currents.clone(),
            energy_reference: reference.energy_currents.clone(),
            charge_deviation: (0..n)
                .map(|k| deviation(charge[k].0, reference.charge_currents[k]))
                .collect(),
            energy_deviation: (0..n)
                .map(|k| deviation(energy[k].0, reference.energy_currents[k]))
                .collect(),
            bound_states,
            series,
        })
    }
}

/// Currents at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct CurrentSample {
    pub time: f64,
    /// Per lead, ascending id.
    pub charge: Vec<f64>,
    pub energy: Vec<f64>,
    /// `e dN_S/dt`.
    pub scatterer_rate: f64,
}

/// Precomputed eigenvector rows at the sites touched by the current operators.
pub struct CurrentProbe<'a> {
    system: &'a FiniteSystem,
    rows: Mat<c64>,
    ops: Vec<Vec<(usize, usize, c64)>>,
}

impl CurrentProbe<'_> {
    /// Block of `rho(t)` on the probed sites, made exactly self-adjoint.
    fn local_density(&self, t: f64) -> Mat<c64> {
        let phases: Vec<c64> = self
            .system
            .eigenvalues
            .iter()
            .map(|&l| c64::from_polar(1.0, -l * t))
            .collect();
        let q = Mat::<c64>::from_fn(self.rows.nrows(), self.rows.ncols(), |a, b| {
            self.rows[(a, b)] * phases[b]
        });
        let rho = &q * (&self.system.density * q.adjoint());
        let n = rho.nrows();
        Mat::<c64>::from_fn(n, n, |i, j| (rho[(i, j)] + rho[(j, i)].conj()) * 0.5)
    }

    pub fn sample(&self, t: f64) -> Result<CurrentSample, QuenchError> {
        let rho = self.local_density(t);
        // Tr(rho A) for anti-Hermitian A is purely imaginary
        let trace = |op: &[(usize, usize, c64)]| -> c64 { op.iter().map(|&(i, j, a)| a * rho[(j, i)]).sum() };
        let mut values = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let z = trace(op);
            let scale = op.iter().map(|e| e.2.norm()).sum::<f64>().max(1.0);
            if z.re.abs() > 1e-12 * scale {
                return Err(QuenchError::NotReal { time: t, imag: z.re });
            }
            values.push(z.im);
        }
        let e = self.system.model.charge();
        let n = self.system.model.leads().len();
        // i Tr(rho A) = -Im Tr(rho A) for the charge, -i Tr(rho A) = Im for the energy
        let charge: Vec<f64> = (0..n).map(|k| -e * values[2 * k]).collect();
        let energy: Vec<f64> = (0..n).map(|k| values[2 * k + 1]).collect();
        let scatterer_rate = -e * values[2 * n];
        let residual = charge.iter().sum::<f64>() + scatterer_rate;
        if residual.abs() > 1e-10 {
            return Err(QuenchError::Conservation { time: t, residual });
        }
        Ok(CurrentSample {
            time: t,
            charge,
            energy,
            scatterer_rate,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuenchReport {
    pub leads: Vec<LeadId>,
    pub lead_length: usize,
    pub window: (f64, f64),
    pub echo_bound: f64,
    pub times: Vec<f64>,
    pub series: Vec<CurrentSample>,
    pub charge_mean: Vec<f64>,
    /// Max minus min over the window.
    pub charge_band: Vec<f64>,
    pub energy_mean: Vec<f64>,
    pub energy_band: Vec<f64>,
    pub charge_reference: Vec<f64>,
    pub energy_reference: Vec<f64>,
    pub charge_deviation: Vec<f64>,
    pub energy_deviation: Vec<f64>,
    pub bound_states: Vec<f64>,
}

impl QuenchReport {
    /// Bound states allow a persistent oscillating component.
    pub fn bound_state_warning(&self) -> bool {
        !self.bound_states.is_empty()
    }
}
