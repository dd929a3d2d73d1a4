//! Landauer-Buttiker currents and entropy production.
//!
//! For reservoirs in states `(beta_k, mu_k)` and Fermi functions `f_k`:
//!
//! ```text
//! I_k   = 2 pi  int dE sum_j (f_k - f_j) |T_kj|^2        particle current
//! j_k   = -e I_k                                          charge current
//! Phi_k = 2 pi  int dE sum_j (f_k - f_j) E |T_kj|^2      energy current
//! sigma = -sum_k beta_k (Phi_k - mu_k I_k)
//! ```
//!
//! All currents are positive when flowing out of the reservoir. Every
//! quantity is integrated in one pass over the same quadrature nodes.

pub mod quadrature;

use std::f64::consts::PI;

pub use quadrature::{
    integrate_spectral, QuadratureDiagnostics, QuadratureError, QuadratureSettings, SkippedNode,
};

use crate::model::{LeadId, ReservoirState, SystemModel};
use crate::scattering::{ScatteringError, ScatteringSolver, Tolerances};

/// Integrated transmission below which a channel counts as trivial.
pub const CHANNEL_FLOOR: f64 = 1e-10;
/// Entropy production above which it counts as strictly positive.
pub const POSITIVITY_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TransportError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
    #[error("{0}")]
    Precondition(String),
}

/// Occupation `1 / (1 + exp(beta (E - mu)))`, evaluated without overflow.
pub fn fermi_dirac(state: &ReservoirState, energy: f64) -> f64 {
    fermi(state.scaled_energy(energy))
}

/// `1 / (1 + e^x)`.
pub fn fermi(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Entropy production computed three ways.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyProduction {
    /// From the integrated currents.
    pub from_currents: f64,
    /// Direct integral of `-2 pi sum (f(x_k) - f(x_j)) x_k |T_kj|^2`.
    pub direct: f64,
    /// Symmetrized integrand; equals the others only when `|T_kj| = |T_jk|`.
    pub symmetrized: f64,
}

impl EntropyProduction {
    /// Largest pairwise deviation among the three routes.
    pub fn max_deviation(&self) -> f64 {
        let (a, b, c) = (self.from_currents, self.direct, self.symmetrized);
        (a - b).abs().max((a - c).abs()).max((b - c).abs())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportResult {
    /// Lead ids, ascending; all per-lead vectors follow this order.
    pub leads: Vec<LeadId>,
    pub states: Vec<ReservoirState>,
    pub charge_currents: Vec<f64>,
    pub energy_currents: Vec<f64>,
    pub particle_currents: Vec<f64>,
    pub entropy: EntropyProduction,
    /// `int |T_kj(E)|^2 dE`, row `k`, column `j`.
    pub channel_weights: Vec<Vec<f64>>,
    pub diagnostics: QuadratureDiagnostics,
}

impl TransportResult {
    pub fn charge_sum(&self) -> f64 {
        self.charge_currents.iter().sum()
    }

    pub fn energy_sum(&self) -> f64 {
        self.energy_currents.iter().sum()
    }
}

fn check_states(model: &SystemModel, states: &[ReservoirState]) -> Result<(), TransportError> {
    if states.len() != model.leads().len() {
        return Err(TransportError::Precondition(format!(
            "{} reservoir states for {} leads",
            states.len(),
            model.leads().len()
        )));
    }
    Ok(())
}

/// Evaluates every current, the entropy production routes and the channel
/// weights in a single adaptive pass. `states[i]` belongs to the `i`-th lead
/// in ascending id order.
pub fn transport(
    solver: &ScatteringSolver<'_>,
    states: &[ReservoirState],
    settings: &QuadratureSettings,
) -> Result<TransportResult, TransportError> {
    let model = solver.model();
    check_states(model, states)?;
    let n = model.leads().len();
    let ids: Vec<LeadId> = model.leads().iter().map(|l| l.id).collect();

    // layout: I_k (n), Phi_k (n), sigma direct, sigma symmetrized, weights (n*n)
    let dim = 2 * n + 2 + n * n;
    let controlled = 2 * n;
    let breakpoints: Vec<f64> = states.iter().map(|s| s.mu).collect();
    let intervals = quadrature::spectral_intervals(model, &breakpoints);

    let integral = quadrature::integrate(&intervals, dim, controlled, settings, |energy| {
        let mut out = vec![0.0; dim];
        let t = match solver.t_matrix(energy) {
            Ok(t) => t,
            Err(ScatteringError::NoOpenChannels { .. }) => return Ok(out),
            Err(e) => return Err(e),
        };
        let x: Vec<f64> = states.iter().map(|s| s.scaled_energy(energy)).collect();
        let f: Vec<f64> = x.iter().map(|&x| fermi(x)).collect();
        for (a, &ka) in t.channels.iter().enumerate() {
            let k = model.lead_index(ka).expect("channel is a lead");
            for (b, &jb) in t.channels.iter().enumerate() {
                let j = model.lead_index(jb).expect("channel is a lead");
                let w = t.entries[(a, b)].norm_sqr();
                out[2 * n + 2 + k * n + j] = w;
                if j == k {
                    continue;
                }
                let df = f[k] - f[j];
                out[k] += 2.0 * PI * df * w;
                out[n + k] += 2.0 * PI * df * energy * w;
                out[2 * n] -= 2.0 * PI * df * x[k] * w;
                out[2 * n + 1] += PI * (f[j] - f[k]) * (x[k] - x[j]) * w;
            }
        }
        Ok(out)
    })?;

    let v = &integral.values;
    let particle_currents = v[..n].to_vec();
    let energy_currents = v[n..2 * n].to_vec();
    let charge_currents = particle_currents.iter().map(|i| -model.charge() * i).collect();
    let from_currents = -(0..n)
        .map(|k| states[k].beta * (energy_currents[k] - states[k].mu * particle_currents[k]))
        .sum::<f64>();
    let channel_weights = (0..n)
        .map(|k| v[2 * n + 2 + k * n..2 * n + 2 + (k + 1) * n].to_vec())
        .collect();
    Ok(TransportResult {
        leads: ids,
        states: states.to_vec(),
        charge_currents,
        energy_currents,
        particle_currents,
        entropy: EntropyProduction {
            from_currents,
            direct: v[2 * n],
            symmetrized: v[2 * n + 1],
        },
        channel_weights,
        diagnostics: integral.diagnostics,
    })
}

fn solve(
    model: &SystemModel,
    states: &[ReservoirState],
    tol_quad: f64,
) -> Result<TransportResult, TransportError> {
    let solver = ScatteringSolver::new(model, Tolerances::default());
    let settings = QuadratureSettings {
        tol_quad,
        ..Default::default()
    };
    transport(&solver, states, &settings)
}

/// Charge current out of each lead.
pub fn charge_currents(model: &SystemModel, states: &[ReservoirState], tol_quad: f64) -> Result<Vec<f64>, TransportError> {
    Ok(solve(model, states, tol_quad)?.charge_currents)
}

/// Energy current out of each lead.
pub fn energy_currents(model: &SystemModel, states: &[ReservoirState], tol_quad: f64) -> Result<Vec<f64>, TransportError> {
    Ok(solve(model, states, tol_quad)?.energy_currents)
}

pub fn entropy_production(
    model: &SystemModel,
    states: &[ReservoirState],
    tol_quad: f64,
) -> Result<EntropyProduction, TransportError> {
    Ok(solve(model, states, tol_quad)?.entropy)
}

/// Whether the entropy production must be strictly positive, and whether it is.
#[derive(Clone, Debug, PartialEq)]
pub struct PositivityVerdict {
    /// Ordered pairs `(k, j)`, `k != j`, with `int |T_kj|^2 dE > CHANNEL_FLOOR`.
    pub nontrivial_channels: Vec<(LeadId, LeadId)>,
    /// Unordered pairs `(j, k)`, `j < k`, whose reservoir states differ.
    pub differing_pairs: Vec<(LeadId, LeadId)>,
    pub predicted_strict_positive: bool,
    pub sigma: f64,
    /// False only if strict positivity was predicted but not observed, or
    /// `sigma` is negative beyond rounding.
    pub holds: bool,
}

pub fn verdict_from(result: &TransportResult) -> PositivityVerdict {
    let n = result.leads.len();
    let mut nontrivial_channels = Vec::new();
    for k in 0..n {
        for j in 0..n {
            if j != k && result.channel_weights[k][j] > CHANNEL_FLOOR {
                nontrivial_channels.push((result.leads[k], result.leads[j]));
            }
        }
    }
    let mut differing_pairs = Vec::new();
    for j in 0..n {
        for k in j + 1..n {
            if result.states[j] != result.states[k] {
                differing_pairs.push((result.leads[j], result.leads[k]));
            }
        }
    }
    let predicted_strict_positive = nontrivial_channels.iter().any(|&(k, j)| {
        differing_pairs.contains(&(k.min(j), k.max(j)))
    });
    let sigma = result.entropy.direct;
    let scale = result.entropy.from_currents.abs().max(sigma.abs()).max(1.0);
    let holds = sigma >= -1e-12 * scale && (!predicted_strict_positive || sigma > POSITIVITY_FLOOR);
    PositivityVerdict {
        nontrivial_channels,
        differing_pairs,
        predicted_strict_positive,
        sigma,
        holds,
    }
}

pub fn positivity_verdict(
    model: &SystemModel,
    states: &[ReservoirState],
    tol_quad: f64,
) -> Result<PositivityVerdict, TransportError> {
    Ok(verdict_from(&solve(model, states, tol_quad)?))
}
