//! Adaptive Gauss-Legendre quadrature over the open-channel energy axis.
//!
//! The energy axis is cut at every band edge (and any extra breakpoints) into
//! intervals on which the set of open channels is constant. Each interval
//! `[a, b]` is mapped by `E = c - h cos(theta)`, which turns the square-root
//! behaviour of the integrand at band edges into a smooth function of
//! `theta`. Panels in `theta` are bisected until the two-halves estimate agrees
//! with the whole-panel estimate.

use crate::model::SystemModel;
use crate::scattering::ScatteringError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSettings {
    /// Absolute tolerance on each controlled component of the integral.
    pub tol_quad: f64,
    /// Gauss-Legendre points per panel.
    pub order: usize,
    /// Maximum number of bisections of a single panel.
    pub max_depth: u32,
    /// Hard cap on integrand evaluations.
    pub max_evaluations: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            tol_quad: 1e-8,
            order: 32,
            max_depth: 30,
            max_evaluations: 2_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum QuadratureError {
    #[error(
        "quadrature did not converge: error {error:e} on [{lo}, {hi}] after {evaluations} evaluations"
    )]
    NotConverged {
        lo: f64,
        hi: f64,
        error: f64,
        evaluations: usize,
    },
    #[error(transparent)]
    Integrand(#[from] ScatteringError),
}

/// An energy the integrand could not be evaluated at, and what was done.
#[derive(Clone, Debug, PartialEq)]
pub struct SkippedNode {
    pub energy: f64,
    /// Energy actually used, `None` if the node was dropped.
    pub shifted_to: Option<f64>,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadratureDiagnostics {
    pub evaluations: usize,
    pub panels: usize,
    pub error_estimate: f64,
    pub skipped: Vec<SkippedNode>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Integral {
    pub values: Vec<f64>,
    pub diagnostics: QuadratureDiagnostics,
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) by the three-term recurrence, and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Maximal intervals of the union of lead bands on which the open-channel set
/// is constant, further cut at `breakpoints`.
pub fn spectral_intervals(model: &SystemModel, breakpoints: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts = model.band_edges();
    let (lo, hi) = model.spectral_hull();
    cuts.extend(breakpoints.iter().copied().filter(|&x| x > lo && x < hi && x.is_finite()));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .map(|w| (w[0], w[1]))
        .filter(|&(a, b)| {
            let mid = 0.5 * (a + b);
            model.leads().iter().any(|l| l.is_open(mid))
        })
        .collect()
}

struct Panel {
    interval: usize,
    lo: f64,
    hi: f64,
    depth: u32,
    estimate: Vec<f64>,
}

struct Integrator<'a, F> {
    integrand: F,
    dim: usize,
    intervals: &'a [(f64, f64)],
    nodes: Vec<f64>,
    weights: Vec<f64>,
    diagnostics: QuadratureDiagnostics,
    max_evaluations: usize,
}

impl<F> Integrator<'_, F>
where
    F: FnMut(f64) -> Result<Vec<f64>, ScatteringError>,
{
    fn energy(&self, interval: usize, theta: f64) -> (f64, f64) {
        let (a, b) = self.intervals[interval];
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        (c - h * theta.cos(), h * theta.sin())
    }

    fn evaluate(&mut self, energy: f64, lo: f64, hi: f64) -> Result<Vec<f64>, QuadratureError> {
        self.diagnostics.evaluations += 1;
        if self.diagnostics.evaluations > self.max_evaluations {
            return Err(QuadratureError::NotConverged {
                lo,
                hi,
                error: f64::NAN,
                evaluations: self.diagnostics.evaluations,
            });
        }
        let first = match (self.integrand)(energy) {
            Ok(v) => return Ok(v),
            Err(e) if e.is_exceptional() => e,
            Err(e) => return Err(e.into()),
        };
        // step off the exceptional point, staying inside the panel
        for rel in [1e-13, 1e-11, 1e-9, 1e-7] {
            for sign in [1.0, -1.0] {
                let shifted = energy + sign * rel * (1.0 + energy.abs());
                if shifted <= lo || shifted >= hi {
                    continue;
                }
                match (self.integrand)(shifted) {
                    Ok(v) => {
                        self.diagnostics.skipped.push(SkippedNode {
                            energy,
                            shifted_to: Some(shifted),
                            reason: first.to_string(),
                        });
                        return Ok(v);
                    }
                    Err(e) if e.is_exceptional() => continue,
                    Err(e) => return Err(e.into()),
                }
            }
        }
        self.diagnostics.skipped.push(SkippedNode {
            energy,
            shifted_to: None,
            reason: first.to_string(),
        });
        Ok(vec![0.0; self.dim])
    }

    fn panel(&mut self, interval: usize, lo: f64, hi: f64) -> Result<Vec<f64>, QuadratureError> {
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let (e_lo, _) = self.energy(interval, lo);
        let (e_hi, _) = self.energy(interval, hi);
        let mut acc = vec![0.0; self.dim];
        for i in 0..self.nodes.len() {
            let theta = mid + half * self.nodes[i];
            let (energy, jacobian) = self.energy(interval, theta);
            let w = half * self.weights[i] * jacobian;
            let values = self.evaluate(energy, e_lo, e_hi)?;
            debug_assert_eq!(values.len(), self.dim);
            for (a, v) in acc.iter_mut().zip(values) {
                *a += w * v;
            }
        }
        Ok(acc)
    }
}

/// Integrates a vector-valued integrand over `intervals` (as produced by
/// [`spectral_intervals`]). Only the first `controlled` components enter the
/// error test; the remaining ones are integrated on the same nodes.
pub fn integrate<F>(
    intervals: &[(f64, f64)],
    dim: usize,
    controlled: usize,
    settings: &QuadratureSettings,
    integrand: F,
) -> Result<Integral, QuadratureError>
where
    F: FnMut(f64) -> Result<Vec<f64>, ScatteringError>,
{
    let (nodes, weights) = gauss_legendre(settings.order);
    let mut it = Integrator {
        integrand,
        dim,
        intervals,
        nodes,
        weights,
        diagnostics: QuadratureDiagnostics::default(),
        max_evaluations: settings.max_evaluations,
    };
    let total_width = std::f64::consts::PI * intervals.len() as f64;
    let controlled = controlled.min(dim);
    let mut values = vec![0.0; dim];
    let mut stack = Vec::new();
    for interval in 0..intervals.len() {
        let estimate = it.panel(interval, 0.0, std::f64::consts::PI)?;
        stack.push(Panel {
            interval,
            lo: 0.0,
            hi: std::f64::consts::PI,
            depth: 0,
            estimate,
        });
    }
    while let Some(p) = stack.pop() {
        let mid = 0.5 * (p.lo + p.hi);
        let left = it.panel(p.interval, p.lo, mid)?;
        let right = it.panel(p.interval, mid, p.hi)?;
        let error = (0..controlled)
            .map(|c| (left[c] + right[c] - p.estimate[c]).abs())
            .fold(0.0, f64::max);
        let allowed = settings.tol_quad * (p.hi - p.lo) / total_width;
        if error <= allowed {
            for c in 0..dim {
                values[c] += left[c] + right[c];
            }
            it.diagnostics.panels += 2;
            it.diagnostics.error_estimate += error;
            continue;
        }
        if p.depth + 1 >= settings.max_depth {
            let (lo, _) = it.energy(p.interval, p.lo);
            let (hi, _) = it.energy(p.interval, p.hi);
            return Err(QuadratureError::NotConverged {
                lo,
                hi,
                error,
                evaluations: it.diagnostics.evaluations,
            });
        }
        stack.push(Panel {
            interval: p.interval,
            lo: p.lo,
            hi: mid,
            depth: p.depth + 1,
            estimate: left,
        });
        stack.push(Panel {
            interval: p.interval,
            lo: mid,
            hi: p.hi,
            depth: p.depth + 1,
            estimate: right,
        });
    }
    Ok(Integral {
        values,
        diagnostics: it.diagnostics,
    })
}

/// Scalar integral of `integrand` over every energy where at least one lead
/// channel is open.
pub fn integrate_spectral<F>(
    model: &SystemModel,
    settings: &QuadratureSettings,
    mut integrand: F,
) -> Result<(f64, QuadratureDiagnostics), QuadratureError>
where
    F: FnMut(f64) -> Result<f64, ScatteringError>,
{
    let intervals = spectral_intervals(model, &[]);
    let integral = integrate(&intervals, 1, 1, settings, |e| integrand(e).map(|v| vec![v]))?;
    Ok((integral.values[0], integral.diagnostics))
}
