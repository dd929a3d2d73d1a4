//! Closed-form spectral data of a semi-infinite nearest-neighbour chain
//! `H = eps sum |n><n| + t sum (|n><n+1| + h.c.)`, `n >= 1`.
//!
//! With `x = (E - eps) / 2t` and `E = eps + 2t cos k`, everything is written
//! in terms of Chebyshev polynomials of the second kind, `U_{n-1}(x) =
//! sin(nk) / sin(k)`, which stay well conditioned near the band edges.
//!
//! Resolvents follow the `(H - E - i0)^{-1}` convention, so diagonal elements
//! have a non-negative imaginary part inside the band.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::model::{LeadId, LeadSpec, LeadVector};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LeadError {
    #[error("channel closed: E = {energy} is not inside the band of lead {lead}")]
    ChannelClosed { lead: LeadId, energy: f64 },
    #[error("exceptional energy: E = {energy} is a band edge of lead {lead}")]
    Exceptional { lead: LeadId, energy: f64 },
}

/// Parametrization of an in-band energy by its wavenumber.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeadSpectralPoint {
    pub lead: LeadId,
    pub energy: f64,
    /// Wavenumber in `(0, pi)`.
    pub k: f64,
    /// `|dE/dk| = 2 t sin k`.
    pub velocity_factor: f64,
}

/// Reduced energy `(E - eps) / 2t`; the band is `|x| < 1`.
pub fn reduced_energy(lead: &LeadSpec, energy: f64) -> f64 {
    (energy - lead.onsite) / (2.0 * lead.hopping)
}

fn is_edge(x: f64) -> bool {
    (x.abs() - 1.0).abs() <= 4.0 * f64::EPSILON
}

fn open_reduced(lead: &LeadSpec, energy: f64) -> Result<f64, LeadError> {
    let x = reduced_energy(lead, energy);
    if x.abs() < 1.0 && !is_edge(x) {
        Ok(x)
    } else {
        Err(LeadError::ChannelClosed {
            lead: lead.id,
            energy,
        })
    }
}

/// `U_0(x), ..., U_{n-1}(x)`.
pub(crate) fn chebyshev_u(x: f64, n: usize) -> Vec<f64> {
    let mut u = Vec::with_capacity(n);
    if n > 0 {
        u.push(1.0);
    }
    if n > 1 {
        u.push(2.0 * x);
    }
    for i in 2..n {
        let next = 2.0 * x * u[i - 1] - u[i - 2];
        u.push(next);
    }
    u
}

pub fn wavenumber(lead: &LeadSpec, energy: f64) -> Result<LeadSpectralPoint, LeadError> {
    let x = open_reduced(lead, energy)?;
    let k = x.acos();
    Ok(LeadSpectralPoint {
        lead: lead.id,
        energy,
        k,
        velocity_factor: 2.0 * lead.hopping * (1.0 - x * x).sqrt(),
    })
}

/// `sqrt(sin k / (pi t))`, the common factor of every eigenfunction amplitude.
fn amplitude_scale(lead: &LeadSpec, x: f64) -> f64 {
    ((1.0 - x * x).sqrt() / (PI * lead.hopping)).sqrt()
}

/// Site amplitude of the energy-normalized generalized eigenfunction,
/// `sin(kn) / sqrt(pi t sin k)`.
pub fn eigenfunction_amplitude(lead: &LeadSpec, energy: f64, site: usize) -> Result<f64, LeadError> {
    assert!(site >= 1, "lead sites start at 1");
    let x = open_reduced(lead, energy)?;
    let u = chebyshev_u(x, site);
    Ok(u[site - 1] * amplitude_scale(lead, x))
}

/// Generalized Fourier coefficient `<psi_E, f> = sum_n psi_E(n) f(n)`; the
/// eigenfunctions are real.
pub fn generalized_fourier(lead: &LeadSpec, energy: f64, f: &LeadVector) -> Result<Complex64, LeadError> {
    let x = open_reduced(lead, energy)?;
    let u = chebyshev_u(x, f.support());
    let sum: Complex64 = f.amplitudes().iter().zip(&u).map(|(a, un)| a * un).sum();
    Ok(sum * amplitude_scale(lead, x))
}

/// Boundary value `chi` of the lead: `e^{-ik}` inside the band (the branch
/// selected by `-i0`), the decaying real root of `chi + 1/chi = 2x` outside.
fn boundary_value(x: f64) -> Complex64 {
    if x.abs() < 1.0 {
        Complex64::new(x, -(1.0 - x * x).sqrt())
    } else {
        Complex64::new(x - x.signum() * (x * x - 1.0).sqrt(), 0.0)
    }
}

/// Matrix of `<m|(H - E - i0)^{-1}|n>` for sites `1..=size`.
pub fn resolvent_matrix(lead: &LeadSpec, energy: f64, size: usize) -> Result<DMatrix<Complex64>, LeadError> {
    let x = reduced_energy(lead, energy);
    if is_edge(x) || !x.is_finite() {
        return Err(LeadError::Exceptional {
            lead: lead.id,
            energy,
        });
    }
    let chi = boundary_value(x);
    let u = chebyshev_u(x, size);
    let mut powers = Vec::with_capacity(size + 1);
    let mut p = Complex64::new(1.0, 0.0);
    for _ in 0..=size {
        powers.push(p);
        p *= chi;
    }
    let t = lead.hopping;
    Ok(DMatrix::from_fn(size, size, |i, j| {
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        // sites are lo + 1 and hi + 1
        -powers[hi + 1] * u[lo] / t
    }))
}

/// `<f, (H - E - i0)^{-1} g>` for finitely supported `f`, `g`.
pub fn lead_resolvent(lead: &LeadSpec, energy: f64, f: &LeadVector, g: &LeadVector) -> Result<Complex64, LeadError> {
    let size = f.support().max(g.support());
    let r = resolvent_matrix(lead, energy, size)?;
    Ok(sandwich(&r, f, g))
}

/// `<f, R g>` with `R` indexed by sites starting at 1.
pub(crate) fn sandwich(r: &DMatrix<Complex64>, f: &LeadVector, g: &LeadVector) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, fm) in f.amplitudes().iter().enumerate() {
        if fm.norm_sqr() == 0.0 {
            continue;
        }
        let row: Complex64 = g
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(n, gn)| r[(m, n)] * gn)
            .sum();
        acc += fm.conj() * row;
    }
    acc
}
