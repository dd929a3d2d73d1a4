//! Browser bindings: every function returns a flat `Float64Array` of rows.

use std::f64::consts::PI;

use lbtransport::leads::{generalized_fourier, lead_resolvent};
use lbtransport::model::{validate_model, ModelDescription, RawContact, RawCoupling, RawLead, SiteAmplitudes};
use lbtransport::transport::transport;
use lbtransport::{LeadSpec, LeadVector, QuadratureSettings, ReservoirState, ScatteringSolver, SystemModel, Tolerances};
use num_complex::Complex64;
use wasm_bindgen::prelude::*;

fn site_one(z: Complex64) -> SiteAmplitudes {
    [(1, z)].into_iter().collect()
}

fn chain(id: u32) -> RawLead {
    RawLead { id, onsite: 0.0, hopping: 1.0 }
}

fn coupling(lead: u32, strength: f64) -> RawCoupling {
    RawCoupling {
        lead,
        strength,
        scatterer_vector: vec![Complex64::new(1.0, 0.0)],
        lead_vector: site_one(Complex64::new(1.0, 0.0)),
    }
}

/// Level at `level`, leads 1-3 at strength `coupling`, contact 1-2 of
/// strength `contact` carrying the phase `flux`.
fn three_terminal(level: f64, coupling_strength: f64, contact: f64, flux: f64) -> Result<SystemModel, String> {
    let contacts = if contact > 0.0 {
        vec![RawContact {
            leads: (1, 2),
            strength: contact,
            vector_j: site_one(Complex64::from_polar(1.0, flux)),
            vector_k: site_one(Complex64::new(1.0, 0.0)),
        }]
    } else {
        vec![]
    };
    validate_model(&ModelDescription {
        scatterer: vec![vec![Complex64::new(level, 0.0)]],
        leads: (1..=3).map(chain).collect(),
        couplings: (1..=3).map(|l| coupling(l, coupling_strength)).collect(),
        contacts,
        charge: None,
    })
    .map_err(|e| e.to_string())
}

fn friedrichs(level: f64, strength: f64) -> Result<SystemModel, String> {
    validate_model(&ModelDescription {
        scatterer: vec![vec![Complex64::new(level, 0.0)]],
        leads: vec![chain(1), chain(2)],
        couplings: vec![coupling(1, strength), coupling(2, strength)],
        contacts: vec![],
        charge: None,
    })
    .map_err(|e| e.to_string())
}

fn midpoints(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    (0..points).map(move |i| lo + (hi - lo) * (i as f64 + 0.5) / points as f64)
}

/// Rows `[E, |S12|^2, |S21|^2, |S13|^2, |S31|^2, |S23|^2, |S32|^2]` across the band.
#[wasm_bindgen]
pub fn transmission_sweep(flux: f64, coupling: f64, contact: f64, points: usize) -> Result<Vec<f64>, String> {
    let model = three_terminal(0.0, coupling, contact, flux)?;
    let solver = ScatteringSolver::new(&model, Tolerances::default());
    let pairs = [(1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2)];
    let mut out = Vec::with_capacity(points * 7);
    for e in midpoints(-2.0, 2.0, points) {
        let Ok(t) = solver.t_matrix(e) else { continue };
        out.push(e);
        for (j, k) in pairs {
            out.push(4.0 * PI * PI * t.weight(j, k));
        }
    }
    Ok(out)
}

/// Rows `[V, j_1, Phi_1, sigma]` for a symmetric bias `mu = +-V/2` on a single level.
#[wasm_bindgen]
pub fn bias_sweep(level: f64, coupling: f64, beta: f64, bias_max: f64, points: usize) -> Result<Vec<f64>, String> {
    let model = friedrichs(level, coupling)?;
    let solver = ScatteringSolver::new(&model, Tolerances::default());
    let settings = QuadratureSettings {
        tol_quad: 1e-7,
        ..Default::default()
    };
    let mut out = Vec::with_capacity(points * 4);
    for i in 0..points {
        let bias = if points > 1 { bias_max * i as f64 / (points - 1) as f64 } else { bias_max };
        let states = [ReservoirState::new(beta, bias / 2.0)?, ReservoirState::new(beta, -bias / 2.0)?];
        let r = transport(&solver, &states, &settings).map_err(|e| e.to_string())?;
        out.extend([bias, r.charge_currents[0], r.energy_currents[0], r.entropy.direct]);
    }
    Ok(out)
}

/// Rows `[E, Re <f,R f>, Im <f,R f>, pi |f(E)|^2]` for a chain and a vector
/// given as interleaved `(re, im)` amplitudes on sites 1, 2, ...
#[wasm_bindgen]
pub fn surface_green(onsite: f64, hopping: f64, amplitudes: Vec<f64>, points: usize) -> Result<Vec<f64>, String> {
    if !(hopping > 0.0) {
        return Err("hopping must be positive".into());
    }
    let lead = LeadSpec {
        id: 1,
        onsite,
        hopping,
        coupling_sites: vec![],
    };
    let f = LeadVector::from_dense(amplitudes.chunks(2).map(|c| Complex64::new(c[0], *c.get(1).unwrap_or(&0.0))).collect());
    let mut out = Vec::with_capacity(points * 4);
    for e in midpoints(onsite - 2.0 * hopping, onsite + 2.0 * hopping, points) {
        let r = lead_resolvent(&lead, e, &f, &f).map_err(|e| e.to_string())?;
        let ft = generalized_fourier(&lead, e, &f).map_err(|e| e.to_string())?;
        out.extend([e, r.re, r.im, PI * ft.norm_sqr()]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_rows_are_complete() {
        let rows = transmission_sweep(PI / 2.0, 0.5, 0.3, 40).unwrap();
        assert_eq!(rows.len(), 40 * 7);
        assert!(rows.iter().all(|x| x.is_finite()));
        let gap = rows.chunks(7).map(|r| (r[1] - r[2]).abs()).fold(0.0, f64::max);
        assert!(gap > 1e-3);
        let flat = transmission_sweep(0.0, 0.5, 0.3, 40).unwrap();
        let gap = flat.chunks(7).map(|r| (r[1] - r[2]).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-12);
    }

    #[test]
    fn bias_sweep_starts_at_rest() {
        let rows = bias_sweep(0.0, 0.6, 10.0, 1.0, 5).unwrap();
        assert_eq!(rows.len(), 20);
        assert_eq!(&rows[1..4], &[0.0, 0.0, 0.0]);
        // particles leave the higher reservoir; charge carries the opposite sign
        assert!(rows[17] < 0.0 && rows[19] > 0.0);
        assert!(bias_sweep(0.0, 0.6, -1.0, 1.0, 5).is_err());
    }

    #[test]
    fn sokhotski_columns_agree() {
        let rows = surface_green(0.2, 0.8, vec![1.0, 0.0, 0.3, -0.4], 50).unwrap();
        for r in rows.chunks(4) {
            assert!((r[2] - r[3]).abs() < 1e-12);
        }
    }
}
