#![allow(dead_code)]

use lbtransport::model::{
    validate_model, ModelDescription, RawContact, RawCoupling, RawLead, ReservoirState, SiteAmplitudes, SystemModel,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_vector(rng: &mut impl Rng, len: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..len)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.1 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Second unit vector orthogonal to `first`.
fn orthogonal_to(rng: &mut impl Rng, first: &[Complex64]) -> Vec<Complex64> {
    loop {
        let mut v = random_vector(rng, first.len());
        let overlap: Complex64 = first.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
        for (x, a) in v.iter_mut().zip(first) {
            *x -= overlap * a;
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.1 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

fn sites(v: &[Complex64]) -> SiteAmplitudes {
    v.iter().enumerate().map(|(n, &z)| (n + 1, z)).collect()
}

/// Random valid model: N in {2, 3, 4} leads, M <= 4, complex couplings and
/// occasional direct contacts.
pub fn random_description(rng: &mut impl Rng, leads: usize) -> ModelDescription {
    let m = rng.random_range(1..=4);
    let mut scatterer = vec![vec![c(0.0, 0.0); m]; m];
    for i in 0..m {
        scatterer[i][i] = c(rng.random_range(-1.5..1.5), 0.0);
        for j in i + 1..m {
            let z = c(rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8));
            scatterer[i][j] = z;
            scatterer[j][i] = z.conj();
        }
    }
    let raw_leads: Vec<RawLead> = (1..=leads as u32)
        .map(|id| RawLead {
            id,
            onsite: rng.random_range(-0.5..0.5),
            hopping: rng.random_range(0.6..1.4),
        })
        .collect();
    let mut couplings = Vec::new();
    for id in 1..=leads as u32 {
        let support = rng.random_range(1..=3);
        let f = random_vector(rng, support);
        let s = random_vector(rng, m);
        couplings.push(RawCoupling {
            lead: id,
            strength: rng.random_range(0.2..1.2),
            scatterer_vector: s.clone(),
            lead_vector: sites(&f),
        });
        if m >= 2 && support >= 2 && rng.random_bool(0.3) {
            couplings.push(RawCoupling {
                lead: id,
                strength: rng.random_range(0.2..1.2),
                scatterer_vector: orthogonal_to(rng, &s),
                lead_vector: sites(&orthogonal_to(rng, &f)),
            });
        }
    }
    let mut contacts = Vec::new();
    for j in 1..=leads as u32 {
        for k in j + 1..=leads as u32 {
            if rng.random_bool(0.3) {
                let (a, b) = (rng.random_range(1..=2), rng.random_range(1..=2));
                contacts.push(RawContact {
                    leads: (j, k),
                    strength: rng.random_range(0.1..0.8),
                    vector_j: sites(&random_vector(rng, a)),
                    vector_k: sites(&random_vector(rng, b)),
                });
            }
        }
    }
    ModelDescription {
        scatterer,
        leads: raw_leads,
        couplings,
        contacts,
        charge: None,
    }
}

pub fn random_model(rng: &mut impl Rng) -> SystemModel {
    let leads = rng.random_range(2..=4);
    validate_model(&random_description(rng, leads)).expect("generated model is valid")
}

/// The same structure with every amplitude made real.
pub fn realified(desc: &ModelDescription) -> ModelDescription {
    let re = |v: &[Complex64]| -> Vec<Complex64> {
        let r: Vec<Complex64> = v.iter().map(|z| c(z.re, 0.0)).collect();
        let norm = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        r.into_iter().map(|z| z / norm).collect()
    };
    let mut out = desc.clone();
    for row in out.scatterer.iter_mut() {
        for z in row.iter_mut() {
            z.im = 0.0;
        }
    }
    // keep at most one coupling per lead so orthogonality survives
    let mut seen = std::collections::BTreeSet::new();
    out.couplings.retain(|c| seen.insert(c.lead));
    for cp in out.couplings.iter_mut() {
        cp.scatterer_vector = re(&cp.scatterer_vector);
        let f: Vec<Complex64> = cp.lead_vector.values().copied().collect();
        cp.lead_vector = sites(&re(&f));
    }
    for ct in out.contacts.iter_mut() {
        let gj: Vec<Complex64> = ct.vector_j.values().copied().collect();
        let gk: Vec<Complex64> = ct.vector_k.values().copied().collect();
        ct.vector_j = sites(&re(&gj));
        ct.vector_k = sites(&re(&gk));
    }
    out
}

pub fn random_states(rng: &mut impl Rng, leads: usize) -> Vec<ReservoirState> {
    (0..leads)
        .map(|_| ReservoirState::new(rng.random_range(1.0..10.0), rng.random_range(-1.0..1.0)).unwrap())
        .collect()
}

/// In-band energies where at least one channel is open, drawn uniformly from
/// the spectral hull.
pub fn in_band_energies(rng: &mut impl Rng, model: &SystemModel, count: usize) -> Vec<f64> {
    let (lo, hi) = model.spectral_hull();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let e = rng.random_range(lo..hi);
        if model.leads().iter().any(|l| l.is_open(e)) {
            out.push(e);
        }
    }
    out
}

pub fn friedrichs_description(level: f64, v1: f64, v2: f64) -> ModelDescription {
    ModelDescription {
        scatterer: vec![vec![c(level, 0.0)]],
        leads: vec![
            RawLead { id: 1, onsite: 0.0, hopping: 1.0 },
            RawLead { id: 2, onsite: 0.0, hopping: 1.0 },
        ],
        couplings: [(1, v1), (2, v2)]
            .into_iter()
            .map(|(lead, strength)| RawCoupling {
                lead,
                strength,
                scatterer_vector: vec![c(1.0, 0.0)],
                lead_vector: [(1, c(1.0, 0.0))].into_iter().collect(),
            })
            .collect(),
        contacts: vec![],
        charge: None,
    }
}

pub fn friedrichs(level: f64, v: f64) -> SystemModel {
    validate_model(&friedrichs_description(level, v, v)).unwrap()
}

/// Three leads on one level, `v = 0.5` at site 1 of each, plus a direct
/// contact between leads 1 and 2 whose amplitude carries the phase `flux`.
pub fn aharonov_bohm(flux: f64) -> SystemModel {
    let one = |z: Complex64| -> SiteAmplitudes { [(1, z)].into_iter().collect() };
    validate_model(&ModelDescription {
        scatterer: vec![vec![c(0.0, 0.0)]],
        leads: (1..=3)
            .map(|id| RawLead { id, onsite: 0.0, hopping: 1.0 })
            .collect(),
        couplings: (1..=3)
            .map(|lead| RawCoupling {
                lead,
                strength: 0.5,
                scatterer_vector: vec![c(1.0, 0.0)],
                lead_vector: one(c(1.0, 0.0)),
            })
            .collect(),
        contacts: vec![RawContact {
            leads: (1, 2),
            strength: 0.3,
            vector_j: one(Complex64::from_polar(1.0, flux)),
            vector_k: one(c(1.0, 0.0)),
        }],
        charge: None,
    })
    .unwrap()
}

pub fn states(pairs: &[(f64, f64)]) -> Vec<ReservoirState> {
    pairs.iter().map(|&(b, m)| ReservoirState::new(b, m).unwrap()).collect()
}
