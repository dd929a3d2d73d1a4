//! Acceptance suite: one PASS/FAIL line per criterion.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use lbtransport::leads::{generalized_fourier, lead_resolvent};
use lbtransport::model::{validate_model, LeadSpec, LeadVector, SystemModel};
use lbtransport::quench::{out_of_band_eigenvalues, FiniteSystem};
use lbtransport::scattering::{
    friedrichs_reference_t, s_matrix, scattering_residuals, FriedrichsParams, ScatteringSolver,
};
use lbtransport::transport::{transport, verdict_from, TransportResult, POSITIVITY_FLOOR};
use lbtransport::{QuadratureSettings, ReservoirState, Tolerances};
use num_complex::Complex64;
use rand::Rng;

const ENSEMBLE: usize = 50;
const ENERGIES: usize = 50;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ensemble() -> Vec<SystemModel> {
    let mut rng = common::rng(20240601);
    (0..ENSEMBLE).map(|_| common::random_model(&mut rng)).collect()
}

/// Worst residuals over the ensemble: optical, unitarity, normality, rowcol
/// and the N = 2 reciprocity gap.
fn ensemble_residuals(models: &[SystemModel]) -> ([f64; 5], usize, usize) {
    let mut rng = common::rng(99);
    let mut worst = [0.0f64; 5];
    let (mut solved, mut two_lead) = (0, 0);
    for model in models {
        let solver = ScatteringSolver::new(model, Tolerances::default());
        if model.leads().len() == 2 {
            two_lead += 1;
        }
        for e in common::in_band_energies(&mut rng, model, ENERGIES) {
            let t = match solver.t_matrix(e) {
                Ok(t) => t,
                Err(err) if err.is_exceptional() => continue,
                Err(err) => panic!("E = {e}: {err}"),
            };
            solved += 1;
            let r = scattering_residuals(&t);
            let s = s_matrix(&t, &Tolerances { tol_scatter: 1.0, ..Default::default() }).unwrap();
            let reciprocity = if model.leads().len() == 2 && t.channels.len() == 2 {
                (t.entries[(0, 1)].norm() - t.entries[(1, 0)].norm()).abs()
            } else {
                0.0
            };
            for (w, v) in worst
                .iter_mut()
                .zip([r.optical, s.unitarity_residual, r.normality, r.rowcol, reciprocity])
            {
                *w = w.max(v);
            }
        }
    }
    (worst, solved, two_lead)
}

fn optical_theorem() -> Outcome {
    let start = Instant::now();
    let (worst, solved, _) = ensemble_residuals(&ensemble());
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst[0] <= 1e-9 && secs <= 30.0 && solved >= ENSEMBLE * ENERGIES * 9 / 10,
        format!("max optical residual {:.2e} over {solved} solves in {secs:.1} s", worst[0]),
    )
}

fn unitarity_normality_rowcol() -> Outcome {
    let (w, ..) = ensemble_residuals(&ensemble());
    outcome(
        w[1] <= 1e-9 && w[2] <= 1e-9 && w[3] <= 1e-9,
        format!("unitarity {:.2e}, normality {:.2e}, row/column {:.2e}", w[1], w[2], w[3]),
    )
}

fn two_lead_reciprocity() -> Outcome {
    let (w, _, two_lead) = ensemble_residuals(&ensemble());
    outcome(
        w[4] <= 1e-10 && two_lead > 0,
        format!("max ||T12|-|T21|| {:.2e} over {two_lead} two-lead models", w[4]),
    )
}

fn time_reversal_breaking() -> Outcome {
    let model = common::aharonov_bohm(PI / 2.0);
    let solver = ScatteringSolver::new(&model, Tolerances::default());
    let (mut gap, mut residual) = (0.0f64, 0.0f64);
    for i in 0..400 {
        let e = -2.0 + 4.0 * (i as f64 + 0.5) / 400.0;
        let t = solver.t_matrix(e).unwrap();
        gap = gap.max((t.get(1, 2).unwrap().norm() - t.get(2, 1).unwrap().norm()).abs());
        let s = s_matrix(&t, &Tolerances::default()).unwrap();
        residual = residual.max(scattering_residuals(&t).max()).max(s.unitarity_residual);
    }
    let states = common::states(&[(4.0, 0.3), (4.0, 0.0), (2.0, -0.2)]);
    let r = transport(&solver, &states, &QuadratureSettings::default()).unwrap();
    let scale = r.charge_currents.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let sum = r.charge_sum().abs();
    outcome(
        gap >= 1e-3 && residual <= 1e-9 && sum <= 1e-8 * scale,
        format!("max ||T12|-|T21|| {gap:.3e}, residuals {residual:.2e}, |sum j| {sum:.2e} (scale {scale:.3e})"),
    )
}

/// Root of `Re D(E) = E - eps - Re sum v^2 <f,R f>` by bisection.
fn resonance(model: &SystemModel, lo: f64, hi: f64) -> f64 {
    let params = FriedrichsParams::from_model(model).unwrap();
    let re_d = |e: f64| -> f64 {
        let mut d = e - params.level;
        for (lead, (&v, f)) in params.leads.iter().zip(params.strengths.iter().zip(&params.lead_vectors)) {
            d += v * v * lead_resolvent(lead, e, f, f).unwrap().re;
        }
        d
    };
    let (mut a, mut b) = (lo, hi);
    assert!(re_d(a) * re_d(b) < 0.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if re_d(a) * re_d(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

fn friedrichs_oracle() -> Outcome {
    let mut max_dev = 0.0f64;
    for &(level, v1, v2) in &[(0.3, 0.4, 0.9), (0.0, 0.5, 0.5), (-1.1, 1.3, 0.2), (2.5, 0.7, 0.6)] {
        let model = validate_model(&common::friedrichs_description(level, v1, v2)).unwrap();
        let params = FriedrichsParams::from_model(&model).unwrap();
        let solver = ScatteringSolver::new(&model, Tolerances::default());
        for i in 0..500 {
            let e = -2.0 + 4.0 * (i as f64 + 0.5) / 500.0;
            let Ok(t) = solver.t_matrix(e) else { continue };
            let r = friedrichs_reference_t(&params, e).unwrap();
            max_dev = max_dev.max((&t.entries - &r).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    let model = common::friedrichs(0.3, 0.5);
    let e_star = resonance(&model, 0.0, 1.0);
    let t = ScatteringSolver::new(&model, Tolerances::default()).t_matrix(e_star).unwrap();
    let s = s_matrix(&t, &Tolerances::default()).unwrap();
    let transmittance = s.get(1, 2).unwrap().norm_sqr();
    outcome(
        max_dev <= 1e-8 && (transmittance - 1.0).abs() <= 1e-6,
        format!("max grid deviation {max_dev:.2e}; |S12(E*)|^2 - 1 = {:.2e} at E* = {e_star:.6}", transmittance - 1.0),
    )
}

fn proposition_one() -> Outcome {
    let start = Instant::now();
    let model = common::friedrichs(0.25, 0.5);
    let states = common::states(&[(5.0, 0.2), (5.0, -0.2)]);
    let settings = QuadratureSettings {
        tol_quad: 1e-11,
        ..Default::default()
    };
    let mut devs = Vec::new();
    for l in [200usize, 400, 600] {
        let t2 = l as f64 / 3.0;
        let fin = FiniteSystem::build(&model, &states, l, 0.0).unwrap();
        let r = fin.steady_compare((t2 / 2.0, t2), 201, &settings).unwrap();
        devs.push((r.charge_deviation[0], r.energy_deviation[0]));
    }
    let secs = start.elapsed().as_secs_f64();
    let noise = 1e-8;
    let monotone = devs.windows(2).all(|w| w[1].0 <= w[0].0 + noise && w[1].1 <= w[0].1 + noise);
    let last = devs[2];
    outcome(
        last.0 <= 0.02 && last.1 <= 0.02 && monotone && secs <= 60.0,
        format!(
            "relative deviation j1/Phi1 at L=200,400,600: {} ({secs:.1} s)",
            devs.iter().map(|d| format!("{:.1e}/{:.1e}", d.0, d.1)).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn ensemble_transport(tol_quad: f64) -> Vec<(SystemModel, Vec<ReservoirState>, TransportResult)> {
    let mut rng = common::rng(4242);
    let settings = QuadratureSettings {
        tol_quad,
        ..Default::default()
    };
    ensemble()
        .into_iter()
        .map(|model| {
            let states = common::random_states(&mut rng, model.leads().len());
            let solver = ScatteringSolver::new(&model, Tolerances::default());
            let r = transport(&solver, &states, &settings).unwrap();
            (model, states, r)
        })
        .collect()
}

fn conservation() -> Outcome {
    let tol = QuadratureSettings::default().tol_quad;
    let mut worst = 0.0f64;
    for (.., r) in ensemble_transport(tol) {
        let scale = r.charge_currents.iter().chain(&r.energy_currents).fold(0.0f64, |m, x| m.max(x.abs()));
        if scale > 0.0 {
            worst = worst.max(r.charge_sum().abs().max(r.energy_sum().abs()) / scale);
        }
    }
    outcome(
        worst <= 10.0 * tol,
        format!("max |sum j|, |sum Phi| relative to max current: {worst:.2e} (bound {:.0e})", 10.0 * tol),
    )
}

fn entropy_production() -> Outcome {
    let tol = QuadratureSettings::default().tol_quad;
    let coarse = ensemble_transport(tol);
    let fine = ensemble_transport(tol / 2.0);
    let (mut routes, mut min_sigma, mut drift) = (0.0f64, f64::INFINITY, 0.0f64);
    let mut strict_failures = 0;
    let mut predicted = 0;
    for ((_, _, r), (_, _, h)) in coarse.iter().zip(&fine) {
        let e = &r.entropy;
        routes = routes.max((e.from_currents - e.direct).abs() / e.direct.abs().max(1.0));
        min_sigma = min_sigma.min(e.direct);
        let v = verdict_from(r);
        if v.predicted_strict_positive {
            predicted += 1;
            if !(e.direct > POSITIVITY_FLOOR) {
                strict_failures += 1;
            }
            drift = drift.max((e.direct - h.entropy.direct).abs() / e.direct.abs());
        }
    }
    // route (c) applies to all-real models
    let mut rng = common::rng(77);
    let settings = QuadratureSettings::default();
    let mut symmetric = 0.0f64;
    for _ in 0..ENSEMBLE {
        let leads = rng.random_range(2..=4);
        let model = validate_model(&common::realified(&common::random_description(&mut rng, leads))).unwrap();
        let states = common::random_states(&mut rng, leads);
        let r = transport(&ScatteringSolver::new(&model, Tolerances::default()), &states, &settings).unwrap();
        symmetric = symmetric.max(r.entropy.max_deviation() / r.entropy.direct.abs().max(1.0));
        min_sigma = min_sigma.min(r.entropy.direct);
    }
    outcome(
        routes <= 10.0 * tol
            && symmetric <= 10.0 * tol
            && min_sigma >= -1e-12
            && strict_failures == 0
            && drift <= 0.01,
        format!(
            "routes a/b {routes:.1e}, a/b/c on real models {symmetric:.1e}, min sigma {min_sigma:.3e}, \
             {predicted} strictly positive predicted with {strict_failures} failures, drift under halving {drift:.1e}"
        ),
    )
}

fn zero_temperature_conductance() -> Outcome {
    let model = common::friedrichs(0.0, 1.0);
    let states = common::states(&[(1e3, 0.1), (1e3, -0.1)]);
    let r = transport(&ScatteringSolver::new(&model, Tolerances::default()), &states, &QuadratureSettings::default())
        .unwrap();
    let expected = 0.2 / (2.0 * PI);
    let rel = (r.particle_currents[0] - expected).abs() / expected;
    outcome(rel <= 0.01, format!("I1 = {:.10e}, (mu1-mu2)/2pi = {expected:.10e}, rel {rel:.1e}", r.particle_currents[0]))
}

fn sokhotski() -> Outcome {
    let mut rng = common::rng(5);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let lead = LeadSpec {
            id: 1,
            onsite: rng.random_range(-1.0..1.0),
            hopping: rng.random_range(0.3..2.0),
            coupling_sites: vec![],
        };
        let len = rng.random_range(1..=6);
        let f = LeadVector::from_dense(
            (0..len)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        );
        let x: f64 = if i < 5 { [0.0, 0.999999, -0.999999, 0.5, -0.5][i] } else { rng.random_range(-0.9999..0.9999) };
        let e = lead.onsite + 2.0 * lead.hopping * x;
        let lhs = lead_resolvent(&lead, e, &f, &f).unwrap().im;
        let rhs = PI * generalized_fourier(&lead, e, &f).unwrap().norm_sqr();
        worst = worst.max((lhs - rhs).abs());
    }
    outcome(worst <= 1e-10, format!("max |Im<f,R f> - pi |f(E)|^2| {worst:.2e} over 100 draws"))
}

fn bound_state_cross_check() -> Outcome {
    let mut worst = 0.0f64;
    let mut counts = Vec::new();
    for model in [common::friedrichs(3.0, 0.1), common::friedrichs(0.0, 2.0)] {
        let solver = ScatteringSolver::new(&model, Tolerances::default());
        let exact = solver.all_bound_states(4000).unwrap();
        let finite = out_of_band_eigenvalues(&model, 2000).unwrap();
        assert_eq!(exact.len(), finite.len(), "{exact:?} vs {finite:?}");
        for (a, b) in exact.iter().zip(&finite) {
            worst = worst.max((a - b).abs());
        }
        counts.push(exact.len());
    }
    let states = common::states(&[(5.0, 0.2), (5.0, -0.2)]);
    let band = |model: &SystemModel| {
        let fin = FiniteSystem::build(model, &states, 600, 0.0).unwrap();
        fin.steady_compare((100.0, 200.0), 201, &QuadratureSettings::default()).unwrap()
    };
    let baseline = band(&common::friedrichs(0.0, 0.5));
    let bound = band(&common::friedrichs(3.0, 0.1));
    let ratio = bound.charge_band[0] / baseline.charge_band[0];
    outcome(
        worst <= 1e-6 && ratio >= 10.0 && bound.bound_state_warning() && !baseline.bound_state_warning(),
        format!(
            "bound states {counts:?}, max |E_b - E_finite| {worst:.1e}; fluctuation band ratio {ratio:.0}, warning {}",
            bound.bound_state_warning()
        ),
    )
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn lbt(args: &[&str]) -> (i32, Vec<u8>, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_lbt"))
        .args(args)
        .current_dir(workspace_root())
        .output()
        .expect("lbt runs");
    (out.status.code().unwrap_or(-1), out.stdout, String::from_utf8_lossy(&out.stderr).into_owned())
}

/// Commands checked against golden files for every shipped config.
const GOLDEN_COMMANDS: [&str; 6] = ["validate", "bands", "tmatrix", "currents", "entropy", "verify"];
const CONFIGS: [&str; 3] = ["friedrichs", "three_terminal_ab", "bound_state"];

fn cli_contract() -> Outcome {
    let golden_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let bless = std::env::var_os("LBT_BLESS").is_some();
    let mut problems = Vec::new();
    let mut runs = 0;
    let mut golden_runs: Vec<(String, Vec<String>)> = Vec::new();
    for config in CONFIGS {
        let path = format!("configs/{config}.toml");
        for cmd in GOLDEN_COMMANDS {
            golden_runs.push((format!("{config}.{cmd}"), vec![cmd.into(), "--config".into(), path.clone()]));
        }
    }
    golden_runs.push((
        "friedrichs.quench".into(),
        ["quench", "--config", "configs/friedrichs.toml", "--lead-length", "120", "--window", "20:40", "--samples", "21"]
            .map(String::from)
            .to_vec(),
    ));
    for (name, args) in &golden_runs {
        let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
        let (code, first, err) = lbt(&args);
        let (_, second, _) = lbt(&args);
        runs += 2;
        if code != 0 {
            problems.push(format!("{name}: exit {code}: {err}"));
            continue;
        }
        if first != second {
            problems.push(format!("{name}: output differs between runs"));
        }
        let golden = golden_dir.join(format!("{name}.csv"));
        if bless {
            std::fs::write(&golden, &first).unwrap();
        } else {
            match std::fs::read(&golden) {
                Ok(expected) if expected == first => {}
                Ok(_) => problems.push(format!("{name}: differs from golden file")),
                Err(e) => problems.push(format!("{name}: missing golden file ({e})")),
            }
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let bad_beta = dir.path().join("bad_beta.toml");
    let text = std::fs::read_to_string(workspace_root().join("configs/friedrichs.toml")).unwrap();
    std::fs::write(&bad_beta, text.replacen("beta = 5.0", "beta = -1.0", 1)).unwrap();
    let bad = bad_beta.to_str().unwrap();
    let expectations: [(&[&str], i32, &str); 6] = [
        (&["currents", "--config", bad], 1, "beta must be positive"),
        (&["currents", "--config", "configs/friedrichs.toml", "--tol-quad", "1e-300"], 2, "did not converge"),
        (&["verify", "--config", "configs/friedrichs.toml", "--tol-scatter", "1e-30"], 3, "residual"),
        (
            &["quench", "--config", "configs/friedrichs.toml", "--lead-length", "200", "--window", "50:100"],
            1,
            "echo bound 80",
        ),
        (&["tmatrix", "--config", "configs/friedrichs.toml", "--grid", "3:4:5"], 0, "no open channels"),
        (&["validate", "--config", "configs/missing.toml"], 1, "cannot read config"),
    ];
    for (args, code, needle) in expectations {
        let (got, _, err) = lbt(args);
        runs += 1;
        if got != code || !err.contains(needle) {
            problems.push(format!("{}: exit {got} (want {code}), stderr {err:?}", args.join(" ")));
        }
    }
    outcome(
        problems.is_empty(),
        if problems.is_empty() {
            format!("{runs} runs on {} configs: golden files, determinism and exit statuses match", CONFIGS.len())
        } else {
            problems.join("; ")
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("optical theorem on the random ensemble", optical_theorem),
        ("S unitarity, T normality, row/column sums", unitarity_normality_rowcol),
        ("two-lead reciprocity", two_lead_reciprocity),
        ("time-reversal breaking by a flux", time_reversal_breaking),
        ("Friedrichs closed form and resonance", friedrichs_oracle),
        ("quench steady state vs Landauer-Buttiker", proposition_one),
        ("charge and energy conservation", conservation),
        ("entropy production routes and positivity", entropy_production),
        ("zero-temperature conductance quantum", zero_temperature_conductance),
        ("Sokhotski identity for lead resolvents", sokhotski),
        ("bound states and quasi-periodic quench", bound_state_cross_check),
        ("CLI golden files and exit statuses", cli_contract),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &n.to_string()) {
            continue;
        }
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!("criterion {n:>2} [{}] {name}: {}", if result.pass { "PASS" } else { "FAIL" }, result.detail);
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
