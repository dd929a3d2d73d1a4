use std::fmt::Write as _;

use lbtransport::quench::{FiniteSystem, QuenchError, ECHO_SAFETY};
use lbtransport::scattering::{s_matrix, scattering_residuals, ScatteringSolver};
use lbtransport::transport::{transport, verdict_from, QuadratureError, TransportResult};
use lbtransport::{QuadratureSettings, ReservoirState, ScatteringError, Tolerances, TransportError};
use serde_json::json;

use crate::config::RunConfig;

pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

/// Grid points used by the bound-state scan of each gap.
const BOUND_STATE_GRID: usize = 2000;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }

    fn verification(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VERIFICATION,
            message: message.into(),
        }
    }
}

impl From<ScatteringError> for Failure {
    fn from(e: ScatteringError) -> Self {
        match e {
            ScatteringError::Inconsistent { .. } => Failure::verification(e.to_string()),
            ScatteringError::Precondition(_) => Failure::validation(e.to_string()),
            _ => Failure::numerical(e.to_string()),
        }
    }
}

impl From<TransportError> for Failure {
    fn from(e: TransportError) -> Self {
        match e {
            TransportError::Scattering(s) | TransportError::Quadrature(QuadratureError::Integrand(s)) => s.into(),
            TransportError::Quadrature(q) => Failure::numerical(q.to_string()),
            TransportError::Precondition(m) => Failure::validation(m),
        }
    }
}

impl From<QuenchError> for Failure {
    fn from(e: QuenchError) -> Self {
        match e {
            QuenchError::Transport(t) => t.into(),
            QuenchError::Scattering(s) => s.into(),
            QuenchError::LeadTooShort { .. }
            | QuenchError::Occupation(_)
            | QuenchError::StateCount { .. }
            | QuenchError::EchoBound { .. }
            | QuenchError::Window(_) => Failure::validation(e.to_string()),
            QuenchError::Diagonalization | QuenchError::NotUnitary(_) => Failure::numerical(e.to_string()),
            QuenchError::NotReal { .. } | QuenchError::Conservation { .. } => Failure::verification(e.to_string()),
        }
    }
}

/// Fixed 17-significant-digit scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Output of one command: the primary CSV, an optional summary and the
/// warning lines.
#[derive(Debug, Default)]
pub struct Output {
    pub csv: String,
    pub summary: Option<String>,
    pub warnings: Vec<String>,
    /// Set when the output was produced but a verification check failed.
    pub failure: Option<String>,
}

impl Output {
    fn warn(&mut self, fields: &[(&str, String)]) {
        let body: Vec<String> = fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
        self.warnings.push(format!("WARN: {}", body.join(" ")));
    }
}

fn tolerances(cfg: &RunConfig) -> Tolerances {
    Tolerances {
        tol_scatter: cfg.tol_scatter,
        ..Default::default()
    }
}

fn settings(cfg: &RunConfig) -> QuadratureSettings {
    QuadratureSettings {
        tol_quad: cfg.tol_quad,
        ..Default::default()
    }
}

fn states<'a>(cfg: &'a RunConfig, command: &str) -> Result<&'a [ReservoirState], Failure> {
    cfg.states
        .as_deref()
        .ok_or_else(|| Failure::validation(format!("reservoirs: {command} needs a [[reservoirs]] entry per lead")))
}

fn warn_skipped(out: &mut Output, result: &TransportResult) {
    for s in &result.diagnostics.skipped {
        out.warn(&[
            ("event", "skipped_node".into()),
            ("energy", num(s.energy)),
            ("shifted_to", s.shifted_to.map_or("none".into(), num)),
            ("reason", format!("{:?}", s.reason)),
        ]);
    }
}

pub fn validate(cfg: &RunConfig) -> Result<Output, Failure> {
    let m = &cfg.model;
    let mut csv = String::from("quantity,value\n");
    let _ = writeln!(csv, "scatterer_dim,{}", m.scatterer().dim());
    let _ = writeln!(csv, "leads,{}", m.leads().len());
    let _ = writeln!(csv, "couplings,{}", m.couplings().len());
    let _ = writeln!(csv, "contacts,{}", m.contacts().len());
    let _ = writeln!(csv, "real,{}", m.is_real());
    let _ = writeln!(csv, "charge,{}", num(m.charge()));
    Ok(Output {
        csv,
        ..Default::default()
    })
}

pub fn bands(cfg: &RunConfig) -> Result<Output, Failure> {
    let mut out = Output::default();
    out.csv.push_str("kind,lead,lo,hi\n");
    for lead in cfg.model.leads() {
        let (lo, hi) = lead.band();
        let _ = writeln!(out.csv, "band,{},{},{}", lead.id, num(lo), num(hi));
    }
    let solver = ScatteringSolver::new(&cfg.model, tolerances(cfg));
    for e in solver.all_bound_states(BOUND_STATE_GRID)? {
        let _ = writeln!(out.csv, "bound_state,,{},{}", num(e), num(e));
        out.warn(&[("event", "bound_state".into()), ("energy", num(e))]);
    }
    Ok(out)
}

pub fn tmatrix(cfg: &RunConfig) -> Result<Output, Failure> {
    let mut out = Output::default();
    out.csv.push_str("energy,lead_j,lead_k,re_t,im_t,re_s,im_s,abs2_s\n");
    let tol = tolerances(cfg);
    let solver = ScatteringSolver::new(&cfg.model, tol);
    for e in cfg.grid().energies() {
        let t = match solver.t_matrix(e) {
            Ok(t) => t,
            Err(ScatteringError::NoOpenChannels { .. }) => {
                out.warn(&[
                    ("event", "skipped_energy".into()),
                    ("energy", num(e)),
                    ("reason", "\"no open channels\"".into()),
                ]);
                continue;
            }
            Err(err) if err.is_exceptional() => {
                out.warn(&[
                    ("event", "skipped_energy".into()),
                    ("energy", num(e)),
                    ("reason", format!("{:?}", err.to_string())),
                ]);
                continue;
            }
            Err(err) => return Err(err.into()),
        };
        let s = s_matrix(&t, &tol)?;
        for (a, &j) in t.channels.iter().enumerate() {
            for (b, &k) in t.channels.iter().enumerate() {
                let (tz, sz) = (t.entries[(a, b)], s.entries[(a, b)]);
                let _ = writeln!(
                    out.csv,
                    "{},{j},{k},{},{},{},{},{}",
                    num(e),
                    num(tz.re),
                    num(tz.im),
                    num(sz.re),
                    num(sz.im),
                    num(sz.norm_sqr())
                );
            }
        }
    }
    Ok(out)
}

fn run_transport(cfg: &RunConfig, command: &str) -> Result<(TransportResult, Output), Failure> {
    let states = states(cfg, command)?;
    let solver = ScatteringSolver::new(&cfg.model, tolerances(cfg));
    let result = transport(&solver, states, &settings(cfg))?;
    let mut out = Output::default();
    warn_skipped(&mut out, &result);
    Ok((result, out))
}

pub fn currents(cfg: &RunConfig) -> Result<Output, Failure> {
    let (r, mut out) = run_transport(cfg, "currents")?;
    out.csv.push_str("lead,beta,mu,charge_current,energy_current,particle_current\n");
    for (i, id) in r.leads.iter().enumerate() {
        let _ = writeln!(
            out.csv,
            "{id},{},{},{},{},{}",
            num(r.states[i].beta),
            num(r.states[i].mu),
            num(r.charge_currents[i]),
            num(r.energy_currents[i]),
            num(r.particle_currents[i])
        );
    }
    Ok(out)
}

/// Residuals of the transport-level invariants: `(name, residual, tolerance)`.
fn transport_checks(cfg: &RunConfig, r: &TransportResult) -> Vec<(&'static str, f64, f64)> {
    let scale = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let current_scale = scale(&r.charge_currents).max(scale(&r.energy_currents));
    let sigma_scale = r.entropy.from_currents.abs().max(1.0);
    let mut checks = vec![
        ("charge_conservation", r.charge_sum().abs(), 10.0 * cfg.tol_quad * current_scale),
        ("energy_conservation", r.energy_sum().abs(), 10.0 * cfg.tol_quad * current_scale),
        (
            "entropy_routes",
            (r.entropy.from_currents - r.entropy.direct).abs(),
            10.0 * cfg.tol_quad * sigma_scale,
        ),
    ];
    if cfg.model.is_real() {
        checks.push((
            "entropy_symmetrized",
            (r.entropy.direct - r.entropy.symmetrized).abs(),
            10.0 * cfg.tol_quad * sigma_scale,
        ));
    }
    checks
}

pub fn entropy(cfg: &RunConfig) -> Result<Output, Failure> {
    let (r, mut out) = run_transport(cfg, "entropy")?;
    let verdict = verdict_from(&r);
    out.csv.push_str("quantity,value\n");
    let _ = writeln!(out.csv, "sigma_from_currents,{}", num(r.entropy.from_currents));
    let _ = writeln!(out.csv, "sigma_direct,{}", num(r.entropy.direct));
    let _ = writeln!(out.csv, "sigma_symmetrized,{}", num(r.entropy.symmetrized));
    let _ = writeln!(out.csv, "nontrivial_channels,{}", verdict.nontrivial_channels.len());
    let _ = writeln!(out.csv, "differing_pairs,{}", verdict.differing_pairs.len());
    let _ = writeln!(out.csv, "predicted_strict_positive,{}", verdict.predicted_strict_positive);
    let _ = writeln!(out.csv, "positivity_holds,{}", verdict.holds);
    if !cfg.model.is_real() {
        out.warn(&[
            ("event", "symmetrized_route_not_applicable".into()),
            ("deviation", num((r.entropy.direct - r.entropy.symmetrized).abs())),
        ]);
    }
    let failed: Vec<String> = transport_checks(cfg, &r)
        .into_iter()
        .filter(|(name, ..)| name.starts_with("entropy"))
        .filter(|&(_, res, tol)| !(res <= tol))
        .map(|(name, res, tol)| format!("{name} residual {res:e} > {tol:e}"))
        .collect();
    let mut problems = failed;
    if !verdict.holds {
        problems.insert(0, format!("positivity violated: sigma = {:e}", verdict.sigma));
    }
    if !problems.is_empty() {
        out.failure = Some(problems.join("; "));
    }
    Ok(out)
}

pub fn verify(cfg: &RunConfig) -> Result<Output, Failure> {
    let mut out = Output::default();
    let tol = tolerances(cfg);
    let solver = ScatteringSolver::new(&cfg.model, tol);
    let mut worst = [("optical", 0.0f64), ("normality", 0.0), ("rowcol", 0.0), ("unitarity", 0.0)];
    for e in cfg.grid().energies() {
        let t = match solver.t_matrix(e) {
            Ok(t) => t,
            Err(ScatteringError::Inconsistent { what, residual, .. }) => {
                for w in worst.iter_mut().filter(|w| w.0 == what) {
                    w.1 = w.1.max(residual);
                }
                continue;
            }
            Err(err) if err.is_exceptional() || matches!(err, ScatteringError::NoOpenChannels { .. }) => continue,
            Err(err) => return Err(err.into()),
        };
        let r = scattering_residuals(&t);
        let u = match s_matrix(&t, &tol) {
            Ok(s) => s.unitarity_residual,
            Err(ScatteringError::Inconsistent { residual, .. }) => residual,
            Err(err) => return Err(err.into()),
        };
        for (w, v) in worst.iter_mut().zip([r.optical, r.normality, r.rowcol, u]) {
            w.1 = w.1.max(v);
        }
    }
    let mut checks: Vec<(&str, f64, f64)> = worst.iter().map(|&(n, v)| (n, v, cfg.tol_scatter)).collect();
    let mut positivity = None;
    if cfg.states.is_some() {
        let (r, transport_out) = run_transport(cfg, "verify")?;
        out.warnings.extend(transport_out.warnings);
        checks.extend(transport_checks(cfg, &r));
        let verdict = verdict_from(&r);
        positivity = Some(verdict);
    }
    out.csv.push_str("check,residual,tolerance,status\n");
    let mut failed = Vec::new();
    let mut row = |name: &str, res: String, tol: String, ok: bool| {
        if !ok {
            failed.push(name.to_string());
        }
        let _ = writeln!(out.csv, "{name},{res},{tol},{}", if ok { "pass" } else { "FAIL" });
    };
    for (name, res, tol) in checks {
        row(name, num(res), num(tol), res <= tol);
    }
    if let Some(v) = positivity {
        row("positivity", num(v.sigma), "none".into(), v.holds);
    }
    if !failed.is_empty() {
        out.failure = Some(format!("failed checks: {}", failed.join(", ")));
    }
    Ok(out)
}

pub fn quench(cfg: &RunConfig) -> Result<Output, Failure> {
    let states = states(cfg, "quench")?;
    let (t1, t2) = cfg.window();
    let max_t = cfg.model.leads().iter().map(|l| l.hopping).fold(0.0, f64::max);
    let bound = ECHO_SAFETY * cfg.lead_length as f64 / (2.0 * max_t);
    if t2 > bound {
        return Err(Failure::validation(format!(
            "window end T2 = {t2} exceeds the echo bound {bound} for lead length {}",
            cfg.lead_length
        )));
    }
    let fin = FiniteSystem::build(&cfg.model, states, cfg.lead_length, cfg.occupation)?;
    let report = fin.steady_compare((t1, t2), cfg.samples, &settings(cfg))?;

    let mut out = Output::default();
    out.csv.push('t');
    for id in &report.leads {
        let _ = write!(out.csv, ",j_{id},phi_{id}");
    }
    out.csv.push('\n');
    for s in &report.series {
        out.csv.push_str(&num(s.time));
        for (j, phi) in s.charge.iter().zip(&s.energy) {
            let _ = write!(out.csv, ",{},{}", num(*j), num(*phi));
        }
        out.csv.push('\n');
    }
    for &e in &report.bound_states {
        out.warn(&[
            ("event", "bound_state".into()),
            ("energy", num(e)),
            ("note", "\"steady currents may keep a quasi-periodic component\"".into()),
        ]);
    }
    let per_lead: Vec<_> = report
        .leads
        .iter()
        .enumerate()
        .map(|(k, id)| {
            json!({
                "lead": id,
                "charge_mean": report.charge_mean[k],
                "charge_band": report.charge_band[k],
                "charge_reference": report.charge_reference[k],
                "charge_deviation": report.charge_deviation[k],
                "energy_mean": report.energy_mean[k],
                "energy_band": report.energy_band[k],
                "energy_reference": report.energy_reference[k],
                "energy_deviation": report.energy_deviation[k],
            })
        })
        .collect();
    let summary = json!({
        "lead_length": report.lead_length,
        "window": [report.window.0, report.window.1],
        "echo_bound": report.echo_bound,
        "samples": report.times.len(),
        "occupation": cfg.occupation,
        "leads": per_lead,
        "bound_states": report.bound_states,
        "bound_state_warning": report.bound_state_warning(),
    });
    out.summary = Some(serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(out)
}
