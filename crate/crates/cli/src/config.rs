//! TOML run configuration.
//!
//! Complex numbers are always written as `[re, im]`. Lead vectors are tables
//! from 1-based site index to amplitude, e.g. `lead_vector = { 1 = [1.0, 0.0] }`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use lbtransport::model::{
    validate_model, ModelDescription, RawContact, RawCoupling, RawLead, SiteAmplitudes,
};
use lbtransport::{LeadId, ReservoirState, SystemModel};
use num_complex::Complex64;
use serde::Deserialize;

pub const DEFAULT_TOL_QUAD: f64 = 1e-8;
pub const DEFAULT_TOL_SCATTER: f64 = 1e-9;
pub const DEFAULT_LEAD_LENGTH: usize = 600;
pub const DEFAULT_SAMPLES: usize = 201;
pub const DEFAULT_GRID_POINTS: usize = 201;

type Pair = [f64; 2];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    charge: Option<f64>,
    scatterer: RawScatterer,
    leads: Vec<LeadEntry>,
    #[serde(default)]
    couplings: Vec<CouplingEntry>,
    #[serde(default)]
    contacts: Vec<ContactEntry>,
    #[serde(default)]
    reservoirs: Vec<ReservoirEntry>,
    #[serde(default)]
    settings: SettingsEntry,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScatterer {
    matrix: Vec<Vec<Pair>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LeadEntry {
    id: LeadId,
    #[serde(default)]
    onsite: f64,
    #[serde(default = "one")]
    hopping: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingEntry {
    lead: LeadId,
    strength: f64,
    scatterer_vector: Vec<Pair>,
    lead_vector: BTreeMap<String, Pair>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContactEntry {
    leads: [LeadId; 2],
    strength: f64,
    vector_j: BTreeMap<String, Pair>,
    vector_k: BTreeMap<String, Pair>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReservoirEntry {
    lead: LeadId,
    beta: f64,
    mu: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SettingsEntry {
    tol_quad: Option<f64>,
    tol_scatter: Option<f64>,
    lead_length: Option<usize>,
    grid: Option<String>,
    window: Option<[f64; 2]>,
    samples: Option<usize>,
    occupation: Option<f64>,
}

/// Why a configuration was rejected.
#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Parse(String),
    Field { field: String, message: String },
    Model(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(m) => write!(f, "cannot read config: {m}"),
            ConfigError::Parse(m) => write!(f, "parse error: {m}"),
            ConfigError::Field { field, message } => write!(f, "{field}: {message}"),
            ConfigError::Model(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn field(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.into(),
        message: message.into(),
    }
}

/// Energy grid `a:b:n`, `n` points including both ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid {
    pub fn parse(text: &str) -> Result<Self, String> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected a:b:n, got {text:?}"));
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| format!("bad grid start {:?}", parts[0]))?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| format!("bad grid end {:?}", parts[1]))?;
        let points: usize = parts[2].trim().parse().map_err(|_| format!("bad grid count {:?}", parts[2]))?;
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(format!("grid bounds must be ordered, got {lo} > {hi}"));
        }
        if points == 0 || (points == 1 && lo != hi) {
            return Err("grid needs at least 2 points".into());
        }
        Ok(Self { lo, hi, points })
    }

    pub fn energies(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        (0..self.points)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.points - 1) as f64)
            .collect()
    }
}

/// Command-line values that override the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub tol_quad: Option<f64>,
    pub tol_scatter: Option<f64>,
    pub lead_length: Option<usize>,
    pub grid: Option<String>,
    pub window: Option<String>,
    pub samples: Option<usize>,
    pub occupation: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub model: SystemModel,
    /// One state per lead in ascending id order, when any were given.
    pub states: Option<Vec<ReservoirState>>,
    pub tol_quad: f64,
    pub tol_scatter: f64,
    pub lead_length: usize,
    /// `None` means the spectral hull of the model.
    pub grid: Option<Grid>,
    /// `None` means `[T2/2, T2]` with `T2 = L/3`.
    pub window: Option<(f64, f64)>,
    pub samples: usize,
    pub occupation: f64,
    /// Defaults that were filled in, as `key=value`.
    pub defaults: Vec<String>,
}

impl RunConfig {
    pub fn grid(&self) -> Grid {
        self.grid.unwrap_or_else(|| {
            let (lo, hi) = self.model.spectral_hull();
            Grid {
                lo,
                hi,
                points: DEFAULT_GRID_POINTS,
            }
        })
    }

    pub fn window(&self) -> (f64, f64) {
        self.window.unwrap_or_else(|| {
            let t2 = self.lead_length as f64 / 3.0;
            (t2 / 2.0, t2)
        })
    }
}

fn complex(p: Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn site_map(name: &str, raw: &BTreeMap<String, Pair>) -> Result<SiteAmplitudes, ConfigError> {
    raw.iter()
        .map(|(k, &v)| {
            k.trim()
                .parse::<usize>()
                .map(|n| (n, complex(v)))
                .map_err(|_| field(name, format!("site key {k:?} is not a positive integer")))
        })
        .collect()
}

fn positive(name: &str, value: f64) -> Result<f64, ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(field(name, format!("must be positive (got {value})")))
    }
}

fn parse_window(text: &str) -> Result<(f64, f64), ConfigError> {
    let parts: Vec<&str> = text.split(':').collect();
    let values: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match values.as_deref() {
        Some(&[a, b]) => Ok((a, b)),
        _ => Err(field("window", format!("expected T1:T2, got {text:?}"))),
    }
}

pub fn parse_config(text: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;

    let mut couplings = Vec::with_capacity(raw.couplings.len());
    for (i, c) in raw.couplings.iter().enumerate() {
        couplings.push(RawCoupling {
            lead: c.lead,
            strength: c.strength,
            scatterer_vector: c.scatterer_vector.iter().map(|&p| complex(p)).collect(),
            lead_vector: site_map(&format!("couplings[{i}].lead_vector"), &c.lead_vector)?,
        });
    }
    let mut contacts = Vec::with_capacity(raw.contacts.len());
    for (i, c) in raw.contacts.iter().enumerate() {
        contacts.push(RawContact {
            leads: (c.leads[0], c.leads[1]),
            strength: c.strength,
            vector_j: site_map(&format!("contacts[{i}].vector_j"), &c.vector_j)?,
            vector_k: site_map(&format!("contacts[{i}].vector_k"), &c.vector_k)?,
        });
    }
    let desc = ModelDescription {
        scatterer: raw
            .scatterer
            .matrix
            .iter()
            .map(|row| row.iter().map(|&p| complex(p)).collect())
            .collect(),
        leads: raw
            .leads
            .iter()
            .map(|l| RawLead {
                id: l.id,
                onsite: l.onsite,
                hopping: l.hopping,
            })
            .collect(),
        couplings,
        contacts,
        charge: raw.charge,
    };
    let model = validate_model(&desc).map_err(|e| ConfigError::Model(e.to_string()))?;

    let states = if raw.reservoirs.is_empty() {
        None
    } else {
        let mut by_lead = BTreeMap::new();
        for (i, r) in raw.reservoirs.iter().enumerate() {
            if model.lead(r.lead).is_none() {
                return Err(field(format!("reservoirs[{i}].lead"), format!("unknown lead {}", r.lead)));
            }
            let state = ReservoirState::new(r.beta, r.mu).map_err(|m| field(format!("reservoirs[{i}]"), m))?;
            if by_lead.insert(r.lead, state).is_some() {
                return Err(field(format!("reservoirs[{i}].lead"), format!("duplicate state for lead {}", r.lead)));
            }
        }
        let mut states = Vec::with_capacity(model.leads().len());
        for lead in model.leads() {
            match by_lead.get(&lead.id) {
                Some(&s) => states.push(s),
                None => return Err(field("reservoirs", format!("no state for lead {}", lead.id))),
            }
        }
        Some(states)
    };

    let s = &raw.settings;
    let mut defaults = Vec::new();
    let mut pick = |key: &str, cli: Option<f64>, file: Option<f64>, default: f64| -> f64 {
        cli.or(file).unwrap_or_else(|| {
            defaults.push(format!("{key}={default:?}"));
            default
        })
    };
    let tol_quad = positive("tol_quad", pick("tol_quad", overrides.tol_quad, s.tol_quad, DEFAULT_TOL_QUAD))?;
    let tol_scatter = positive(
        "tol_scatter",
        pick("tol_scatter", overrides.tol_scatter, s.tol_scatter, DEFAULT_TOL_SCATTER),
    )?;
    let occupation = pick("occupation", overrides.occupation, s.occupation, 0.0);
    if !(0.0..=1.0).contains(&occupation) {
        return Err(field("occupation", format!("must lie in [0, 1] (got {occupation})")));
    }
    let lead_length = overrides.lead_length.or(s.lead_length).unwrap_or_else(|| {
        defaults.push(format!("lead_length={DEFAULT_LEAD_LENGTH}"));
        DEFAULT_LEAD_LENGTH
    });
    if lead_length == 0 {
        return Err(field("lead_length", "must be positive"));
    }
    let samples = overrides.samples.or(s.samples).unwrap_or_else(|| {
        defaults.push(format!("samples={DEFAULT_SAMPLES}"));
        DEFAULT_SAMPLES
    });
    let grid = match overrides.grid.as_deref().or(s.grid.as_deref()) {
        Some(text) => Some(Grid::parse(text).map_err(|m| field("grid", m))?),
        None => None,
    };
    let window = match (&overrides.window, s.window) {
        (Some(text), _) => Some(parse_window(text)?),
        (None, Some([a, b])) => Some((a, b)),
        (None, None) => None,
    };
    if let Some((a, b)) = window {
        if !(a >= 0.0 && b > a) {
            return Err(field("window", format!("need 0 <= T1 < T2 (got [{a}, {b}])")));
        }
    }

    Ok(RunConfig {
        model,
        states,
        tol_quad,
        tol_scatter,
        lead_length,
        grid,
        window,
        samples,
        occupation,
        defaults,
    })
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text, overrides)
}
