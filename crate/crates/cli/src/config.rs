//! Flat `key = value` run configuration.
//!
//! ```text
//! # interacting chain, spin-down bath only
//! L = 128
//! J = 1
//! U = 4
//! kappa_down = 1.5
//! gamma_down = 0.5
//! loss_topology_down = nonreciprocal
//! ```
//!
//! `L`, `J` and `U` are required. Rates default to zero and topologies to
//! `uniform`. Energies are read in the same absolute unit as `J` and
//! rescaled so the model runs at `J = 1`.

use std::collections::BTreeMap;
use std::fmt;

use hkdiss_core::presets::{preset, NAMES};
use hkdiss_core::{BathSpec, LatticeConfig, LossTopology, Model, SpinBath};
use serde::Serialize;

const KEYS: [&str; 9] = [
    "L",
    "J",
    "U",
    "kappa_up",
    "kappa_down",
    "gamma_up",
    "gamma_down",
    "loss_topology_up",
    "loss_topology_down",
];
const REQUIRED: [&str; 3] = ["L", "J", "U"];

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Syntax { line: usize },
    UnknownKey { line: usize, key: String },
    DuplicateKey { line: usize, key: String },
    InvalidValue { line: usize, key: String, reason: String },
    MissingKey(&'static str),
    UnknownPreset(String),
    Model(hkdiss_core::Error),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Syntax { line } => write!(f, "line {line}: expected `key = value`"),
            Self::UnknownKey { line, key } => {
                write!(f, "line {line}: unknown key `{key}` (expected one of {})", KEYS.join(", "))
            }
            Self::DuplicateKey { line, key } => write!(f, "line {line}: key `{key}` given twice"),
            Self::InvalidValue { line, key, reason } => write!(f, "line {line}: key `{key}`: {reason}"),
            Self::MissingKey(key) => write!(f, "missing required key `{key}`"),
            Self::UnknownPreset(name) => write!(f, "unknown preset `{name}` (expected one of {})", NAMES.join(", ")),
            Self::Model(e) => write!(f, "invalid parameters: {e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parameters as the user gave them, echoed into every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct Parameters {
    pub preset: Option<String>,
    pub L: usize,
    pub J: f64,
    pub U: f64,
    pub kappa_up: f64,
    pub kappa_down: f64,
    pub gamma_up: f64,
    pub gamma_down: f64,
    pub loss_topology_up: &'static str,
    pub loss_topology_down: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub parameters: Parameters,
    /// The model in units of `J`.
    pub model: Model,
}

fn topology_name(t: LossTopology) -> &'static str {
    match t {
        LossTopology::Uniform => "uniform",
        LossTopology::NonReciprocal => "nonreciprocal",
    }
}

fn parse_topology(s: &str) -> Option<LossTopology> {
    match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
        "uniform" => Some(LossTopology::Uniform),
        "nonreciprocal" => Some(LossTopology::NonReciprocal),
        _ => None,
    }
}

impl RunConfig {
    pub fn from_preset(name: &str) -> Result<Self, ConfigError> {
        let model = preset(name).ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
        let (up, down) = (model.bath.up, model.bath.down);
        let parameters = Parameters {
            preset: Some(name.to_string()),
            L: model.sites(),
            J: model.lattice.hopping,
            U: model.u(),
            kappa_up: up.gain,
            kappa_down: down.gain,
            gamma_up: up.loss,
            gamma_down: down.loss,
            loss_topology_up: topology_name(up.topology),
            loss_topology_down: topology_name(down.topology),
        };
        Ok(Self { parameters, model })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            let Some(&key) = KEYS.iter().find(|&&k| k == key) else {
                return Err(ConfigError::UnknownKey { line, key: key.to_string() });
            };
            if entries.insert(key, (line, value)).is_some() {
                return Err(ConfigError::DuplicateKey { line, key: key.to_string() });
            }
        }
        if let Some(missing) = REQUIRED.iter().find(|k| !entries.contains_key(*k)) {
            return Err(ConfigError::MissingKey(missing));
        }
        let invalid = |key: &str, line: usize, reason: &str| ConfigError::InvalidValue {
            line,
            key: key.to_string(),
            reason: reason.to_string(),
        };
        let number = |key: &str| -> Result<f64, ConfigError> {
            match entries.get(key) {
                None => Ok(0.0),
                Some(&(line, v)) => v
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| invalid(key, line, "expected a finite number")),
            }
        };
        let topology = |key: &str| -> Result<LossTopology, ConfigError> {
            match entries.get(key) {
                None => Ok(LossTopology::Uniform),
                Some(&(line, v)) => {
                    parse_topology(v).ok_or_else(|| invalid(key, line, "expected `uniform` or `nonreciprocal`"))
                }
            }
        };
        let (line, l) = entries["L"];
        let sites: usize = l.parse().map_err(|_| invalid("L", line, "expected a positive integer"))?;
        let parameters = Parameters {
            preset: None,
            L: sites,
            J: number("J")?,
            U: number("U")?,
            kappa_up: number("kappa_up")?,
            kappa_down: number("kappa_down")?,
            gamma_up: number("gamma_up")?,
            gamma_down: number("gamma_down")?,
            loss_topology_up: topology_name(topology("loss_topology_up")?),
            loss_topology_down: topology_name(topology("loss_topology_down")?),
        };
        let model = build_model(&parameters).map_err(ConfigError::Model)?;
        Ok(Self { parameters, model })
    }
}

fn build_model(p: &Parameters) -> hkdiss_core::Result<Model> {
    let j = p.J;
    if j.is_nan() || j <= 0.0 {
        return Err(hkdiss_core::Error::InvalidParameter { name: "J", reason: "must be positive" });
    }
    let lattice = LatticeConfig::new(p.L, 1.0, p.U / j)?;
    let topo = |s: &str| parse_topology(s).unwrap_or_default();
    let up = SpinBath::new(p.kappa_up / j, p.gamma_up / j, topo(p.loss_topology_up))?;
    let down = SpinBath::new(p.kappa_down / j, p.gamma_down / j, topo(p.loss_topology_down))?;
    Ok(Model::new(lattice, BathSpec { up, down }))
}
