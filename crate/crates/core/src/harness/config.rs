//! TOML scenario files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxConfig {
    pub preset: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaConfig {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestsConfig {
    pub count: usize,
    pub width: f64,
}

/// A single σ or a strictly decreasing σ-continuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaConfig {
    Fixed(f64),
    Continuation(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub flux: FluxConfig,
    pub omega: OmegaConfig,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub initial: InitialConfig,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_cells")]
    pub cells_per_period: usize,
    #[serde(default = "default_dt_factor")]
    pub dt_factor: f64,
    pub tests: TestsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<SigmaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_cells() -> usize {
    16
}

fn default_dt_factor() -> f64 {
    1.0
}

impl ScenarioConfig {
    /// Parse TOML; errors carry the line and column of the offending key.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let at = e
                .span()
                .map(|s| {
                    let line = text[..s.start].matches('\n').count() + 1;
                    let col = s.start - text[..s.start].rfind('\n').map_or(0, |p| p + 1) + 1;
                    format!("line {line}, column {col}: ")
                })
                .unwrap_or_default();
            Error::Config(format!("{at}{}", e.message()))
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Named scenarios.
    pub fn preset(name: &str) -> Result<Self> {
        let text = match name {
            "stefan-wellprepared" => STEFAN_WELL_PREPARED,
            "stefan-general" => STEFAN_GENERAL,
            "heat" => HEAT,
            _ => return Err(Error::UnknownPreset(name.to_string())),
        };
        Self::from_toml(text)
    }
}

pub const PRESET_NAMES: &[&str] = &["stefan-wellprepared", "stefan-general", "heat"];

const STEFAN_WELL_PREPARED: &str = r#"
T = 0.5
epsilons = [0.25, 0.125, 0.0625, 0.03125]
cells_per_period = 16
dt_factor = 1.0
sigma = 1e-3

[flux]
preset = "stefan"

[omega]
a = -2.0
b = 2.0

[initial]
kind = "cos-tent"
params = { amplitude = 0.5, margin = 0.25 }

[tests]
count = 5
width = 0.6
"#;

const STEFAN_GENERAL: &str = r#"
T = 0.5
epsilons = [0.25, 0.125, 0.0625, 0.03125]
cells_per_period = 16
dt_factor = 1.0
sigma = 1e-3

[flux]
preset = "stefan"

[omega]
a = -2.0
b = 2.0

[initial]
kind = "inverse-cos"
params = { amplitude = 0.3, period = 4.0, radius = 1.5 }

[tests]
count = 5
width = 0.6
"#;

const HEAT: &str = r#"
T = 0.1
epsilons = [0.25, 0.125, 0.0625]
cells_per_period = 16
dt_factor = 0.5

[flux]
preset = "heat"

[omega]
a = 0.0
b = 1.0

[initial]
kind = "sine"
params = { amplitude = 1.0 }

[tests]
count = 3
width = 0.2
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_round_trip() {
        for name in PRESET_NAMES {
            let c = ScenarioConfig::preset(name).unwrap();
            assert_eq!(ScenarioConfig::from_toml(&c.to_toml()).unwrap(), c);
        }
        assert!(ScenarioConfig::preset("nope").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let text = "T = 0.5\nepsilon = [0.1]\n";
        match ScenarioConfig::from_toml(text) {
            Err(Error::Config(m)) => assert!(m.contains("line 2"), "{m}"),
            other => panic!("{other:?}"),
        }
        let mut c = ScenarioConfig::preset("heat").unwrap().to_toml();
        c.push_str("\n[omega2]\na = 1\n");
        assert!(ScenarioConfig::from_toml(&c).is_err());
    }

    #[test]
    fn sigma_forms() {
        let mut c = ScenarioConfig::preset("heat").unwrap();
        c.sigma = Some(SigmaConfig::Continuation(vec![1e-2, 5e-3, 2.5e-3]));
        let back = ScenarioConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back.sigma, c.sigma);
    }
}
