use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::presets;
use super::AlgebraFn;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Structured text description `{dim, kind, parameters}` of a named algebra
/// function. Recognized parameters: `scale`, `offset` (pointwise affine
/// image), `level` (for `clamp_psi0`) and `value` (for `constant`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraRecord {
    pub dim: usize,
    pub kind: String,
    pub preset: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

impl AlgebraRecord {
    pub fn preset(name: &str, dim: usize, kind: &str) -> Self {
        Self {
            dim,
            kind: kind.to_string(),
            preset: name.to_string(),
            parameters: BTreeMap::new(),
        }
    }

    pub fn with_parameter(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("algebra record: {e}")))
    }

    /// Rebuild the function this record describes.
    pub fn build<T: Scalar>(&self) -> Result<AlgebraFn<T>> {
        for key in self.parameters.keys() {
            if !matches!(key.as_str(), "scale" | "offset" | "level" | "value") {
                return Err(Error::Config(format!("unknown algebra parameter '{key}'")));
            }
        }
        let base = match self.preset.as_str() {
            "constant" => AlgebraFn::constant(
                self.dim,
                T::of(self.parameters.get("value").copied().unwrap_or(0.0)),
            ),
            "clamp_psi0" => {
                let level = self.parameters.get("level").copied().unwrap_or(0.5);
                if !(level > 0.0 && level < 1.0) {
                    return Err(Error::Config(format!("clamp level {level} outside (0, 1)")));
                }
                presets::clamp_psi0(T::of(level))
            }
            name => presets::preset::<T>(name)?,
        };
        if base.dim() != self.dim {
            return Err(Error::Config(format!(
                "preset '{}' has dimension {}, record says {}",
                self.preset,
                base.dim(),
                self.dim
            )));
        }
        let scale = self.parameters.get("scale").copied();
        let offset = self.parameters.get("offset").copied();
        let f = if scale.is_some() || offset.is_some() {
            base.affine(T::of(scale.unwrap_or(1.0)), T::of(offset.unwrap_or(0.0)))
        } else {
            base
        };
        Ok(f.with_record(self.clone()))
    }
}
