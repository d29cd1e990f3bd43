//! Run configuration read from a TOML file.
//!
//! Every key is optional; command-line flags override file values, which
//! override the defaults below. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use shapeflow_core::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OtMethod {
    #[default]
    Exact,
    Entropic,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Cells along the longest axis of generated shapes.
    pub resolution: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { resolution: 128 }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OtConfig {
    pub method: OtMethod,
    /// Samples drawn from each shape.
    pub samples: usize,
    /// Degree of the fitted transport potential.
    pub degree: u32,
    /// Relative mass difference accepted between source and target shapes.
    pub mass_tolerance: f64,
}

impl Default for OtConfig {
    fn default() -> Self {
        Self { method: OtMethod::Exact, samples: 2000, degree: 3, mass_tolerance: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SprayConfig {
    pub epsilon: f64,
    pub delta: f64,
}

impl Default for SprayConfig {
    fn default() -> Self {
        Self { epsilon: 0.1, delta: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dimension: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub grid: GridConfig,
    pub ot: OtConfig,
    pub spray: SprayConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dimension: 2,
            seed: 1,
            out_dir: PathBuf::from("."),
            grid: GridConfig::default(),
            ot: OtConfig::default(),
            spray: SprayConfig::default(),
        }
    }
}

fn check(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("config: {what}")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = toml::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check((1..=3).contains(&self.dimension), "dimension must be 1, 2 or 3")?;
        check((8..=1024).contains(&self.grid.resolution), "grid.resolution must be in 8..=1024")?;
        check((10..=20_000).contains(&self.ot.samples), "ot.samples must be in 10..=20000")?;
        check((2..=4).contains(&self.ot.degree), "ot.degree must be in 2..=4")?;
        check((0.0..0.5).contains(&self.ot.mass_tolerance), "ot.mass_tolerance must be in [0, 0.5)")?;
        check(self.spray.epsilon > 0.0 && self.spray.epsilon <= 1.0, "spray.epsilon must be in (0, 1]")?;
        check(self.spray.delta > 0.0 && self.spray.delta < 1.0, "spray.delta must be in (0, 1)")
    }
}
