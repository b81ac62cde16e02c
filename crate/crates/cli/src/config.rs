use std::path::Path;

use serde::{Deserialize, Serialize};
use spikelab::sim::EntryLaw;
use spikelab::spike::FiniteSizes;
use spikelab::{AtomicMeasure, MPModel, Spike, SpikedModel};

use crate::CliError;

/// Masses in a config may be written with a few decimals; they must sum to
/// one within this tolerance and are then normalized exactly.
const MASS_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub location: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpikeConfig {
    pub alpha: f64,
    #[serde(default = "one")]
    pub multiplicity: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub y: f64,
    pub base_atoms: Vec<AtomConfig>,
    #[serde(default)]
    pub spikes: Vec<SpikeConfig>,
    pub p_prime: Option<usize>,
    pub n: Option<usize>,
    #[serde(default)]
    pub entry_law: EntryLaw,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_reps")]
    pub reps: usize,
}

fn default_reps() -> usize {
    20
}

impl ModelConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ModelConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.model()?;
        Ok(cfg)
    }

    pub fn base(&self) -> Result<AtomicMeasure, CliError> {
        let total: f64 = self.base_atoms.iter().map(|a| a.mass).sum();
        if (total - 1.0).abs() > MASS_SUM_TOL {
            return Err(CliError::Config(format!(
                "base_atoms masses sum to {total}, expected 1"
            )));
        }
        AtomicMeasure::from_weights(self.base_atoms.iter().map(|a| (a.location, a.mass)))
            .map_err(|e| CliError::Config(format!("base_atoms: {e}")))
    }

    /// `n` from the config, or `round(p′/y)` when only `p′` is given.
    pub fn sizes(&self) -> Option<FiniteSizes> {
        match (self.p_prime, self.n) {
            (Some(p_prime), Some(n)) => Some(FiniteSizes { p_prime, n }),
            (Some(p_prime), None) => Some(FiniteSizes {
                p_prime,
                n: (p_prime as f64 / self.y).round() as usize,
            }),
            (None, Some(n)) => Some(FiniteSizes {
                p_prime: (self.y * n as f64).round() as usize,
                n,
            }),
            (None, None) => None,
        }
    }

    pub fn model(&self) -> Result<SpikedModel, CliError> {
        let mp = MPModel::new(self.y, self.base()?).map_err(|e| CliError::Config(e.to_string()))?;
        let spikes = self
            .spikes
            .iter()
            .map(|s| Spike {
                alpha: s.alpha,
                multiplicity: s.multiplicity,
            })
            .collect();
        SpikedModel::new(mp, spikes, self.sizes()).map_err(|e| CliError::Config(format!("spikes: {e}")))
    }
}
