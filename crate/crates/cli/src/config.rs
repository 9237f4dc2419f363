use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

use peerinfo::model::GridConfig;
use peerinfo::{Policy, PopulationConfig, Scenario};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub population: PopulationConfig,
    pub clustering: ClusteringConfig,
    pub welfare: WelfareConfig,
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
    /// Scale each embedding to unit length before clustering.
    pub normalize: bool,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self { k_min: 2, k_max: 8, restarts: 10, normalize: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Timing {
    Exante,
    Expost,
    None,
}

impl Timing {
    fn scenario(self) -> Option<Scenario> {
        match self {
            Timing::Exante => Some(Scenario::ExAnte),
            Timing::Expost => Some(Scenario::ExPost),
            Timing::None => None,
        }
    }
}

/// Timing for each worker type, in type order 1 to 4.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WelfareConfig {
    pub targeted: [Timing; 4],
}

impl Default for WelfareConfig {
    fn default() -> Self {
        Self { targeted: [Timing::Exante, Timing::Expost, Timing::Exante, Timing::Exante] }
    }
}

impl WelfareConfig {
    pub fn policy(&self) -> Policy {
        Policy::Targeted(self.targeted.map(Timing::scenario))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub tolerance: f64,
    pub grid: GridConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { tolerance: 1e-7, grid: GridConfig::default() }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>, seed: Option<u64>) -> Result<Self> {
        let mut cfg: RunConfig = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => RunConfig::default(),
        };
        if let Some(s) = seed {
            cfg.population.seed = s;
        }
        cfg.population.validate().context("invalid population config")?;
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.population.seed
    }
}
