//! Run configuration. Every tunable that the engine, rewards, or trainer
//! consume is overridable from a TOML file; omitted fields keep their
//! defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::Rules;
use crate::error::{Error, Result};
use crate::ppo::Hyperparams;
use crate::reward::RewardConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub rules: Rules,
    pub rewards: RewardConfig,
    pub ppo: Hyperparams,
    /// Episode budget for the run.
    pub episodes: u64,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    /// Checkpoint cadence in completed episodes. Zero disables periodic
    /// checkpoints (a final one is always written).
    pub checkpoint_every: u64,
    /// Trace cadence: write traces/ep_<n>.log for every n-th episode.
    pub trace_every: u64,
    /// Per-tick spawn probability for the random attacker policy.
    pub random_spawn_prob: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            rules: Rules::default(),
            rewards: RewardConfig::default(),
            ppo: Hyperparams::default(),
            episodes: 500,
            master_seed: 0,
            out_dir: PathBuf::from("out"),
            checkpoint_every: 50,
            trace_every: 1,
            random_spawn_prob: 0.5,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.rules.validate()?;
        self.ppo.validate()?;
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.random_spawn_prob) {
            return Err(Error::Config("random_spawn_prob must be in [0, 1]".into()));
        }
        if self.trace_every == 0 {
            return Err(Error::Config("trace_every must be positive".into()));
        }
        Ok(())
    }
}
