use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::{ConditioningConfig, TrainerConfig};
use crate::curriculum::{CurriculumMode, ScenarioName};
use crate::env::{EnvKind, Layout};
use crate::error::{io_err, Error, Result};
use crate::ltl::DEFAULT_CLOSURE_CAP;
use crate::par::Execution;

/// One experiment: scenario, model, curriculum and budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioName,
    pub conditioning: ConditioningConfig,
    #[serde(default)]
    pub curriculum: CurriculumMode,
    /// Environment steps across all parallel envs.
    pub total_steps: u64,
    #[serde(default = "defaults::eval_interval")]
    pub eval_interval: usize,
    #[serde(default = "defaults::eval_episodes")]
    pub eval_episodes: usize,
    #[serde(default = "defaults::final_eval_episodes")]
    pub final_eval_episodes: usize,
    #[serde(default = "defaults::seeds")]
    pub seeds: Vec<u64>,
    /// End training once the curriculum reaches this level.
    #[serde(default)]
    pub stop_at_level: Option<usize>,
    /// Evaluate with the most likely action instead of sampling.
    #[serde(default)]
    pub eval_deterministic: bool,
    #[serde(default)]
    pub execution: Execution,
    #[serde(default = "defaults::closure_cap")]
    pub closure_cap: usize,
    #[serde(default)]
    pub trainer: TrainerConfig,
    #[serde(default)]
    pub layout: Layout,
}

mod defaults {
    pub fn eval_interval() -> usize {
        25
    }
    pub fn eval_episodes() -> usize {
        20
    }
    pub fn final_eval_episodes() -> usize {
        50
    }
    pub fn seeds() -> Vec<u64> {
        vec![1, 2, 3]
    }
    pub fn closure_cap() -> usize {
        super::DEFAULT_CLOSURE_CAP
    }
}

impl RunConfig {
    /// Desk-scale defaults for a scenario.
    pub fn for_scenario(scenario: ScenarioName) -> RunConfig {
        let (conditioning, total_steps) = match scenario {
            ScenarioName::NavS1 => (ConditioningConfig::film(&[3]), 3_000_000),
            ScenarioName::NavS2 => (ConditioningConfig::film(&[3]), 5_000_000),
            ScenarioName::Inspect => (ConditioningConfig::film(&[1, 2, 3]), 5_000_000),
        };
        RunConfig {
            scenario,
            conditioning,
            curriculum: CurriculumMode::Normal,
            total_steps,
            eval_interval: defaults::eval_interval(),
            eval_episodes: defaults::eval_episodes(),
            final_eval_episodes: defaults::final_eval_episodes(),
            seeds: defaults::seeds(),
            stop_at_level: None,
            eval_deterministic: false,
            execution: Execution::default(),
            closure_cap: DEFAULT_CLOSURE_CAP,
            trainer: TrainerConfig::default(),
            layout: Layout::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn env_kind(&self) -> EnvKind {
        match self.scenario {
            ScenarioName::NavS1 | ScenarioName::NavS2 => EnvKind::Nav,
            ScenarioName::Inspect => EnvKind::Inspect,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.conditioning.validate()?;
        self.trainer.validate()?;
        self.layout.validate()?;
        if self.eval_interval == 0 {
            return Err(Error::Config("eval_interval must be at least 1".into()));
        }
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return Err(Error::Config(format!("seeds must be distinct: {:?}", self.seeds)));
        }
        if self.stop_at_level == Some(0) {
            return Err(Error::Config("stop_at_level must be at least 1".into()));
        }
        Ok(())
    }

    /// Stable identifier of a (config, seed) run.
    pub fn run_id(&self, seed: u64) -> String {
        let cond = match self.conditioning.mode {
            crate::agent::ConditioningMode::Film => {
                let layers: Vec<String> = self.conditioning.layers.iter().map(|l| l.to_string()).collect();
                format!("film{}", layers.join(""))
            }
            crate::agent::ConditioningMode::NaiveConcat => "naive".to_string(),
        };
        let cur = match self.curriculum {
            CurriculumMode::Normal => "normal",
            CurriculumMode::Anti => "anti",
            CurriculumMode::None => "none",
        };
        format!("{}-{cond}-{cur}-s{seed}", self.scenario.as_str())
    }
}
