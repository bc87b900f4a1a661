//! Experiment orchestration: configs, training runs, evaluation, fuzzing
//! and exports.

mod config;
mod eval;
mod export;
mod fuzz;
mod train;

pub use config::RunConfig;
pub use eval::{evaluate_agent, evaluate_policy, EvalTable, TaskResult};
pub use export::export_embeddings;
pub use fuzz::{fuzz_progression, random_formula, random_trace, FuzzConfig, FuzzReport, Mismatch};
pub use train::{manifest_for, train, MetricsRecord, TrainOutput};

use std::path::Path;

use crate::agent::{load_checkpoint, Agent, CheckpointManifest, Network};
use crate::curriculum::Scenario;
use crate::env::World;
use crate::error::{Error, Result};
use crate::ltl::{Closure, Formula};
use crate::mapping::Grounding;
use crate::mdp::TaskableMdp;

/// Scenario, product MDP and task closure of a config.
#[derive(Debug, Clone)]
pub struct Setup {
    pub scenario: Scenario,
    pub mdp: TaskableMdp,
    pub closure: Closure,
}

impl Setup {
    pub fn new(cfg: &RunConfig) -> Result<Setup> {
        let scenario = Scenario::builtin(cfg.scenario);
        let kind = scenario.kind;
        let grounding = Grounding::new(&scenario.symbols, &cfg.layout, kind)?;
        let mdp = TaskableMdp::new(World::new(kind, &cfg.layout), grounding, scenario.symbols.clone());
        let tasks: Vec<Formula> = scenario.all_levels().concat();
        let closure = Closure::build(&tasks, cfg.closure_cap)?;
        Ok(Setup { scenario, mdp, closure })
    }

    /// Tasks of levels `1..=level`.
    pub fn tasks_up_to(&self, level: usize) -> Vec<Formula> {
        (1..=level.min(self.scenario.max_level)).flat_map(|k| self.scenario.enumerate_tasks(k).expect("level in range")).collect()
    }
}

/// A checkpoint rebuilt against its own config.
pub struct Loaded {
    pub config: RunConfig,
    pub setup: Setup,
    pub agent: Agent,
    pub manifest: CheckpointManifest,
}

pub fn load_agent(dir: &Path) -> Result<Loaded> {
    let (manifest, params) = load_checkpoint(dir)?;
    let config: RunConfig = serde_json::from_value(manifest.config.clone())?;
    config.validate()?;
    let setup = Setup::new(&config)?;
    if manifest.symbols != setup.mdp.symbols {
        return Err(Error::CheckpointMismatch("symbol table differs from the scenario".into()));
    }
    let closure = manifest.closure()?;
    if closure.members() != setup.closure.members() {
        return Err(Error::CheckpointMismatch("closure differs from the scenario task set".into()));
    }
    let net = Network::new(manifest.architecture.clone())?;
    if net.n_params() != params.len() || net.arch != Agent::architecture_for(&setup.mdp, &closure, config.conditioning.clone()) {
        return Err(Error::CheckpointMismatch("architecture does not match the config".into()));
    }
    let agent = Agent { net, params, closure, max_step: setup.mdp.world.max_step() };
    Ok(Loaded { config, setup, agent, manifest })
}
