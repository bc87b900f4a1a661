//! Spec-conditioned actor-critic and its trainer.

mod checkpoint;
mod linalg;
mod network;
mod ppo;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointManifest, CHECKPOINT_VERSION};
pub use network::{
    Architecture, Block, Cache, ConditioningConfig, ConditioningMode, Network, ENCODER_LAYERS, LOG_STD_MAX,
    LOG_STD_MIN,
};
pub use ppo::{
    clip_grad_norm, gae, gaussian_logp, log_softmax, loss_and_grad, normalize, Adam, LossStats, Targets,
    TrainerConfig,
};
pub(crate) use ppo::check_finite;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::env::{Action, NavAction};
use crate::error::{Error, Result};
use crate::ltl::Closure;
use crate::mapping::MappingSpec;
use crate::mdp::{Policy, ProductState, TaskableMdp};
use crate::rng::Rng;

/// A sampled action with the quantities the trainer needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSample {
    pub action: Action,
    /// Discrete action index (0 for continuous control).
    pub index: usize,
    /// Pre-squash Gaussian sample (empty for discrete control).
    pub raw: Vec<f64>,
    pub logp: f64,
    pub value: f64,
}

/// Network, parameters and the closure that indexes the task embeddings.
#[derive(Debug, Clone)]
pub struct Agent {
    pub net: Network,
    pub params: Vec<f64>,
    pub closure: Closure,
    pub max_step: Option<f64>,
}

impl Agent {
    pub fn architecture_for(mdp: &TaskableMdp, closure: &Closure, conditioning: ConditioningConfig) -> Architecture {
        Architecture::new(
            mdp.world.obs_dim(),
            mdp.grounding.spec_dim(),
            closure.len(),
            mdp.world.action_size(),
            mdp.world.is_discrete(),
            conditioning,
        )
    }

    pub fn new(mdp: &TaskableMdp, closure: Closure, conditioning: ConditioningConfig, rng: &mut Rng) -> Result<Agent> {
        let net = Network::new(Self::architecture_for(mdp, &closure, conditioning))?;
        let params = net.init(rng);
        Ok(Agent { net, params, closure, max_step: mdp.world.max_step() })
    }

    /// Appends one row for `ps`: observation, the next pending occurrence's
    /// encoded spec (zeros if it has none) and the closure index of the task.
    pub fn push_features(&self, mdp: &TaskableMdp, ps: &ProductState, cache: &mut Cache, scratch: &mut Vec<f64>) -> Result<()> {
        let task = self
            .closure
            .index_of(&ps.phi)
            .ok_or_else(|| Error::NotInClosure(ps.phi.display(&mdp.symbols).to_string()))?;
        scratch.clear();
        mdp.world.observe_into(&ps.env, scratch);
        let obs_len = scratch.len();
        let spec = ps.phi.next_pending().and_then(|id| ps.spec_set.get(id)).copied().unwrap_or(MappingSpec::None);
        mdp.grounding.ranges().encode_into(&spec, mdp.grounding.kind(), scratch);
        let (obs, spec) = scratch.split_at(obs_len);
        cache.push(obs, spec, task);
        Ok(())
    }

    /// Draws (or, if `deterministic`, picks the mode of) the action for
    /// `row` of an evaluated cache.
    pub fn sample_row(&self, cache: &Cache, row: usize, rng: &mut Rng, deterministic: bool) -> ActionSample {
        let a = self.net.arch.action_dim;
        let out = &cache.out[row * a..(row + 1) * a];
        let value = cache.value[row];
        if self.net.arch.discrete {
            let mut lsm = vec![0.0; a];
            log_softmax(out, &mut lsm);
            let index = if deterministic {
                (0..a).fold(0, |best, k| if lsm[k] > lsm[best] { k } else { best })
            } else {
                let x: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = a - 1;
                for (k, l) in lsm.iter().enumerate() {
                    acc += l.exp();
                    if x < acc {
                        pick = k;
                        break;
                    }
                }
                pick
            };
            ActionSample { action: Action::Nav(NavAction::from_index(index)), index, raw: Vec::new(), logp: lsm[index], value }
        } else {
            let log_std: Vec<f64> = self.net.log_std(&self.params).expect("continuous head").collect();
            let raw: Vec<f64> = if deterministic {
                out.to_vec()
            } else {
                out.iter()
                    .zip(&log_std)
                    .map(|(m, s)| m + s.exp() * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            };
            let scale = self.max_step.unwrap_or(1.0);
            let delta = std::array::from_fn(|k| raw.get(k).map_or(0.0, |u| u.tanh() * scale));
            let logp = gaussian_logp(&raw, out, &log_std);
            ActionSample { action: Action::Inspect(delta), index: 0, raw, logp, value }
        }
    }

    pub fn policy(&self, deterministic: bool) -> AgentPolicy<'_> {
        AgentPolicy { agent: self, cache: Cache::default(), scratch: Vec::new(), deterministic }
    }
}

/// Single-episode adapter implementing [`Policy`].
pub struct AgentPolicy<'a> {
    agent: &'a Agent,
    cache: Cache,
    scratch: Vec<f64>,
    deterministic: bool,
}

impl Policy for AgentPolicy<'_> {
    fn act(&mut self, mdp: &TaskableMdp, ps: &ProductState, rng: &mut Rng) -> Result<Action> {
        self.cache.clear();
        self.agent.push_features(mdp, ps, &mut self.cache, &mut self.scratch)?;
        self.agent.net.forward(&self.agent.params, &mut self.cache);
        Ok(self.agent.sample_row(&self.cache, 0, rng, self.deterministic).action)
    }
}
