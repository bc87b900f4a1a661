//! Product MDP: environment state, progressed task and active spec set.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::env::{Action, EnvState, World};
use crate::error::{Error, Result};
use crate::ltl::{progress, Formula, SymbolTable, TruthAssignment};
use crate::mapping::{Grounding, SpecSet};
use crate::rng::{stream, Rng};

pub const STEP_PENALTY: f64 = -0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    pub env: EnvState,
    pub phi: Formula,
    pub spec_set: SpecSet,
    pub steps: usize,
}

/// Completion part of the reward, before the step penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Completion {
    Satisfied,
    Violated,
    Pending,
}

impl Completion {
    pub fn reward(self) -> f64 {
        match self {
            Completion::Satisfied => 1.0,
            Completion::Violated => -1.0,
            Completion::Pending => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next: ProductState,
    pub reward: f64,
    pub completion: Completion,
    pub terminal: bool,
    pub satisfied: TruthAssignment,
}

/// Environment, grounding and reward constants of one scenario.
#[derive(Debug, Clone)]
pub struct TaskableMdp {
    pub world: World,
    pub grounding: Grounding,
    pub symbols: SymbolTable,
    pub step_penalty: f64,
}

impl TaskableMdp {
    pub fn new(world: World, grounding: Grounding, symbols: SymbolTable) -> Self {
        Self { world, grounding, symbols, step_penalty: STEP_PENALTY }
    }

    pub fn horizon(&self) -> usize {
        self.world.horizon()
    }

    pub fn is_terminal(&self, ps: &ProductState) -> bool {
        ps.phi.is_constant() || ps.steps >= self.horizon()
    }

    /// Fresh episode. The initial state is not evaluated against the task.
    pub fn episode_reset(&self, task: &Formula, spec_set: SpecSet, rng: &mut Rng) -> Result<ProductState> {
        if task.is_constant() {
            return Err(Error::InvalidInput("episode task must not be a constant".into()));
        }
        if let Some(id) = spec_set.missing(&task.symbols()) {
            return Err(Error::MissingSpec(self.symbols.name(id).to_string()));
        }
        Ok(ProductState { env: self.world.reset(rng), phi: task.clone(), spec_set, steps: 0 })
    }

    /// Samples a spec set for `task`, then resets.
    pub fn episode_reset_sampled(&self, task: &Formula, rng: &mut Rng) -> Result<ProductState> {
        let specs = self.grounding.sample_spec_set(&task.symbols(), rng);
        self.episode_reset(task, specs, rng)
    }

    pub fn product_step(&self, ps: &ProductState, action: &Action) -> Result<StepOutcome> {
        if self.is_terminal(ps) {
            return Err(Error::TerminalStep);
        }
        let env = self.world.step(&ps.env, action);
        let satisfied = self.grounding.map_symbols(&ps.spec_set, &env);
        let phi = progress(&ps.phi, &satisfied);
        let completion = match phi {
            Formula::True => Completion::Satisfied,
            Formula::False => Completion::Violated,
            _ => Completion::Pending,
        };
        let steps = ps.steps + 1;
        let next = ProductState { env, phi, spec_set: ps.spec_set.clone(), steps };
        let terminal = self.is_terminal(&next);
        Ok(StepOutcome { next, reward: completion.reward() + self.step_penalty, completion, terminal, satisfied })
    }
}

/// Chooses actions in a product state.
pub trait Policy {
    fn act(&mut self, mdp: &TaskableMdp, ps: &ProductState, rng: &mut Rng) -> Result<Action>;
}

/// One logged transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub state: EnvState,
    pub action: Action,
    pub satisfied: Vec<String>,
    pub phi: String,
    pub reward: f64,
    pub terminal: bool,
}

#[derive(Debug, Clone)]
pub struct Rollout {
    pub steps: Vec<StepRecord>,
    pub completion: Completion,
    pub success: bool,
}

impl Rollout {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn undiscounted_return(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    /// JSON-lines trajectory log, one record per step.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for s in &self.steps {
            serde_json::to_writer(&mut out, s)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Runs one episode to termination with randomness drawn from `seed`.
pub fn rollout<P: Policy + ?Sized>(
    mdp: &TaskableMdp,
    policy: &mut P,
    task: &Formula,
    spec_set: SpecSet,
    seed: u64,
) -> Result<Rollout> {
    let mut rng = stream(seed, &[]);
    let mut ps = mdp.episode_reset(task, spec_set, &mut rng)?;
    let mut steps = Vec::new();
    loop {
        let action = policy.act(mdp, &ps, &mut rng)?;
        let out = mdp.product_step(&ps, &action)?;
        steps.push(StepRecord {
            t: out.next.steps,
            state: out.next.env,
            action,
            satisfied: out.satisfied.names(&mdp.symbols),
            phi: out.next.phi.display(&mdp.symbols).to_string(),
            reward: out.reward,
            terminal: out.terminal,
        });
        let done = out.terminal;
        let completion = out.completion;
        ps = out.next;
        if done {
            return Ok(Rollout { steps, completion, success: completion == Completion::Satisfied });
        }
    }
}
