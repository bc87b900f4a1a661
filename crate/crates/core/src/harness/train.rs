use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::eval::{evaluate_agent, EvalTable};
use super::Setup;
use crate::agent::{
    check_finite, clip_grad_norm, gae, loss_and_grad, normalize, save_checkpoint, Adam, Agent, Cache,
    CheckpointManifest, LossStats, Targets, TrainerConfig, CHECKPOINT_VERSION,
};
use crate::curriculum::CurriculumState;
use crate::env::Action;
use crate::error::{io_err, Result};
use crate::mdp::{Completion, ProductState, TaskableMdp};
use crate::par::{self, Execution};
use crate::rng::{derive_seed, stream, tag, Rng};

/// One evaluation point of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub run_id: String,
    pub step: u64,
    pub update: usize,
    /// Level in force during the evaluation, before any advance.
    pub level: usize,
    pub per_task_success: std::collections::BTreeMap<String, f64>,
    pub mean_success: f64,
    pub advanced: bool,
    /// Loss statistics of the update preceding the evaluation.
    pub losses: LossStats,
    /// Episodes finished during training since the previous record.
    pub train_episodes: usize,
    pub train_success: f64,
    pub train_mean_return: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub run_id: String,
    pub metrics: Vec<MetricsRecord>,
    pub final_eval: Option<EvalTable>,
    pub agent: Agent,
    pub steps: u64,
    pub level: usize,
}

struct Slot {
    ps: ProductState,
    rng: Rng,
    ep_return: f64,
    out: Option<Result<SlotStep>>,
}

struct SlotStep {
    reward: f64,
    done: bool,
    /// Final state of an episode cut by the horizon, for bootstrapping.
    truncated: Option<ProductState>,
    finished: Option<(bool, f64)>,
}

/// On-policy samples stored time-major (`t * n_envs + env`).
#[derive(Default)]
struct Buffer {
    obs: Vec<f64>,
    spec: Vec<f64>,
    task: Vec<usize>,
    actions: Vec<usize>,
    raw: Vec<f64>,
    logp: Vec<f64>,
    values: Vec<f64>,
    rewards: Vec<f64>,
    dones: Vec<bool>,
    advantages: Vec<f64>,
    returns: Vec<f64>,
}

#[derive(Default)]
struct EpisodeWindow {
    episodes: usize,
    successes: usize,
    return_sum: f64,
}

struct Trainer<'a> {
    cfg: &'a TrainerConfig,
    mdp: &'a TaskableMdp,
    exec: Execution,
    slots: Vec<Slot>,
    cache: Cache,
    scratch: Vec<f64>,
    window: EpisodeWindow,
}

impl<'a> Trainer<'a> {
    fn new(cfg: &'a TrainerConfig, mdp: &'a TaskableMdp, curriculum: &CurriculumState, seed: u64, exec: Execution) -> Result<Self> {
        let slots = (0..cfg.n_envs)
            .map(|i| {
                let mut rng = stream(seed, &[tag::TRAIN_ENV, i as u64]);
                let task = curriculum.sample_task(&mut rng);
                let ps = mdp.episode_reset_sampled(&task, &mut rng)?;
                Ok(Slot { ps, rng, ep_return: 0.0, out: None })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Trainer { cfg, mdp, exec, slots, cache: Cache::default(), scratch: Vec::new(), window: EpisodeWindow::default() })
    }

    fn load_states<'s>(&mut self, agent: &Agent, states: impl Iterator<Item = &'s ProductState>) -> Result<()> {
        self.cache.clear();
        for ps in states {
            agent.push_features(self.mdp, ps, &mut self.cache, &mut self.scratch)?;
        }
        agent.net.forward(&agent.params, &mut self.cache);
        Ok(())
    }

    fn collect(&mut self, agent: &Agent, curriculum: &CurriculumState) -> Result<Buffer> {
        let n_envs = self.cfg.n_envs;
        let horizon = self.cfg.rollout_steps / n_envs;
        let mut buf = Buffer::default();
        for _ in 0..horizon {
            let slots = std::mem::take(&mut self.slots);
            self.load_states(agent, slots.iter().map(|s| &s.ps))?;
            self.slots = slots;
            buf.obs.extend_from_slice(&self.cache.obs);
            buf.spec.extend_from_slice(&self.cache.spec);
            buf.task.extend_from_slice(&self.cache.task);
            let mut actions: Vec<Action> = Vec::with_capacity(n_envs);
            for (row, slot) in self.slots.iter_mut().enumerate() {
                let s = agent.sample_row(&self.cache, row, &mut slot.rng, false);
                buf.actions.push(s.index);
                buf.raw.extend_from_slice(&s.raw);
                buf.logp.push(s.logp);
                buf.values.push(s.value);
                actions.push(s.action);
            }
            let mdp = self.mdp;
            par::for_each_mut(self.exec, &mut self.slots, |i, slot| {
                slot.out = Some(step_slot(mdp, curriculum, slot, &actions[i]));
            });
            let base = buf.rewards.len();
            let mut truncated = Vec::new();
            for (i, slot) in self.slots.iter_mut().enumerate() {
                let step = slot.out.take().expect("stepped")?;
                buf.rewards.push(step.reward);
                buf.dones.push(step.done);
                if let Some((success, ret)) = step.finished {
                    self.window.episodes += 1;
                    self.window.successes += usize::from(success);
                    self.window.return_sum += ret;
                }
                if let Some(ps) = step.truncated {
                    truncated.push((base + i, ps));
                }
            }
            if !truncated.is_empty() {
                self.load_states(agent, truncated.iter().map(|(_, ps)| ps))?;
                for (row, (k, _)) in truncated.iter().enumerate() {
                    buf.rewards[*k] += self.cfg.gamma * self.cache.value[row];
                }
            }
        }
        let slots = std::mem::take(&mut self.slots);
        self.load_states(agent, slots.iter().map(|s| &s.ps))?;
        self.slots = slots;
        let last_values = self.cache.value.clone();

        let n = buf.rewards.len();
        buf.advantages = vec![0.0; n];
        buf.returns = vec![0.0; n];
        for e in 0..n_envs {
            let col = |v: &[f64]| (0..horizon).map(|t| v[t * n_envs + e]).collect::<Vec<f64>>();
            let dones: Vec<bool> = (0..horizon).map(|t| buf.dones[t * n_envs + e]).collect();
            let (adv, ret) = gae(&col(&buf.rewards), &col(&buf.values), &dones, last_values[e], self.cfg.gamma, self.cfg.gae_lambda);
            for t in 0..horizon {
                buf.advantages[t * n_envs + e] = adv[t];
                buf.returns[t * n_envs + e] = ret[t];
            }
        }
        Ok(buf)
    }
}

fn step_slot(mdp: &TaskableMdp, curriculum: &CurriculumState, slot: &mut Slot, action: &Action) -> Result<SlotStep> {
    let out = mdp.product_step(&slot.ps, action)?;
    slot.ep_return += out.reward;
    if !out.terminal {
        slot.ps = out.next;
        return Ok(SlotStep { reward: out.reward, done: false, truncated: None, finished: None });
    }
    let finished = Some((out.completion == Completion::Satisfied, slot.ep_return));
    let truncated = (out.completion == Completion::Pending).then_some(out.next);
    let task = curriculum.sample_task(&mut slot.rng);
    slot.ps = mdp.episode_reset_sampled(&task, &mut slot.rng)?;
    slot.ep_return = 0.0;
    Ok(SlotStep { reward: out.reward, done: true, truncated, finished })
}

/// Epochs of shuffled minibatch updates. Each minibatch's gradient is the
/// ordered sum of fixed-size chunk gradients, which makes the result
/// independent of the execution mode.
fn ppo_update(
    agent: &mut Agent,
    buf: &Buffer,
    cfg: &TrainerConfig,
    opt: &mut Adam,
    rng: &mut Rng,
    exec: Execution,
    update: usize,
) -> Result<LossStats> {
    let n = buf.rewards.len();
    let arch = agent.net.arch.clone();
    let a = arch.action_dim;
    let mut order: Vec<usize> = (0..n).collect();
    let mut total = LossStats::default();
    let mut batches = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for mb in order.chunks(cfg.minibatch_size) {
            let mut adv: Vec<f64> = mb.iter().map(|&k| buf.advantages[k]).collect();
            normalize(&mut adv);
            let scale = 1.0 / mb.len() as f64;
            let n_chunks = mb.len().div_ceil(cfg.grad_chunk);
            let params = &agent.params;
            let net = &agent.net;
            let parts = par::map_indexed(exec, n_chunks, |c| {
                let lo = c * cfg.grad_chunk;
                let rows = &mb[lo..(lo + cfg.grad_chunk).min(mb.len())];
                let mut cache = Cache::default();
                let mut t = Targets::default();
                for (r, &k) in rows.iter().enumerate() {
                    cache.push(
                        &buf.obs[k * arch.obs_dim..(k + 1) * arch.obs_dim],
                        &buf.spec[k * arch.spec_dim..(k + 1) * arch.spec_dim],
                        buf.task[k],
                    );
                    t.actions.push(buf.actions[k]);
                    if !arch.discrete {
                        t.raw_actions.extend_from_slice(&buf.raw[k * a..(k + 1) * a]);
                    }
                    t.logp_old.push(buf.logp[k]);
                    t.advantages.push(adv[lo + r]);
                    t.returns.push(buf.returns[k]);
                }
                let mut grad = vec![0.0; net.n_params()];
                let stats = loss_and_grad(net, params, &mut cache, &t, cfg, scale, Some(&mut grad));
                (grad, stats)
            });
            let mut grad = vec![0.0; agent.net.n_params()];
            let mut stats = LossStats::default();
            for (g, s) in &parts {
                grad.iter_mut().zip(g).for_each(|(acc, v)| *acc += v);
                stats.add(s);
            }
            check_finite(update, &stats, &grad)?;
            clip_grad_norm(&mut grad, cfg.max_grad_norm);
            opt.step(&mut agent.params, &grad, cfg.learning_rate);
            total.add(&stats);
            batches += 1;
        }
    }
    total.scale(1.0 / batches.max(1) as f64);
    Ok(total)
}

struct Outputs {
    metrics: BufWriter<File>,
    timing: BufWriter<File>,
}

impl Outputs {
    fn create(dir: &Path, cfg: &RunConfig) -> Result<Outputs> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join("config.toml");
        fs::write(&path, cfg.to_toml_string()).map_err(io_err(&path))?;
        let open = |name: &str| -> Result<BufWriter<File>> {
            let path = dir.join(name);
            Ok(BufWriter::new(File::create(&path).map_err(io_err(&path))?))
        };
        Ok(Outputs { metrics: open("metrics.jsonl")?, timing: open("timing.jsonl")? })
    }

    fn line<T: Serialize>(w: &mut BufWriter<File>, record: &T, dir: &Path) -> Result<()> {
        serde_json::to_writer(&mut *w, record)?;
        w.write_all(b"\n").and_then(|_| w.flush()).map_err(io_err(dir))
    }
}

#[derive(Serialize)]
struct TimingRecord<'a> {
    run_id: &'a str,
    update: usize,
    step: u64,
    wall_clock_s: f64,
}

/// Builds the checkpoint manifest for `agent` at the given progress.
pub fn manifest_for(cfg: &RunConfig, setup: &Setup, agent: &Agent, seed: u64, update: usize, steps: u64, level: usize) -> Result<CheckpointManifest> {
    Ok(CheckpointManifest {
        version: CHECKPOINT_VERSION,
        architecture: agent.net.arch.clone(),
        symbols: setup.mdp.symbols.clone(),
        closure: agent.closure.members().iter().map(|f| f.display(&setup.mdp.symbols).to_string()).collect(),
        n_params: agent.net.n_params(),
        seed,
        update,
        steps,
        level,
        config: serde_json::to_value(cfg)?,
    })
}

/// Full training loop for one seed. With `out`, writes `config.toml`,
/// `metrics.jsonl`, `timing.jsonl`, `checkpoint/` and `final_eval.csv`.
pub fn train(cfg: &RunConfig, seed: u64, out: Option<&Path>) -> Result<TrainOutput> {
    cfg.validate()?;
    let started = Instant::now();
    let setup = Setup::new(cfg)?;
    let mdp = &setup.mdp;
    let run_id = cfg.run_id(seed);
    let mut agent = Agent::new(mdp, setup.closure.clone(), cfg.conditioning.clone(), &mut stream(seed, &[tag::INIT]))?;
    let mut curriculum = CurriculumState::for_scenario(&setup.scenario, cfg.curriculum);
    let mut outputs = out.map(|dir| Outputs::create(dir, cfg)).transpose()?;

    let tc = &cfg.trainer;
    let mut trainer = Trainer::new(tc, mdp, &curriculum, seed, cfg.execution)?;
    let mut opt = Adam::new(agent.net.n_params(), tc.adam_eps);
    let mut mb_rng = stream(seed, &[tag::MINIBATCH]);
    let n_updates = cfg.total_steps.div_ceil(tc.rollout_steps as u64) as usize;
    let mut steps = 0u64;
    let mut metrics = Vec::new();

    for update in 1..=n_updates {
        let buf = trainer.collect(&agent, &curriculum)?;
        steps += buf.rewards.len() as u64;
        let losses = ppo_update(&mut agent, &buf, tc, &mut opt, &mut mb_rng, cfg.execution, update)?;
        if update % cfg.eval_interval != 0 {
            continue;
        }
        let round = (update / cfg.eval_interval) as u64;
        let tasks = curriculum.active_tasks();
        let eval_seed = derive_seed(seed, &[tag::EVAL, round]);
        let table = evaluate_agent(&agent, mdp, &tasks, cfg.eval_episodes, eval_seed, cfg.eval_deterministic, cfg.execution)?;
        let level = curriculum.level();
        let by_formula = tasks.iter().cloned().zip(table.tasks.iter().map(|r| r.success_rate)).collect();
        let advanced = curriculum.record_eval_and_maybe_advance(&by_formula)?;
        let w = std::mem::take(&mut trainer.window);
        let record = MetricsRecord {
            run_id: run_id.clone(),
            step: steps,
            update,
            level,
            per_task_success: table.success_by_task(),
            mean_success: table.mean_success,
            advanced,
            losses,
            train_episodes: w.episodes,
            train_success: w.successes as f64 / w.episodes.max(1) as f64,
            train_mean_return: w.return_sum / w.episodes.max(1) as f64,
        };
        if let (Some(o), Some(dir)) = (outputs.as_mut(), out) {
            Outputs::line(&mut o.metrics, &record, dir)?;
            let timing = TimingRecord { run_id: &run_id, update, step: steps, wall_clock_s: started.elapsed().as_secs_f64() };
            Outputs::line(&mut o.timing, &timing, dir)?;
            let manifest = manifest_for(cfg, &setup, &agent, seed, update, steps, curriculum.level())?;
            save_checkpoint(&dir.join("checkpoint"), &manifest, &agent.params)?;
        }
        metrics.push(record);
        if cfg.stop_at_level.is_some_and(|stop| curriculum.level() >= stop) {
            break;
        }
    }

    let final_eval = if cfg.final_eval_episodes > 0 {
        let all: Vec<_> = curriculum.all_tasks().cloned().collect();
        let seed = derive_seed(seed, &[tag::FINAL_EVAL]);
        Some(evaluate_agent(&agent, mdp, &all, cfg.final_eval_episodes, seed, cfg.eval_deterministic, cfg.execution)?)
    } else {
        None
    };
    if let Some(dir) = out {
        let manifest = manifest_for(cfg, &setup, &agent, seed, metrics.last().map_or(0, |m| m.update), steps, curriculum.level())?;
        save_checkpoint(&dir.join("checkpoint"), &manifest, &agent.params)?;
        if let Some(table) = &final_eval {
            let path = dir.join("final_eval.csv");
            fs::write(&path, table.to_csv()?).map_err(io_err(&path))?;
        }
    }
    Ok(TrainOutput { run_id, metrics, final_eval, agent, steps, level: curriculum.level() })
}
