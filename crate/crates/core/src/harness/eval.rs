use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::agent::{Agent, Cache};
use crate::error::Result;
use crate::ltl::Formula;
use crate::mdp::{rollout, Completion, Policy, ProductState, TaskableMdp};
use crate::par::{self, Execution};
use crate::rng::{derive_seed, stream, Rng};

/// Episodes advanced together through one batched forward pass.
const EVAL_CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task: String,
    pub level: usize,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalTable {
    pub tasks: Vec<TaskResult>,
    pub mean_success: f64,
    pub mean_length: f64,
}

impl EvalTable {
    fn from_outcomes(mdp: &TaskableMdp, tasks: &[Formula], episodes: usize, outcomes: &[(bool, usize)]) -> EvalTable {
        let rows: Vec<TaskResult> = tasks
            .iter()
            .enumerate()
            .map(|(j, task)| {
                let eps = &outcomes[j * episodes..(j + 1) * episodes];
                let successes = eps.iter().filter(|(s, _)| *s).count();
                TaskResult {
                    task: task.display(&mdp.symbols).to_string(),
                    level: task.symbols().len(),
                    episodes,
                    successes,
                    success_rate: successes as f64 / episodes as f64,
                    mean_length: eps.iter().map(|(_, l)| *l as f64).sum::<f64>() / episodes as f64,
                }
            })
            .collect();
        let n = rows.len().max(1) as f64;
        EvalTable {
            mean_success: rows.iter().map(|r| r.success_rate).sum::<f64>() / n,
            mean_length: rows.iter().map(|r| r.mean_length).sum::<f64>() / n,
            tasks: rows,
        }
    }

    pub fn success_by_task(&self) -> BTreeMap<String, f64> {
        self.tasks.iter().map(|r| (r.task.clone(), r.success_rate)).collect()
    }

    /// Mean success over the rows of one level.
    pub fn level_mean(&self, level: usize) -> Option<f64> {
        let rates: Vec<f64> = self.tasks.iter().filter(|r| r.level == level).map(|r| r.success_rate).collect();
        (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.tasks {
            w.serialize(row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| crate::Error::InvalidInput(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub(crate) fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::InvalidInput(format!("csv: {e}"))
}

fn episode_rng(seed: u64, task: usize, episode: usize) -> Rng {
    stream(seed, &[task as u64, episode as u64])
}

/// Runs `episodes` episodes of every task with the agent. Episode `(j, e)`
/// draws its spec set, start state and actions from its own stream, so the
/// table depends only on the seed.
pub fn evaluate_agent(
    agent: &Agent,
    mdp: &TaskableMdp,
    tasks: &[Formula],
    episodes: usize,
    seed: u64,
    deterministic: bool,
    exec: Execution,
) -> Result<EvalTable> {
    let jobs: Vec<(usize, usize)> = (0..tasks.len()).flat_map(|j| (0..episodes).map(move |e| (j, e))).collect();
    let n_chunks = jobs.len().div_ceil(EVAL_CHUNK);
    let chunks = par::map_indexed(exec, n_chunks, |c| {
        let batch = &jobs[c * EVAL_CHUNK..((c + 1) * EVAL_CHUNK).min(jobs.len())];
        run_lockstep(agent, mdp, tasks, batch, seed, deterministic)
    });
    let mut outcomes = Vec::with_capacity(jobs.len());
    for chunk in chunks {
        outcomes.extend(chunk?);
    }
    Ok(EvalTable::from_outcomes(mdp, tasks, episodes, &outcomes))
}

fn run_lockstep(
    agent: &Agent,
    mdp: &TaskableMdp,
    tasks: &[Formula],
    jobs: &[(usize, usize)],
    seed: u64,
    deterministic: bool,
) -> Result<Vec<(bool, usize)>> {
    struct Episode {
        ps: ProductState,
        rng: Rng,
        result: Option<(bool, usize)>,
    }
    let mut eps = jobs
        .iter()
        .map(|&(j, e)| {
            let mut rng = episode_rng(seed, j, e);
            let ps = mdp.episode_reset_sampled(&tasks[j], &mut rng)?;
            Ok(Episode { ps, rng, result: None })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cache = Cache::default();
    let mut scratch = Vec::new();
    let mut active: Vec<usize> = (0..eps.len()).collect();
    while !active.is_empty() {
        cache.clear();
        for &i in &active {
            agent.push_features(mdp, &eps[i].ps, &mut cache, &mut scratch)?;
        }
        agent.net.forward(&agent.params, &mut cache);
        for (row, &i) in active.iter().enumerate() {
            let ep = &mut eps[i];
            let sample = agent.sample_row(&cache, row, &mut ep.rng, deterministic);
            let out = mdp.product_step(&ep.ps, &sample.action)?;
            if out.terminal {
                ep.result = Some((out.completion == Completion::Satisfied, out.next.steps));
            }
            ep.ps = out.next;
        }
        active.retain(|&i| eps[i].result.is_none());
    }
    Ok(eps.into_iter().map(|e| e.result.expect("finished")).collect())
}

/// Same protocol for any cloneable policy, one episode at a time.
pub fn evaluate_policy<P>(policy: &P, mdp: &TaskableMdp, tasks: &[Formula], episodes: usize, seed: u64, exec: Execution) -> Result<EvalTable>
where
    P: Policy + Clone + Send + Sync,
{
    let outcomes = par::map_indexed(exec, tasks.len() * episodes, |k| {
        let (j, e) = (k / episodes, k % episodes);
        let mut rng = episode_rng(seed, j, e);
        let specs = mdp.grounding.sample_spec_set(&tasks[j].symbols(), &mut rng);
        let r = rollout(mdp, &mut policy.clone(), &tasks[j], specs, derive_seed(seed, &[j as u64, e as u64, 1]))?;
        Ok((r.success, r.len()))
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(EvalTable::from_outcomes(mdp, tasks, episodes, &outcomes))
}
