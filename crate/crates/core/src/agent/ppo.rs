//! Clipped-surrogate policy optimisation: loss, gradients, GAE and Adam.

use serde::{Deserialize, Serialize};

use super::network::{Cache, Network, LOG_STD_MAX, LOG_STD_MIN};
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_eps: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    /// Environment steps collected per update, across all parallel envs.
    pub rollout_steps: usize,
    pub n_envs: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub adam_eps: f64,
    /// Rows per gradient chunk; chunks are reduced in a fixed order.
    pub grad_chunk: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_eps: 0.2,
            learning_rate: 3e-4,
            epochs: 4,
            minibatch_size: 256,
            rollout_steps: 4096,
            n_envs: 16,
            entropy_coef: 0.01,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            adam_eps: 1e-5,
            grad_chunk: 64,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must lie in [0, 1]");
        }
        if self.n_envs == 0 || self.rollout_steps < self.n_envs || !self.rollout_steps.is_multiple_of(self.n_envs) {
            return bad("rollout_steps must be a positive multiple of n_envs");
        }
        if self.minibatch_size == 0 || self.epochs == 0 || self.grad_chunk == 0 {
            return bad("minibatch_size, epochs and grad_chunk must be positive");
        }
        if !(self.learning_rate > 0.0 && self.clip_eps > 0.0 && self.max_grad_norm > 0.0) {
            return bad("learning_rate, clip_eps and max_grad_norm must be positive");
        }
        Ok(())
    }
}

/// One minibatch row set: inputs plus the on-policy targets.
#[derive(Debug, Clone, Default)]
pub struct Targets {
    /// Discrete action indices, or pre-squash Gaussian samples
    /// (`action_dim` per row) for continuous control.
    pub actions: Vec<usize>,
    pub raw_actions: Vec<f64>,
    pub logp_old: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossStats {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_frac: f64,
}

impl LossStats {
    pub fn add(&mut self, o: &LossStats) {
        self.total += o.total;
        self.policy += o.policy;
        self.value += o.value;
        self.entropy += o.entropy;
        self.approx_kl += o.approx_kl;
        self.clip_frac += o.clip_frac;
    }

    pub fn scale(&mut self, s: f64) {
        for v in [&mut self.total, &mut self.policy, &mut self.value, &mut self.entropy, &mut self.approx_kl, &mut self.clip_frac] {
            *v *= s;
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.total, self.policy, self.value, self.entropy, self.approx_kl].iter().all(|v| v.is_finite())
    }
}

/// Log-softmax of one logit row.
pub fn log_softmax(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    for (o, l) in out.iter_mut().zip(logits) {
        *o = l - lse;
    }
}

/// Gaussian log density of `u` under `N(mean, exp(log_std)^2)`, summed.
pub fn gaussian_logp(u: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    u.iter()
        .zip(mean)
        .zip(log_std)
        .map(|((u, m), s)| {
            let z = (u - m) / s.exp();
            -0.5 * z * z - s - 0.5 * LN_2PI
        })
        .sum()
}

/// Runs forward on `cache` and evaluates the PPO loss, each row weighted by
/// `scale` (typically one over the minibatch size). When `grad` is given,
/// the gradient of the weighted loss is accumulated into it.
pub fn loss_and_grad(
    net: &Network,
    params: &[f64],
    cache: &mut Cache,
    targets: &Targets,
    cfg: &TrainerConfig,
    scale: f64,
    grad: Option<&mut [f64]>,
) -> LossStats {
    net.forward(params, cache);
    let b = cache.batch;
    let a = net.arch.action_dim;
    let mut d_out = vec![0.0; b * a];
    let mut d_value = vec![0.0; b];
    let mut stats = LossStats::default();
    let mut d_log_std = vec![0.0; a];
    let log_std: Vec<f64> = net.log_std(params).map(|it| it.collect()).unwrap_or_default();
    let mut lsm = vec![0.0; a];

    for row in 0..b {
        let out = &cache.out[row * a..(row + 1) * a];
        let adv = targets.advantages[row];
        let (logp, entropy) = if net.arch.discrete {
            log_softmax(out, &mut lsm);
            let ent = -lsm.iter().map(|l| l.exp() * l).sum::<f64>();
            (lsm[targets.actions[row]], ent)
        } else {
            let u = &targets.raw_actions[row * a..(row + 1) * a];
            let ent = log_std.iter().map(|s| s + 0.5 * (1.0 + LN_2PI)).sum::<f64>();
            (gaussian_logp(u, out, &log_std), ent)
        };
        let log_ratio = logp - targets.logp_old[row];
        let ratio = log_ratio.exp();
        let surr1 = ratio * adv;
        let surr2 = ratio.clamp(1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv;
        let policy = -surr1.min(surr2);
        let v_err = cache.value[row] - targets.returns[row];
        let value = v_err * v_err;

        stats.policy += scale * policy;
        stats.value += scale * value;
        stats.entropy += scale * entropy;
        stats.approx_kl += scale * ((ratio - 1.0) - log_ratio);
        if (ratio - 1.0).abs() > cfg.clip_eps {
            stats.clip_frac += scale;
        }

        // d(policy loss)/d(logp): the clipped branch is flat.
        let dlogp = if surr1 <= surr2 { -ratio * adv * scale } else { 0.0 };
        let dent = -cfg.entropy_coef * scale;
        d_value[row] = cfg.value_coef * 2.0 * v_err * scale;
        let d = &mut d_out[row * a..(row + 1) * a];
        if net.arch.discrete {
            let act = targets.actions[row];
            for k in 0..a {
                let p = lsm[k].exp();
                let dlogp_k = if k == act { 1.0 - p } else { -p };
                let dent_k = -p * (lsm[k] + entropy);
                d[k] = dlogp * dlogp_k + dent * dent_k;
            }
        } else {
            let u = &targets.raw_actions[row * a..(row + 1) * a];
            for k in 0..a {
                let var = (2.0 * log_std[k]).exp();
                let diff = u[k] - out[k];
                d[k] = dlogp * diff / var;
                d_log_std[k] += dlogp * (diff * diff / var - 1.0) + dent;
            }
        }
    }
    stats.total = stats.policy + cfg.value_coef * stats.value - cfg.entropy_coef * stats.entropy;

    if let Some(g) = grad {
        net.backward(params, cache, &d_out, &d_value, g);
        if let Some(off) = net.log_std_offset() {
            for k in 0..a {
                let raw = params[off + k];
                if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw) {
                    g[off + k] += d_log_std[k];
                }
            }
        }
    }
    stats
}

/// Generalised advantage estimates for one environment's time series.
/// `dones[t]` marks that step `t` ended its episode; `last_value` bootstraps
/// the step after the series.
pub fn gae(rewards: &[f64], values: &[f64], dones: &[bool], last_value: f64, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { last_value };
        let nonterminal = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * nonterminal - values[t];
        running = delta + gamma * lambda * nonterminal * running;
        adv[t] = running;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

/// Standardises in place; leaves constant inputs centred at zero.
pub fn normalize(xs: &mut [f64]) {
    if xs.is_empty() {
        return;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for x in xs.iter_mut() {
        *x = (*x - mean) / (std + 1e-8);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(n: usize, eps: f64) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0, beta1: 0.9, beta2: 0.999, eps }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / bc1;
            let vh = self.v[i] / bc2;
            params[i] -= lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Rescales `grad` to at most `max_norm`; returns the pre-clip norm.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

pub(crate) fn check_finite(update: usize, stats: &LossStats, grad: &[f64]) -> Result<()> {
    if !stats.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteLoss { update, detail: format!("{stats:?}") });
    }
    Ok(())
}
