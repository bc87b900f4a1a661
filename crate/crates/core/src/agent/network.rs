use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::linalg::{affine, affine_grad_input, affine_grad_params};
use crate::error::{Error, Result};
use crate::rng::Rng;

pub const ENCODER_LAYERS: usize = 3;
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditioningMode {
    /// Spec features scale and shift encoder activations.
    Film,
    /// Spec features are concatenated to the policy input.
    NaiveConcat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditioningConfig {
    pub mode: ConditioningMode,
    /// 1-based encoder layers that are modulated in film mode.
    #[serde(default)]
    pub layers: Vec<usize>,
}

impl ConditioningConfig {
    pub fn film(layers: &[usize]) -> Self {
        Self { mode: ConditioningMode::Film, layers: layers.to_vec() }
    }

    pub fn naive() -> Self {
        Self { mode: ConditioningMode::NaiveConcat, layers: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.iter().any(|l| !(1..=ENCODER_LAYERS).contains(l)) {
            return Err(Error::Config(format!("modulated layers {:?} outside 1..=3", self.layers)));
        }
        let mut sorted = self.layers.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.layers.len() {
            return Err(Error::Config(format!("duplicate modulated layers in {:?}", self.layers)));
        }
        match self.mode {
            ConditioningMode::Film if self.layers.is_empty() => {
                Err(Error::Config("film conditioning needs at least one modulated layer".into()))
            }
            ConditioningMode::NaiveConcat if !self.layers.is_empty() => {
                Err(Error::Config("naive-concat conditioning takes no modulated layers".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Shape of the actor-critic; stored in checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub obs_dim: usize,
    pub spec_dim: usize,
    pub n_tasks: usize,
    pub action_dim: usize,
    pub discrete: bool,
    pub hidden: usize,
    pub task_dim: usize,
    pub head_hidden: usize,
    /// Width of the spec encoding concatenated in naive mode.
    pub naive_dim: usize,
    pub conditioning: ConditioningConfig,
}

impl Architecture {
    pub fn new(obs_dim: usize, spec_dim: usize, n_tasks: usize, action_dim: usize, discrete: bool, conditioning: ConditioningConfig) -> Self {
        Self { obs_dim, spec_dim, n_tasks, action_dim, discrete, hidden: 64, task_dim: 32, head_hidden: 64, naive_dim: 32, conditioning }
    }

    fn is_film(&self) -> bool {
        self.conditioning.mode == ConditioningMode::Film
    }

    /// Width of the concatenated state and task embedding.
    pub fn embedding_dim(&self) -> usize {
        self.hidden + self.task_dim
    }

    fn policy_input_dim(&self) -> usize {
        self.embedding_dim() + if self.is_film() { 0 } else { self.naive_dim }
    }

    fn spec_out_dim(&self) -> usize {
        if self.is_film() {
            2 * self.hidden * self.conditioning.layers.len()
        } else {
            self.naive_dim
        }
    }
}

/// A named contiguous range of the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Copy)]
struct Linear {
    w: usize,
    b: usize,
    inp: usize,
    out: usize,
}

impl Linear {
    fn w<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.w..self.w + self.inp * self.out]
    }

    fn b<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.b..self.b + self.out]
    }

    fn forward(&self, p: &[f64], x: &[f64], batch: usize, y: &mut Vec<f64>) {
        y.resize(batch * self.out, 0.0);
        affine(x, self.w(p), self.b(p), batch, self.inp, self.out, y);
    }

    /// Accumulates parameter gradients; writes the input gradient if asked.
    fn backward(&self, p: &[f64], x: &[f64], dy: &[f64], batch: usize, g: &mut [f64], dx: Option<&mut Vec<f64>>) {
        debug_assert!(self.w + self.inp * self.out == self.b);
        let (gw, gb) = g[self.w..self.b + self.out].split_at_mut(self.inp * self.out);
        affine_grad_params(x, dy, batch, self.inp, self.out, gw, gb);
        if let Some(dx) = dx {
            dx.resize(batch * self.inp, 0.0);
            affine_grad_input(dy, self.w(p), batch, self.inp, self.out, dx);
        }
    }
}

/// Parameter layout plus forward and reverse passes of the actor-critic.
///
/// Encoder: three ReLU layers; in film mode layer `l` in the configured set
/// outputs `alpha * relu(z) + beta`, with `(alpha, beta)` produced by one
/// affine map of the spec features. The final state embedding is
/// concatenated with the task embedding row of the current formula and fed
/// to tanh actor and critic heads.
#[derive(Debug, Clone)]
pub struct Network {
    pub arch: Architecture,
    blocks: Vec<Block>,
    n_params: usize,
    enc: [Linear; ENCODER_LAYERS],
    spec: Linear,
    task_table: usize,
    actor: [Linear; 3],
    critic: [Linear; 3],
    log_std: Option<usize>,
    /// Position of each encoder layer among the modulated ones.
    film_slot: [Option<usize>; ENCODER_LAYERS],
}

#[derive(Debug, Clone, Default)]
struct EncCache {
    z: Vec<f64>,
    r: Vec<f64>,
    h: Vec<f64>,
}

/// Inputs and intermediate activations of one batch.
#[derive(Debug, Clone, Default)]
pub struct Cache {
    pub batch: usize,
    pub obs: Vec<f64>,
    pub spec: Vec<f64>,
    pub task: Vec<usize>,
    enc: [EncCache; ENCODER_LAYERS],
    g: Vec<f64>,
    u: Vec<f64>,
    act: [Vec<f64>; 2],
    crit: [Vec<f64>; 2],
    /// Logits (discrete) or action means (continuous), `batch × action_dim`.
    pub out: Vec<f64>,
    pub value: Vec<f64>,
}

impl Cache {
    pub fn clear(&mut self) {
        self.batch = 0;
        self.obs.clear();
        self.spec.clear();
        self.task.clear();
    }

    pub fn push(&mut self, obs: &[f64], spec: &[f64], task: usize) {
        self.obs.extend_from_slice(obs);
        self.spec.extend_from_slice(spec);
        self.task.push(task);
        self.batch += 1;
    }

    /// Final state embedding followed by the task embedding of `row`.
    pub fn embedding_row(&self, arch: &Architecture, row: usize) -> &[f64] {
        let width = arch.policy_input_dim();
        &self.u[row * width..row * width + arch.embedding_dim()]
    }
}

impl Network {
    pub fn new(arch: Architecture) -> Result<Network> {
        arch.conditioning.validate()?;
        let mut blocks = Vec::new();
        let mut next = 0;
        let mut alloc = |name: String, len: usize| {
            blocks.push(Block { name, offset: next, len });
            next += len;
            next - len
        };
        let mut linear = |name: &str, inp: usize, out: usize| {
            let w = alloc(format!("{name}.w"), inp * out);
            let b = alloc(format!("{name}.b"), out);
            Linear { w, b, inp, out }
        };
        let h = arch.hidden;
        let enc = [linear("encoder1", arch.obs_dim, h), linear("encoder2", h, h), linear("encoder3", h, h)];
        let spec = linear("spec_encoder", arch.spec_dim, arch.spec_out_dim());
        let pin = arch.policy_input_dim();
        let hh = arch.head_hidden;
        let actor = [linear("actor1", pin, hh), linear("actor2", hh, hh), linear("actor3", hh, arch.action_dim)];
        let critic = [linear("critic1", pin, hh), linear("critic2", hh, hh), linear("critic3", hh, 1)];
        let task_table = alloc("task_embedding".into(), arch.n_tasks * arch.task_dim);
        let log_std = (!arch.discrete).then(|| alloc("log_std".into(), arch.action_dim));
        let mut film_slot = [None; ENCODER_LAYERS];
        if arch.is_film() {
            let mut layers = arch.conditioning.layers.clone();
            layers.sort_unstable();
            for (m, l) in layers.into_iter().enumerate() {
                film_slot[l - 1] = Some(m);
            }
        }
        Ok(Network { arch, blocks, n_params: next, enc, spec, task_table, actor, critic, log_std, film_slot })
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn log_std_offset(&self) -> Option<usize> {
        self.log_std
    }

    /// Layer-scaled Gaussian weights, zero biases, identity modulation.
    pub fn init(&self, rng: &mut Rng) -> Vec<f64> {
        let mut p = vec![0.0; self.n_params];
        let mut fill = |lin: &Linear, gain: f64, rng: &mut Rng| {
            let std = gain / (lin.inp.max(1) as f64).sqrt();
            let normal = Normal::new(0.0, std).expect("finite std");
            for w in &mut p[lin.w..lin.w + lin.inp * lin.out] {
                *w = normal.sample(rng);
            }
        };
        for lin in &self.enc {
            fill(lin, 2f64.sqrt(), rng);
        }
        for (k, lin) in self.actor.iter().enumerate() {
            fill(lin, if k == 2 { 0.01 } else { 1.0 }, rng);
        }
        for (k, lin) in self.critic.iter().enumerate() {
            fill(lin, if k == 2 { 0.1 } else { 1.0 }, rng);
        }
        let spec = self.spec;
        let normal = Normal::new(0.0, 0.01).expect("finite std");
        for w in &mut p[spec.w..spec.w + spec.inp * spec.out] {
            *w = normal.sample(rng);
        }
        if self.arch.is_film() {
            let h = self.arch.hidden;
            for m in 0..self.arch.conditioning.layers.len() {
                p[spec.b + 2 * h * m..spec.b + 2 * h * m + h].fill(1.0);
            }
        }
        let normal = Normal::new(0.0, 0.5).expect("finite std");
        for w in &mut p[self.task_table..self.task_table + self.arch.n_tasks * self.arch.task_dim] {
            *w = normal.sample(rng);
        }
        p
    }

    /// Clamped log standard deviation of the continuous policy.
    pub fn log_std<'a>(&self, p: &'a [f64]) -> Option<impl Iterator<Item = f64> + 'a> {
        let off = self.log_std?;
        Some(p[off..off + self.arch.action_dim].iter().map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX)))
    }

    pub fn forward(&self, p: &[f64], c: &mut Cache) {
        self.forward_impl(p, c, true);
    }

    /// Same network with every modulation skipped; reference for the
    /// identity property.
    pub fn forward_unmodulated(&self, p: &[f64], c: &mut Cache) {
        self.forward_impl(p, c, false);
    }

    fn forward_impl(&self, p: &[f64], c: &mut Cache, modulate: bool) {
        let a = &self.arch;
        let b = c.batch;
        assert_eq!(c.obs.len(), b * a.obs_dim);
        assert_eq!(c.spec.len(), b * a.spec_dim);
        assert!(c.task.iter().all(|&t| t < a.n_tasks), "task index outside the embedding table");
        let h = a.hidden;
        let gdim = self.spec.out;
        self.spec.forward(p, &c.spec, b, &mut c.g);

        for l in 0..ENCODER_LAYERS {
            let (prev, cur) = c.enc.split_at_mut(l);
            let cur = &mut cur[0];
            let x: &[f64] = if l == 0 { &c.obs } else { &prev[l - 1].h };
            self.enc[l].forward(p, x, b, &mut cur.z);
            cur.r.clear();
            cur.r.extend(cur.z.iter().map(|v| v.max(0.0)));
            cur.h.clone_from(&cur.r);
            if let (Some(m), true) = (self.film_slot[l], modulate) {
                for row in 0..b {
                    let g = &c.g[row * gdim + 2 * h * m..row * gdim + 2 * h * (m + 1)];
                    let (alpha, beta) = g.split_at(h);
                    for (j, hv) in cur.h[row * h..(row + 1) * h].iter_mut().enumerate() {
                        *hv = alpha[j] * *hv + beta[j];
                    }
                }
            }
        }

        let pin = a.policy_input_dim();
        let td = a.task_dim;
        c.u.resize(b * pin, 0.0);
        let last = &c.enc[ENCODER_LAYERS - 1].h;
        for row in 0..b {
            let u = &mut c.u[row * pin..(row + 1) * pin];
            u[..h].copy_from_slice(&last[row * h..(row + 1) * h]);
            let t = self.task_table + c.task[row] * td;
            u[h..h + td].copy_from_slice(&p[t..t + td]);
            if !a.is_film() {
                u[h + td..].copy_from_slice(&c.g[row * gdim..(row + 1) * gdim]);
            }
        }

        for (lins, hidden, out) in [(&self.actor, &mut c.act, &mut c.out), (&self.critic, &mut c.crit, &mut c.value)] {
            let [h0, h1] = hidden;
            lins[0].forward(p, &c.u, b, h0);
            h0.iter_mut().for_each(|v| *v = v.tanh());
            lins[1].forward(p, h0, b, h1);
            h1.iter_mut().for_each(|v| *v = v.tanh());
            lins[2].forward(p, h1, b, out);
        }
    }

    /// Reverse pass of the last [`forward`](Self::forward) on `c`.
    /// Accumulates into `g` the gradient of a loss whose partial derivatives
    /// with respect to the head outputs are `d_out` and `d_value`.
    pub fn backward(&self, p: &[f64], c: &Cache, d_out: &[f64], d_value: &[f64], g: &mut [f64]) {
        let a = &self.arch;
        let b = c.batch;
        let h = a.hidden;
        let td = a.task_dim;
        let pin = a.policy_input_dim();
        assert_eq!(g.len(), self.n_params);
        assert_eq!(d_out.len(), b * a.action_dim);
        assert_eq!(d_value.len(), b);

        let mut du = vec![0.0; b * pin];
        let mut d1 = Vec::new();
        let mut d0 = Vec::new();
        let mut dx = Vec::new();
        for (lins, hidden, d_top) in [(&self.actor, &c.act, d_out), (&self.critic, &c.crit, d_value)] {
            let [h0, h1] = hidden;
            lins[2].backward(p, h1, d_top, b, g, Some(&mut d1));
            d1.iter_mut().zip(h1).for_each(|(d, y)| *d *= 1.0 - y * y);
            lins[1].backward(p, h0, &d1, b, g, Some(&mut d0));
            d0.iter_mut().zip(h0).for_each(|(d, y)| *d *= 1.0 - y * y);
            lins[0].backward(p, &c.u, &d0, b, g, Some(&mut dx));
            du.iter_mut().zip(&dx).for_each(|(s, d)| *s += d);
        }

        let gdim = self.spec.out;
        let mut dg = vec![0.0; b * gdim];
        let mut dh = vec![0.0; b * h];
        for row in 0..b {
            let u = &du[row * pin..(row + 1) * pin];
            dh[row * h..(row + 1) * h].copy_from_slice(&u[..h]);
            let t = self.task_table + c.task[row] * td;
            g[t..t + td].iter_mut().zip(&u[h..h + td]).for_each(|(gv, d)| *gv += d);
            if !a.is_film() {
                dg[row * gdim..(row + 1) * gdim].copy_from_slice(&u[h + td..]);
            }
        }

        let mut dz = vec![0.0; b * h];
        for l in (0..ENCODER_LAYERS).rev() {
            let cur = &c.enc[l];
            match self.film_slot[l] {
                Some(m) => {
                    for row in 0..b {
                        let gr = &c.g[row * gdim + 2 * h * m..row * gdim + 2 * h * (m + 1)];
                        let dgr = &mut dg[row * gdim + 2 * h * m..row * gdim + 2 * h * (m + 1)];
                        for j in 0..h {
                            let k = row * h + j;
                            dgr[j] = dh[k] * cur.r[k];
                            dgr[h + j] = dh[k];
                            dz[k] = if cur.z[k] > 0.0 { dh[k] * gr[j] } else { 0.0 };
                        }
                    }
                }
                None => {
                    for k in 0..b * h {
                        dz[k] = if cur.z[k] > 0.0 { dh[k] } else { 0.0 };
                    }
                }
            }
            if l == 0 {
                self.enc[0].backward(p, &c.obs, &dz, b, g, None);
            } else {
                self.enc[l].backward(p, &c.enc[l - 1].h, &dz, b, g, Some(&mut dh));
            }
        }
        self.spec.backward(p, &c.spec, &dg, b, g, None);
    }
}
