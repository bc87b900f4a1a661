use rand::Rng as _;

use super::layout::InspectLayout;
use crate::rng::Rng;

/// 3D point agent standing in for an arm's end effector.
#[derive(Debug, Clone)]
pub struct Inspect3D {
    layout: InspectLayout,
}

impl Inspect3D {
    pub fn new(layout: InspectLayout) -> Self {
        Self { layout }
    }

    pub fn layout(&self) -> &InspectLayout {
        &self.layout
    }

    fn clamp(&self, mut p: [f64; 3]) -> [f64; 3] {
        for (k, v) in p.iter_mut().enumerate() {
            *v = v.clamp(self.layout.workspace_min[k], self.layout.workspace_max[k]);
        }
        p
    }

    pub fn reset(&self, rng: &mut Rng) -> super::EnvState {
        let j = self.layout.jitter;
        let mut pos = self.layout.home;
        for v in pos.iter_mut() {
            *v += rng.random_range(-j..=j);
        }
        super::EnvState::Inspect { pos: self.clamp(pos) }
    }

    pub fn step(&self, pos: [f64; 3], delta: [f64; 3]) -> [f64; 3] {
        let m = self.layout.max_step;
        let mut next = pos;
        for k in 0..3 {
            // NaN requests are treated as no motion
            let d = if delta[k].is_nan() { 0.0 } else { delta[k].clamp(-m, m) };
            next[k] += d;
        }
        self.clamp(next)
    }

    pub fn obs_dim(&self) -> usize {
        3 + 3 * self.layout.objects.len()
    }

    /// Normalized position followed by `(object - agent)` per object, both
    /// scaled by the workspace extent.
    pub fn observe_into(&self, pos: [f64; 3], out: &mut Vec<f64>) {
        let l = &self.layout;
        let ext: [f64; 3] = std::array::from_fn(|k| l.workspace_max[k] - l.workspace_min[k]);
        for k in 0..3 {
            out.push((pos[k] - l.workspace_min[k]) / ext[k]);
        }
        for o in &l.objects {
            for k in 0..3 {
                out.push((o.center[k] - pos[k]) / ext[k]);
            }
        }
    }
}
