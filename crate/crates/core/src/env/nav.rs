use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::layout::NavLayout;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NavAction {
    TurnLeft,
    TurnRight,
    MoveForward,
}

impl NavAction {
    pub const ALL: [NavAction; 3] = [NavAction::TurnLeft, NavAction::TurnRight, NavAction::MoveForward];

    pub fn from_index(i: usize) -> NavAction {
        Self::ALL[i]
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// 2D arena with a turning, forward-moving agent.
#[derive(Debug, Clone)]
pub struct NavGrid {
    layout: NavLayout,
}

impl NavGrid {
    pub fn new(layout: NavLayout) -> Self {
        Self { layout }
    }

    pub fn layout(&self) -> &NavLayout {
        &self.layout
    }

    pub fn reset(&self, rng: &mut Rng) -> super::EnvState {
        let l = &self.layout;
        let x = rng.random_range(l.start_x[0]..=l.start_x[1]);
        let y = rng.random_range(l.start_y[0]..=l.start_y[1]);
        let heading = rng.random_range(0.0..360.0);
        super::EnvState::Nav { x, y, heading }
    }

    pub fn step(&self, (x, y, heading): (f64, f64, f64), action: NavAction) -> (f64, f64, f64) {
        let l = &self.layout;
        match action {
            NavAction::TurnLeft => (x, y, wrap_degrees(heading + l.turn_degrees)),
            NavAction::TurnRight => (x, y, wrap_degrees(heading - l.turn_degrees)),
            NavAction::MoveForward => {
                let h = heading.to_radians();
                let (lo, hi) = (l.wall_margin, l.arena - l.wall_margin);
                let nx = (x + l.step_length * h.cos()).clamp(lo, hi);
                let ny = (y + l.step_length * h.sin()).clamp(lo, hi);
                (nx, ny, heading)
            }
        }
    }

    /// Anchor positions in observation order: boxes, then letters.
    pub fn anchors(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.layout
            .boxes
            .iter()
            .map(|b| b.pos)
            .chain(self.layout.letters.iter().map(|l| l.pos))
    }

    pub fn obs_dim(&self) -> usize {
        4 + 2 * (self.layout.boxes.len() + self.layout.letters.len())
    }

    /// `[x/A, y/A, cos h, sin h]` followed by `(anchor - agent)/A` for every
    /// anchor, where `A` is the arena side.
    pub fn observe_into(&self, (x, y, heading): (f64, f64, f64), out: &mut Vec<f64>) {
        let a = self.layout.arena;
        let h = heading.to_radians();
        out.extend_from_slice(&[x / a, y / a, h.cos(), h.sin()]);
        for p in self.anchors() {
            out.push((p[0] - x) / a);
            out.push((p[1] - y) / a);
        }
    }
}

pub(crate) fn wrap_degrees(d: f64) -> f64 {
    let w = d.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}
