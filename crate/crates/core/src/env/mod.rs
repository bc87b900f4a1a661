//! Deterministic kinematic simulators.
//!
//! Both simulators are stateless apart from their layout: `reset` draws from
//! a caller-owned RNG and `step` is a pure function of state and action.

mod inspect;
mod layout;
mod nav;

use serde::{Deserialize, Serialize};

pub use inspect::Inspect3D;
pub use layout::{ConeSpecRanges, InspectLayout, InspectObject, Layout, NavBox, NavLayout, NavLetter, NavSpecRanges};
pub use nav::{NavAction, NavGrid};

use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvKind {
    Nav,
    Inspect,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvState {
    /// Position in meters; heading in degrees, 0 = +x, counterclockwise.
    Nav { x: f64, y: f64, heading: f64 },
    Inspect { pos: [f64; 3] },
}

impl EnvState {
    /// Position with the unused coordinate set to zero for 2D states.
    pub fn position(&self) -> [f64; 3] {
        match *self {
            EnvState::Nav { x, y, .. } => [x, y, 0.0],
            EnvState::Inspect { pos } => pos,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    Nav(NavAction),
    /// Requested end-effector displacement; clipped per axis by the simulator.
    Inspect([f64; 3]),
}

#[derive(Debug, Clone)]
pub enum World {
    Nav(NavGrid),
    Inspect(Inspect3D),
}

impl World {
    pub fn new(kind: EnvKind, layout: &Layout) -> World {
        match kind {
            EnvKind::Nav => World::Nav(NavGrid::new(layout.nav.clone())),
            EnvKind::Inspect => World::Inspect(Inspect3D::new(layout.inspect.clone())),
        }
    }

    pub fn kind(&self) -> EnvKind {
        match self {
            World::Nav(_) => EnvKind::Nav,
            World::Inspect(_) => EnvKind::Inspect,
        }
    }

    pub fn reset(&self, rng: &mut Rng) -> EnvState {
        match self {
            World::Nav(w) => w.reset(rng),
            World::Inspect(w) => w.reset(rng),
        }
    }

    /// Panics if the action variant does not match the simulator.
    pub fn step(&self, state: &EnvState, action: &Action) -> EnvState {
        match (self, state, action) {
            (World::Nav(w), EnvState::Nav { x, y, heading }, Action::Nav(a)) => {
                let (x, y, heading) = w.step((*x, *y, *heading), *a);
                EnvState::Nav { x, y, heading }
            }
            (World::Inspect(w), EnvState::Inspect { pos }, Action::Inspect(d)) => {
                EnvState::Inspect { pos: w.step(*pos, *d) }
            }
            _ => panic!("state/action variant does not match the simulator"),
        }
    }

    pub fn observe(&self, state: &EnvState) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.obs_dim());
        self.observe_into(state, &mut out);
        out
    }

    pub fn observe_into(&self, state: &EnvState, out: &mut Vec<f64>) {
        match (self, state) {
            (World::Nav(w), EnvState::Nav { x, y, heading }) => w.observe_into((*x, *y, *heading), out),
            (World::Inspect(w), EnvState::Inspect { pos }) => w.observe_into(*pos, out),
            _ => panic!("state variant does not match the simulator"),
        }
    }

    pub fn obs_dim(&self) -> usize {
        match self {
            World::Nav(w) => w.obs_dim(),
            World::Inspect(w) => w.obs_dim(),
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            World::Nav(w) => w.layout().horizon,
            World::Inspect(w) => w.layout().horizon,
        }
    }

    /// Size of the policy output: number of discrete actions or the
    /// continuous action dimension.
    pub fn action_size(&self) -> usize {
        match self {
            World::Nav(_) => 3,
            World::Inspect(_) => 3,
        }
    }

    /// Per-axis displacement limit of continuous actions.
    pub fn max_step(&self) -> Option<f64> {
        match self {
            World::Nav(_) => None,
            World::Inspect(w) => Some(w.layout().max_step),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, World::Nav(_))
    }

    /// Whether `state` lies inside the arena or workspace.
    pub fn contains(&self, state: &EnvState) -> bool {
        match (self, state) {
            (World::Nav(w), EnvState::Nav { x, y, heading }) => {
                let l = w.layout();
                let (lo, hi) = (l.wall_margin, l.arena - l.wall_margin);
                (lo..=hi).contains(x) && (lo..=hi).contains(y) && (0.0..360.0).contains(heading)
            }
            (World::Inspect(w), EnvState::Inspect { pos }) => {
                let l = w.layout();
                (0..3).all(|k| (l.workspace_min[k]..=l.workspace_max[k]).contains(&pos[k]))
            }
            _ => false,
        }
    }
}
