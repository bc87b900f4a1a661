//! Geometric waypoint controller that walks to each pending region in turn.
//! Used as a reference policy in tests and evaluation sanity checks.

use crate::env::{Action, EnvState, NavAction};
use crate::error::Result;
use crate::mapping::{detectable_center, Evaluator, MappingSpec};
use crate::mdp::{Policy, ProductState, TaskableMdp};
use crate::rng::Rng;

#[derive(Debug, Clone, Default)]
pub struct WaypointPolicy;

fn angle_diff(target_deg: f64, heading_deg: f64) -> f64 {
    (target_deg - heading_deg + 180.0).rem_euclid(360.0) - 180.0
}

impl Policy for WaypointPolicy {
    fn act(&mut self, mdp: &TaskableMdp, ps: &ProductState, _rng: &mut Rng) -> Result<Action> {
        let Some(next) = ps.phi.next_pending() else {
            return Ok(match ps.env {
                EnvState::Nav { .. } => Action::Nav(NavAction::TurnLeft),
                EnvState::Inspect { .. } => Action::Inspect([0.0; 3]),
            });
        };
        let evaluator = mdp.grounding.evaluator(next);
        let spec = ps.spec_set.get(next).copied().unwrap_or(MappingSpec::None);
        let goal = detectable_center(evaluator, &spec)?;
        match ps.env {
            EnvState::Nav { x, y, heading } => {
                let stop = match (evaluator, spec) {
                    (Evaluator::NavLetter { .. }, MappingSpec::Nav2D { r_d, .. }) => 0.5 * r_d,
                    (Evaluator::NavBox { reach_radius, .. }, _) => 0.6 * reach_radius,
                    _ => 0.3,
                };
                let (dx, dy) = (goal[0] - x, goal[1] - y);
                let target = if dx.hypot(dy) > stop {
                    dy.atan2(dx).to_degrees()
                } else {
                    // in the region: face the anchor
                    let a = evaluator.anchor();
                    (a[1] - y).atan2(a[0] - x).to_degrees()
                };
                let err = angle_diff(target, heading);
                let action = if err > 15.0 {
                    NavAction::TurnLeft
                } else if err < -15.0 {
                    NavAction::TurnRight
                } else if dx.hypot(dy) > stop {
                    NavAction::MoveForward
                } else {
                    // aligned within a quantization step but not yet counted
                    NavAction::TurnLeft
                };
                Ok(Action::Nav(action))
            }
            EnvState::Inspect { pos } => Ok(Action::Inspect(std::array::from_fn(|k| goal[k] - pos[k]))),
        }
    }
}
