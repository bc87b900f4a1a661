use super::spec::MappingSpec;
use crate::env::{EnvKind, EnvState, Layout};
use crate::error::{Error, Result};

/// Anchor geometry and rule deciding one base symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluator {
    /// Satisfied inside the detectable disk while facing the letter.
    NavLetter { pos: [f64; 2], normal: [f64; 2], view_tolerance_deg: f64 },
    /// Satisfied within `reach_radius` of the box.
    NavBox { pos: [f64; 2], reach_radius: f64 },
    /// Satisfied inside the detectable sphere placed on the object's cone.
    /// `(u, v, axis)` is a right-handed orthonormal frame.
    Cone { center: [f64; 3], axis: [f64; 3], u: [f64; 3], v: [f64; 3] },
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

impl Evaluator {
    pub fn for_symbol(base: &str, layout: &Layout, kind: EnvKind) -> Option<Evaluator> {
        match kind {
            EnvKind::Nav => {
                let nav = &layout.nav;
                if let Some(b) = nav.boxes.iter().find(|b| b.name == base) {
                    return Some(Evaluator::NavBox { pos: b.pos, reach_radius: nav.reach_radius });
                }
                nav.letters.iter().find(|l| l.name == base).map(|l| Evaluator::NavLetter {
                    pos: l.pos,
                    normal: l.normal,
                    view_tolerance_deg: nav.view_tolerance_deg,
                })
            }
            EnvKind::Inspect => layout.inspect.objects.iter().find(|o| o.name == base).map(|o| Evaluator::Cone {
                center: o.center,
                axis: o.axis,
                u: o.u,
                v: cross(o.axis, o.u),
            }),
        }
    }

    /// Anchor the symbol refers to (letter, box or object center).
    pub fn anchor(&self) -> [f64; 3] {
        match *self {
            Evaluator::NavLetter { pos, .. } | Evaluator::NavBox { pos, .. } => [pos[0], pos[1], 0.0],
            Evaluator::Cone { center, .. } => center,
        }
    }
}

/// Center of the detectable region. 2D centers have `z = 0`.
pub fn detectable_center(evaluator: &Evaluator, spec: &MappingSpec) -> Result<[f64; 3]> {
    match (evaluator, spec) {
        (Evaluator::NavLetter { pos, normal, .. }, MappingSpec::Nav2D { d, theta, .. }) => {
            let (s, c) = theta.to_radians().sin_cos();
            let dir = [c * normal[0] - s * normal[1], s * normal[0] + c * normal[1]];
            Ok([pos[0] + d * dir[0], pos[1] + d * dir[1], 0.0])
        }
        (Evaluator::NavBox { pos, .. }, MappingSpec::None) => Ok([pos[0], pos[1], 0.0]),
        (Evaluator::Cone { center, axis, u, v }, MappingSpec::Cone3D { d, r_c, theta, .. }) => {
            let (s, c) = theta.to_radians().sin_cos();
            Ok(std::array::from_fn(|k| center[k] + d * axis[k] + r_c * (c * u[k] + s * v[k])))
        }
        (e, s) => Err(Error::SpecMismatch(format!("{s:?} for {e:?}"))),
    }
}

/// Whether `state` satisfies the symbol under `spec`. Regions are closed
/// balls; a mismatched spec never satisfies.
pub fn evaluate(evaluator: &Evaluator, spec: &MappingSpec, state: &EnvState) -> bool {
    match (evaluator, spec, state) {
        (Evaluator::NavLetter { pos, view_tolerance_deg, .. }, MappingSpec::Nav2D { r_d, .. }, EnvState::Nav { x, y, heading }) => {
            let Ok(c) = detectable_center(evaluator, spec) else { return false };
            let (dx, dy) = (x - c[0], y - c[1]);
            if dx * dx + dy * dy > r_d * r_d {
                return false;
            }
            let (hs, hc) = heading.to_radians().sin_cos();
            let (wx, wy) = (pos[0] - x, pos[1] - y);
            if wx == 0.0 && wy == 0.0 {
                return false;
            }
            let angle = (hc * wy - hs * wx).abs().atan2(hc * wx + hs * wy).to_degrees();
            angle <= *view_tolerance_deg
        }
        (Evaluator::NavBox { pos, reach_radius }, MappingSpec::None, EnvState::Nav { x, y, .. }) => {
            let (dx, dy) = (x - pos[0], y - pos[1]);
            dx * dx + dy * dy <= reach_radius * reach_radius
        }
        (Evaluator::Cone { .. }, MappingSpec::Cone3D { r_d, .. }, EnvState::Inspect { pos }) => {
            let Ok(c) = detectable_center(evaluator, spec) else { return false };
            let d2: f64 = (0..3).map(|k| (pos[k] - c[k]).powi(2)).sum();
            d2 <= r_d * r_d
        }
        _ => false,
    }
}
