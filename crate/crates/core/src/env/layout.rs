use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

/// Geometry and constants of both simulators, loadable from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layout {
    pub nav: NavLayout,
    pub inspect: InspectLayout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NavLayout {
    /// Side length of the square arena in meters.
    pub arena: f64,
    pub wall_margin: f64,
    pub step_length: f64,
    pub turn_degrees: f64,
    pub horizon: usize,
    pub start_x: [f64; 2],
    pub start_y: [f64; 2],
    pub reach_radius: f64,
    /// Maximum angle between heading and the direction to a letter.
    pub view_tolerance_deg: f64,
    pub boxes: Vec<NavBox>,
    pub letters: Vec<NavLetter>,
    pub spec_ranges: NavSpecRanges,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NavBox {
    pub name: String,
    pub pos: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NavLetter {
    pub name: String,
    pub pos: [f64; 2],
    /// Unit normal of the wall carrying the letter, pointing into the arena.
    pub normal: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NavSpecRanges {
    pub d: [f64; 2],
    pub theta_deg: [f64; 2],
    pub r_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InspectLayout {
    pub workspace_min: [f64; 3],
    pub workspace_max: [f64; 3],
    pub home: [f64; 3],
    pub jitter: f64,
    pub max_step: f64,
    pub horizon: usize,
    pub objects: Vec<InspectObject>,
    pub spec_ranges: ConeSpecRanges,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InspectObject {
    pub name: String,
    pub center: [f64; 3],
    /// Cone axis; the frame is `(u, axis × u, axis)`.
    pub axis: [f64; 3],
    pub u: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSpecRanges {
    pub d: [f64; 2],
    pub r_c: [f64; 2],
    pub theta_deg: [f64; 2],
    pub r_d: f64,
}

impl Default for Layout {
    fn default() -> Self {
        Layout {
            nav: NavLayout {
                arena: 10.0,
                wall_margin: 0.1,
                step_length: 0.5,
                turn_degrees: 30.0,
                horizon: 150,
                start_x: [4.5, 5.5],
                start_y: [0.5, 1.5],
                reach_radius: 0.8,
                view_tolerance_deg: 20.0,
                boxes: vec![
                    NavBox { name: "reach_bluebox".into(), pos: [2.5, 7.5] },
                    NavBox { name: "reach_redbox".into(), pos: [7.5, 7.5] },
                ],
                letters: vec![
                    NavLetter { name: "check_letter_left".into(), pos: [0.0, 5.0], normal: [1.0, 0.0] },
                    NavLetter { name: "check_letter_right".into(), pos: [10.0, 5.0], normal: [-1.0, 0.0] },
                ],
                spec_ranges: NavSpecRanges { d: [1.0, 4.0], theta_deg: [-60.0, 60.0], r_d: 1.0 },
            },
            inspect: InspectLayout {
                workspace_min: [0.0; 3],
                workspace_max: [1.0; 3],
                home: [0.5, 0.1, 0.5],
                jitter: 0.05,
                max_step: 0.05,
                horizon: 500,
                objects: vec![
                    InspectObject {
                        name: "read_meter".into(),
                        center: [0.2, 0.5, 0.6],
                        axis: [1.0, 0.0, 0.0],
                        u: [0.0, 1.0, 0.0],
                    },
                    InspectObject {
                        name: "check_rust_valve".into(),
                        center: [0.5, 0.8, 0.4],
                        axis: [0.0, -1.0, 0.0],
                        u: [1.0, 0.0, 0.0],
                    },
                    InspectObject {
                        name: "check_leak_pipe".into(),
                        center: [0.8, 0.4, 0.6],
                        axis: [-1.0, 0.0, 0.0],
                        u: [0.0, 0.0, 1.0],
                    },
                ],
                spec_ranges: ConeSpecRanges {
                    d: [0.2, 0.6],
                    r_c: [0.0, 0.3],
                    theta_deg: [-180.0, 180.0],
                    r_d: 0.15,
                },
            },
        }
    }
}

impl Layout {
    pub fn from_toml_str(text: &str) -> Result<Layout> {
        let layout: Layout = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        layout.validate()?;
        Ok(layout)
    }

    pub fn load(path: &Path) -> Result<Layout> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("layout serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let n = &self.nav;
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if n.arena <= 2.0 * n.wall_margin || n.step_length <= 0.0 || n.horizon == 0 {
            return bad("nav arena, margin, step length or horizon out of range");
        }
        if n.spec_ranges.d[0] > n.spec_ranges.d[1] || n.spec_ranges.theta_deg[0] > n.spec_ranges.theta_deg[1] {
            return bad("nav spec ranges must be ordered");
        }
        for l in &n.letters {
            let norm = (l.normal[0].powi(2) + l.normal[1].powi(2)).sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return bad("letter normals must be unit vectors");
            }
        }
        let i = &self.inspect;
        if (0..3).any(|k| i.workspace_min[k] >= i.workspace_max[k]) || i.max_step <= 0.0 || i.horizon == 0 {
            return bad("inspect workspace, max step or horizon out of range");
        }
        for o in &i.objects {
            let dot: f64 = (0..3).map(|k| o.axis[k] * o.u[k]).sum();
            let na: f64 = o.axis.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nu: f64 = o.u.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (na - 1.0).abs() > 1e-9 || (nu - 1.0).abs() > 1e-9 || dot.abs() > 1e-9 {
                return bad("object axis and u must be orthonormal");
            }
        }
        Ok(())
    }
}
