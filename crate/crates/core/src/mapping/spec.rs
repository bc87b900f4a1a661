use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::evaluator::Evaluator;
use crate::env::{ConeSpecRanges, EnvKind, Layout, NavSpecRanges};
use crate::error::{Error, Result};
use crate::ltl::{SymbolId, SymbolTable};
use crate::rng::Rng;

/// Runtime parameters of one symbol occurrence's detectable region.
/// Lengths are in meters, angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum MappingSpec {
    #[serde(rename = "nav2d")]
    Nav2D { d: f64, theta: f64, r_d: f64 },
    #[serde(rename = "cone3d")]
    Cone3D { d: f64, r_c: f64, theta: f64, r_d: f64 },
    /// Symbols whose region is not adjustable.
    #[serde(rename = "none")]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecRanges {
    pub nav: NavSpecRanges,
    pub cone: ConeSpecRanges,
}

fn normalize(x: f64, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        2.0 * (x - lo) / (hi - lo) - 1.0
    } else {
        0.0
    }
}

impl SpecRanges {
    pub fn from_layout(layout: &Layout) -> SpecRanges {
        SpecRanges { nav: layout.nav.spec_ranges, cone: layout.inspect.spec_ranges }
    }

    pub fn feature_dim(kind: EnvKind) -> usize {
        match kind {
            EnvKind::Nav => 4,
            EnvKind::Inspect => 5,
        }
    }

    pub fn sample(&self, evaluator: &Evaluator, rng: &mut Rng) -> MappingSpec {
        let mut draw = |[lo, hi]: [f64; 2]| if hi > lo { rng.random_range(lo..=hi) } else { lo };
        match evaluator {
            Evaluator::NavLetter { .. } => MappingSpec::Nav2D {
                d: draw(self.nav.d),
                theta: draw(self.nav.theta_deg),
                r_d: self.nav.r_d,
            },
            Evaluator::Cone { .. } => MappingSpec::Cone3D {
                d: draw(self.cone.d),
                r_c: draw(self.cone.r_c),
                theta: draw(self.cone.theta_deg),
                r_d: self.cone.r_d,
            },
            Evaluator::NavBox { .. } => MappingSpec::None,
        }
    }

    /// Appends the normalized encoding of `spec`: lengths mapped to `[-1, 1]`
    /// over their sampling range, angles as `(cos, sin)`. `None` encodes as
    /// zeros.
    pub fn encode_into(&self, spec: &MappingSpec, kind: EnvKind, out: &mut Vec<f64>) {
        let start = out.len();
        match *spec {
            MappingSpec::Nav2D { d, theta, r_d } => {
                let t = theta.to_radians();
                out.extend_from_slice(&[
                    normalize(d, self.nav.d),
                    t.cos(),
                    t.sin(),
                    normalize(r_d, [self.nav.r_d, self.nav.r_d]),
                ]);
            }
            MappingSpec::Cone3D { d, r_c, theta, r_d } => {
                let t = theta.to_radians();
                out.extend_from_slice(&[
                    normalize(d, self.cone.d),
                    normalize(r_c, self.cone.r_c),
                    t.cos(),
                    t.sin(),
                    normalize(r_d, [self.cone.r_d, self.cone.r_d]),
                ]);
            }
            MappingSpec::None => {}
        }
        out.resize(start + Self::feature_dim(kind), 0.0);
    }
}

/// Mapping specifications of the occurrences in one episode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpecSet {
    specs: BTreeMap<SymbolId, MappingSpec>,
}

/// Flat serialized form of one entry of a [`SpecSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecRecord {
    pub occurrence: String,
    #[serde(flatten)]
    pub spec: MappingSpec,
}

impl SpecSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: SymbolId, spec: MappingSpec) {
        self.specs.insert(id, spec);
    }

    pub fn get(&self, id: SymbolId) -> Option<&MappingSpec> {
        self.specs.get(&id)
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SymbolId, &MappingSpec)> {
        self.specs.iter().map(|(k, v)| (*k, v))
    }

    /// First occurrence of `required` that has no specification.
    pub fn missing(&self, required: &[SymbolId]) -> Option<SymbolId> {
        required.iter().copied().find(|id| !self.specs.contains_key(id))
    }

    pub fn to_records(&self, symbols: &SymbolTable) -> Vec<SpecRecord> {
        self.iter()
            .map(|(id, spec)| SpecRecord { occurrence: symbols.name(id).to_string(), spec: *spec })
            .collect()
    }

    pub fn from_records(records: &[SpecRecord], symbols: &SymbolTable) -> Result<SpecSet> {
        let mut set = SpecSet::new();
        for r in records {
            let id = symbols
                .lookup(&r.occurrence)
                .ok_or_else(|| Error::InvalidInput(format!("unknown occurrence `{}`", r.occurrence)))?;
            set.insert(id, r.spec);
        }
        Ok(set)
    }
}
