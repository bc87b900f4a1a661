//! Specification-aware symbol mapping.
//!
//! Every symbol occurrence is decided by the evaluator of its base symbol,
//! parameterised by the occurrence's [`MappingSpec`]. A [`Grounding`] binds a
//! symbol table to evaluators and computes the satisfied occurrences for a
//! state and a [`SpecSet`].

mod evaluator;
mod spec;

pub use evaluator::{detectable_center, evaluate, Evaluator};
pub use spec::{MappingSpec, SpecRanges, SpecRecord, SpecSet};

use crate::env::{EnvKind, EnvState, Layout};
use crate::error::{Error, Result};
use crate::ltl::{SymbolId, SymbolTable, TruthAssignment};
use crate::rng::Rng;

/// Evaluators for every occurrence of a symbol table.
#[derive(Debug, Clone)]
pub struct Grounding {
    evaluators: Vec<Evaluator>,
    ranges: SpecRanges,
    kind: EnvKind,
}

impl Grounding {
    /// Binds each occurrence to the anchor whose name equals its base symbol.
    pub fn new(symbols: &SymbolTable, layout: &Layout, kind: EnvKind) -> Result<Grounding> {
        let evaluators = symbols
            .ids()
            .map(|id| {
                let base = symbols.base(id);
                Evaluator::for_symbol(base, layout, kind)
                    .ok_or_else(|| Error::Config(format!("no anchor named `{base}` in the {kind:?} layout")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Grounding { evaluators, ranges: SpecRanges::from_layout(layout), kind })
    }

    pub fn evaluator(&self, id: SymbolId) -> &Evaluator {
        &self.evaluators[id.index()]
    }

    pub fn ranges(&self) -> &SpecRanges {
        &self.ranges
    }

    pub fn kind(&self) -> EnvKind {
        self.kind
    }

    /// Length of the normalized specification vector fed to the agent.
    pub fn spec_dim(&self) -> usize {
        SpecRanges::feature_dim(self.kind)
    }

    /// Uniform, independent draws for each listed occurrence, in id order.
    pub fn sample_spec_set(&self, occurrences: &[SymbolId], rng: &mut Rng) -> SpecSet {
        let mut ids = occurrences.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let mut set = SpecSet::new();
        for id in ids {
            let spec = self.ranges.sample(self.evaluator(id), rng);
            set.insert(id, spec);
        }
        set
    }

    /// Occurrences of `spec_set` whose evaluator accepts `state`.
    pub fn map_symbols(&self, spec_set: &SpecSet, state: &EnvState) -> TruthAssignment {
        spec_set
            .iter()
            .filter(|(id, spec)| evaluate(self.evaluator(*id), spec, state))
            .map(|(id, _)| id)
            .collect()
    }
}
