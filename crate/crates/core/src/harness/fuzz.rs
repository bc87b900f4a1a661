//! Randomised comparison of iterated progression against the trace oracle.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::ltl::{progress_verdict, trace_oracle, Formula, SymbolId, SymbolTable, TruthAssignment, Verdict};
use crate::par::{self, Execution};
use crate::rng::{stream, tag, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub count: usize,
    pub max_depth: usize,
    pub max_symbols: usize,
    pub max_trace: usize,
    pub seed: u64,
}

impl FuzzConfig {
    pub fn new(count: usize, seed: u64) -> Self {
        Self { count, max_depth: 4, max_symbols: 6, max_trace: 20, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub case: usize,
    pub formula: String,
    pub trace: Vec<Vec<String>>,
    pub progress: Verdict,
    pub oracle: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub config: FuzzConfig,
    pub satisfied: usize,
    pub violated: usize,
    pub undecided: usize,
    pub mismatches: Vec<Mismatch>,
}

/// Random formula in negation normal form over symbols `0..n_symbols`.
pub fn random_formula(rng: &mut Rng, n_symbols: usize, depth: usize) -> Formula {
    let atom = |rng: &mut Rng| SymbolId(rng.random_range(0..n_symbols) as u16);
    if depth == 0 || rng.random_bool(0.2) {
        return match rng.random_range(0..10) {
            0 => Formula::True,
            1 => Formula::False,
            2..=3 => Formula::neg_atom(atom(rng)),
            _ => Formula::atom(atom(rng)),
        };
    }
    let sub = |rng: &mut Rng| random_formula(rng, n_symbols, depth - 1);
    match rng.random_range(0..5) {
        0 => Formula::and([sub(rng), sub(rng)]),
        1 => Formula::or([sub(rng), sub(rng)]),
        2 => Formula::next(sub(rng)),
        3 => Formula::eventually(sub(rng)),
        _ => Formula::until(sub(rng), sub(rng)),
    }
}

pub fn random_trace(rng: &mut Rng, n_symbols: usize, max_len: usize) -> Vec<TruthAssignment> {
    let len = rng.random_range(1..=max_len.max(1));
    let density = [0.15, 0.35, 0.6][rng.random_range(0..3)];
    (0..len)
        .map(|_| (0..n_symbols).filter(|_| rng.random_bool(density)).map(|i| SymbolId(i as u16)).collect())
        .collect()
}

fn case_symbols(n: usize) -> SymbolTable {
    SymbolTable::from_names((0..n).map(|i| format!("p{i}")))
}

/// Case `i` uses the stream `(seed, FUZZ, i)`, so reports do not depend on
/// the execution mode.
pub fn fuzz_progression(cfg: &FuzzConfig, exec: Execution) -> FuzzReport {
    let cases = par::map_indexed(exec, cfg.count, |i| {
        let mut rng = stream(cfg.seed, &[tag::FUZZ, i as u64]);
        let n = rng.random_range(1..=cfg.max_symbols.max(1));
        let depth = rng.random_range(1..=cfg.max_depth.max(1));
        let phi = random_formula(&mut rng, n, depth);
        let trace = random_trace(&mut rng, n, cfg.max_trace);
        let prog = progress_verdict(&phi, &trace);
        let oracle = trace_oracle(&phi, &trace);
        let mismatch = (prog != oracle).then(|| {
            let symbols = case_symbols(n);
            Mismatch {
                case: i,
                formula: phi.display(&symbols).to_string(),
                trace: trace.iter().map(|s| s.names(&symbols)).collect(),
                progress: prog,
                oracle,
            }
        });
        (prog, mismatch)
    });
    let mut report = FuzzReport { config: *cfg, satisfied: 0, violated: 0, undecided: 0, mismatches: Vec::new() };
    for (verdict, mismatch) in cases {
        match verdict {
            Verdict::Satisfied(_) => report.satisfied += 1,
            Verdict::Violated(_) => report.violated += 1,
            Verdict::Unsatisfied => report.undecided += 1,
        }
        report.mismatches.extend(mismatch);
    }
    report
}
