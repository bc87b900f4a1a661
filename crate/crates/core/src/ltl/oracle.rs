//! Finite-trace evaluation that never calls [`progress`](super::progress).
//!
//! For every subformula and start position `i` the evaluator computes the
//! number of consumed steps after which the obligation started at `i` is
//! decided true (`sat[i]`) or false (`viol[i]`). Conjunctions are decided
//! true when their last conjunct is and false at the first false conjunct;
//! disjunctions dually. Temporal operators consume at least one step, and
//! `F`/`U` witnesses must occur inside the trace.

use super::formula::Formula;
use super::progress::Verdict;
use super::symbols::TruthAssignment;

const NEVER: usize = usize::MAX;

struct Times {
    sat: Vec<usize>,
    viol: Vec<usize>,
}

/// Time at which an obligation started at `i` is decided once at least one
/// step has been consumed.
fn consumed(t: usize, i: usize) -> usize {
    if t == NEVER {
        NEVER
    } else {
        t.max(i + 1)
    }
}

fn eval(phi: &Formula, trace: &[TruthAssignment]) -> Times {
    let n = trace.len();
    let mut sat = vec![NEVER; n + 1];
    let mut viol = vec![NEVER; n + 1];
    match phi {
        Formula::True => (0..=n).for_each(|i| sat[i] = i),
        Formula::False => (0..=n).for_each(|i| viol[i] = i),
        Formula::Atom(p) | Formula::NegAtom(p) => {
            let want = matches!(phi, Formula::Atom(_));
            for i in 0..n {
                if trace[i].contains(*p) == want {
                    sat[i] = i + 1;
                } else {
                    viol[i] = i + 1;
                }
            }
        }
        Formula::And(cs) | Formula::Or(cs) => {
            let conj = matches!(phi, Formula::And(_));
            let parts: Vec<Times> = cs.iter().map(|c| eval(c, trace)).collect();
            for i in 0..=n {
                let s = parts.iter().map(|t| t.sat[i]);
                let v = parts.iter().map(|t| t.viol[i]);
                if conj {
                    sat[i] = s.max().unwrap_or(i);
                    viol[i] = v.min().unwrap_or(NEVER);
                } else {
                    sat[i] = s.min().unwrap_or(NEVER);
                    viol[i] = v.max().unwrap_or(i);
                }
            }
        }
        Formula::Next(f) => {
            let inner = eval(f, trace);
            sat[..n].copy_from_slice(&inner.sat[1..=n]);
            viol[..n].copy_from_slice(&inner.viol[1..=n]);
        }
        Formula::Eventually(f) => {
            let inner = eval(f, trace);
            // F f at i  =  f@i  or  F f at i+1
            for i in (0..n).rev() {
                sat[i] = consumed(inner.sat[i], i).min(sat[i + 1]);
            }
        }
        Formula::Until(l, r) => {
            let left = eval(l, trace);
            let right = eval(r, trace);
            // l U r at i  =  r@i  or  (l@i  and  l U r at i+1)
            for i in (0..n).rev() {
                let s_and = consumed(left.sat[i], i).max(sat[i + 1]);
                sat[i] = consumed(right.sat[i], i).min(s_and);
                let v_and = consumed(left.viol[i], i).min(viol[i + 1]);
                viol[i] = consumed(right.viol[i], i).max(v_and);
            }
        }
    }
    Times { sat, viol }
}

/// Verdict of `phi` on `trace` by direct recursive evaluation.
pub fn trace_oracle(phi: &Formula, trace: &[TruthAssignment]) -> Verdict {
    let times = eval(phi, trace);
    let (s, v) = (times.sat[0], times.viol[0]);
    match (s, v) {
        (NEVER, NEVER) => Verdict::Unsatisfied,
        (s, v) if s <= v => Verdict::Satisfied(s),
        (_, v) => Verdict::Violated(v),
    }
}
