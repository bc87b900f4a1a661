use super::formula::Formula;
use super::symbols::TruthAssignment;

/// Rewrites `phi` into the obligation that remains after observing `sigma`.
///
/// Returns `True` exactly when the consumed prefix is a good prefix and
/// `False` when it can no longer be satisfied.
pub fn progress(phi: &Formula, sigma: &TruthAssignment) -> Formula {
    match phi {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Atom(p) => bool_formula(sigma.contains(*p)),
        Formula::NegAtom(p) => bool_formula(!sigma.contains(*p)),
        Formula::And(cs) => Formula::and(cs.iter().map(|c| progress(c, sigma))),
        Formula::Or(cs) => Formula::or(cs.iter().map(|c| progress(c, sigma))),
        Formula::Next(f) => f.as_ref().clone(),
        Formula::Eventually(f) => Formula::or([progress(f, sigma), phi.clone()]),
        Formula::Until(l, r) => Formula::or([
            progress(r, sigma),
            Formula::and([progress(l, sigma), phi.clone()]),
        ]),
    }
}

fn bool_formula(b: bool) -> Formula {
    if b {
        Formula::True
    } else {
        Formula::False
    }
}

/// Outcome of checking a formula against a finite trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Verdict {
    /// Decided true after consuming this many steps.
    Satisfied(usize),
    /// Neither decided within the trace.
    Unsatisfied,
    /// Decided false after consuming this many steps.
    Violated(usize),
}

/// Verdict obtained by iterating [`progress`] over `trace`.
pub fn progress_verdict(phi: &Formula, trace: &[TruthAssignment]) -> Verdict {
    let mut cur = phi.clone();
    for t in 0..=trace.len() {
        match cur {
            Formula::True => return Verdict::Satisfied(t),
            Formula::False => return Verdict::Violated(t),
            _ => {}
        }
        if t < trace.len() {
            cur = progress(&cur, &trace[t]);
        }
    }
    Verdict::Unsatisfied
}
