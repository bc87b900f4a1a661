use std::fmt;
use std::sync::Arc;

use super::symbols::{SymbolId, SymbolTable};

/// Co-safe LTL formula in canonical form.
///
/// Values are only built through the smart constructors below, which keep
/// the canonical shape: `And`/`Or` are flattened, their children sorted by
/// the derived structural order and deduplicated, constants folded, and
/// children implied by (for `Or`) or implying (for `And`) a sibling removed.
/// Negation is restricted to atoms by construction.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom(SymbolId),
    NegAtom(SymbolId),
    And(Arc<[Formula]>),
    Or(Arc<[Formula]>),
    Next(Arc<Formula>),
    Eventually(Arc<Formula>),
    Until(Arc<Formula>, Arc<Formula>),
}

impl Formula {
    pub fn atom(id: SymbolId) -> Self {
        Formula::Atom(id)
    }

    pub fn neg_atom(id: SymbolId) -> Self {
        Formula::NegAtom(id)
    }

    pub fn next(inner: Formula) -> Self {
        Formula::Next(Arc::new(inner))
    }

    pub fn eventually(inner: Formula) -> Self {
        Formula::Eventually(Arc::new(inner))
    }

    pub fn until(left: Formula, right: Formula) -> Self {
        Formula::Until(Arc::new(left), Arc::new(right))
    }

    pub fn and<I: IntoIterator<Item = Formula>>(children: I) -> Self {
        let mut flat = Vec::new();
        for child in children {
            match child {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => flat.extend(inner.iter().cloned()),
                other => flat.push(other),
            }
        }
        flat.sort_unstable();
        flat.dedup();
        // a conjunct implied by a sibling adds nothing
        let kept = prune(flat, |weak, strong| implies(strong, weak));
        match kept.len() {
            0 => Formula::True,
            1 => kept.into_iter().next().unwrap(),
            _ => Formula::And(kept.into()),
        }
    }

    pub fn or<I: IntoIterator<Item = Formula>>(children: I) -> Self {
        let mut flat = Vec::new();
        for child in children {
            match child {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => flat.extend(inner.iter().cloned()),
                other => flat.push(other),
            }
        }
        flat.sort_unstable();
        flat.dedup();
        // a disjunct implying a sibling is subsumed by it
        let kept = prune(flat, implies);
        match kept.len() {
            0 => Formula::False,
            1 => kept.into_iter().next().unwrap(),
            _ => Formula::Or(kept.into()),
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::False)
    }

    pub fn is_constant(&self) -> bool {
        self.is_true() || self.is_false()
    }

    /// Operator nesting depth; constants and literals have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) | Formula::NegAtom(_) => 0,
            Formula::And(cs) | Formula::Or(cs) => 1 + cs.iter().map(Formula::depth).max().unwrap_or(0),
            Formula::Next(f) | Formula::Eventually(f) => 1 + f.depth(),
            Formula::Until(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Symbol ids mentioned anywhere in the formula, sorted and unique.
    pub fn symbols(&self) -> Vec<SymbolId> {
        let mut out = Vec::new();
        self.collect_symbols(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_symbols(&self, out: &mut Vec<SymbolId>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(p) | Formula::NegAtom(p) => out.push(*p),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.collect_symbols(out)),
            Formula::Next(f) | Formula::Eventually(f) => f.collect_symbols(out),
            Formula::Until(l, r) => {
                l.collect_symbols(out);
                r.collect_symbols(out);
            }
        }
    }

    pub fn has_negation(&self) -> bool {
        match self {
            Formula::NegAtom(_) => true,
            Formula::True | Formula::False | Formula::Atom(_) => false,
            Formula::And(cs) | Formula::Or(cs) => cs.iter().any(Formula::has_negation),
            Formula::Next(f) | Formula::Eventually(f) => f.has_negation(),
            Formula::Until(l, r) => l.has_negation() || r.has_negation(),
        }
    }

    /// Rebuilds the formula bottom-up through the smart constructors.
    /// Canonical inputs come back unchanged.
    pub fn canonicalize(&self) -> Formula {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) | Formula::NegAtom(_) => self.clone(),
            Formula::And(cs) => Formula::and(cs.iter().map(Formula::canonicalize)),
            Formula::Or(cs) => Formula::or(cs.iter().map(Formula::canonicalize)),
            Formula::Next(f) => Formula::next(f.canonicalize()),
            Formula::Eventually(f) => Formula::eventually(f.canonicalize()),
            Formula::Until(l, r) => Formula::until(l.canonicalize(), r.canonicalize()),
        }
    }

    /// If the formula is a nested-eventually sequence
    /// `F (q1 & F (q2 & ... F qk))`, returns `[q1, ..., qk]`.
    pub fn eventually_chain(&self) -> Option<Vec<SymbolId>> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            let Formula::Eventually(inner) = cur else {
                return None;
            };
            match inner.as_ref() {
                Formula::Atom(p) => {
                    out.push(*p);
                    return Some(out);
                }
                Formula::And(cs) if cs.len() == 2 => match (&cs[0], &cs[1]) {
                    (Formula::Atom(p), rest @ Formula::Eventually(_)) => {
                        out.push(*p);
                        cur = rest;
                    }
                    _ => return None,
                },
                _ => return None,
            }
        }
    }

    /// Builds `F (q1 & F (q2 & ... F qk))`. Panics on an empty sequence.
    pub fn sequence(symbols: &[SymbolId]) -> Formula {
        let (last, init) = symbols.split_last().expect("empty symbol sequence");
        let mut f = Formula::eventually(Formula::atom(*last));
        for &p in init.iter().rev() {
            f = Formula::eventually(Formula::and([Formula::atom(p), f]));
        }
        f
    }

    /// Next pending symbol occurrence: the head of a nested-eventually chain,
    /// otherwise the smallest positive atom still mentioned.
    pub fn next_pending(&self) -> Option<SymbolId> {
        if let Some(chain) = self.eventually_chain() {
            return chain.first().copied();
        }
        let mut atoms = Vec::new();
        self.collect_positive(&mut atoms);
        atoms.into_iter().min()
    }

    fn collect_positive(&self, out: &mut Vec<SymbolId>) {
        match self {
            Formula::Atom(p) => out.push(*p),
            Formula::True | Formula::False | Formula::NegAtom(_) => {}
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.collect_positive(out)),
            Formula::Next(f) | Formula::Eventually(f) => f.collect_positive(out),
            Formula::Until(l, r) => {
                l.collect_positive(out);
                r.collect_positive(out);
            }
        }
    }

    pub fn display<'a>(&'a self, symbols: &'a SymbolTable) -> DisplayFormula<'a> {
        DisplayFormula { formula: self, symbols }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Or(_) => 1,
            Formula::And(_) => 2,
            Formula::Until(..) => 3,
            _ => 4,
        }
    }
}

/// Keeps the elements of `items` that are not dominated by another element.
/// `dominated(a, b)` means `a` is redundant given `b`. For mutually dominating
/// pairs the structurally smaller element is kept.
fn prune(items: Vec<Formula>, dominated: impl Fn(&Formula, &Formula) -> bool) -> Vec<Formula> {
    if items.len() < 2 {
        return items;
    }
    let drop: Vec<bool> = (0..items.len())
        .map(|i| {
            (0..items.len()).any(|j| {
                j != i && dominated(&items[i], &items[j]) && (j < i || !dominated(&items[j], &items[i]))
            })
        })
        .collect();
    items
        .into_iter()
        .zip(drop)
        .filter_map(|(f, d)| (!d).then_some(f))
        .collect()
}

/// Sound, incomplete syntactic entailment `strong ⊨ weak`.
///
/// Every rule also guarantees that progression of `weak` reaches `True` no
/// later than progression of `strong`, and `False` no earlier, so removing
/// subsumed children never changes when a progressed formula is decided.
pub fn implies(strong: &Formula, weak: &Formula) -> bool {
    if strong == weak || weak.is_true() || strong.is_false() {
        return true;
    }
    if let Formula::And(ws) = weak {
        return ws.iter().all(|w| implies(strong, w));
    }
    if let Formula::Or(ss) = strong {
        return ss.iter().all(|s| implies(s, weak));
    }
    if let Formula::And(ss) = strong {
        if ss.iter().any(|s| implies(s, weak)) {
            return true;
        }
    }
    if let Formula::Or(ws) = weak {
        if ws.iter().any(|w| implies(strong, w)) {
            return true;
        }
    }
    match (strong, weak) {
        // F x ⊨ F y when x ⊨ F y
        (Formula::Eventually(x), Formula::Eventually(_)) if implies(x, weak) => return true,
        (Formula::Next(x), Formula::Next(y)) if implies(x, y) => return true,
        _ => {}
    }
    // c ⊨ F y when c ⊨ y, for non-constant c
    if let Formula::Eventually(y) = weak {
        if !strong.is_constant() && implies(strong, y) {
            return true;
        }
    }
    false
}

pub struct DisplayFormula<'a> {
    formula: &'a Formula,
    symbols: &'a SymbolTable,
}

impl DisplayFormula<'_> {
    fn child(&self, f: &Formula, min_prec: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner = DisplayFormula { formula: f, symbols: self.symbols };
        if f.precedence() < min_prec {
            write!(out, "({inner})")
        } else {
            write!(out, "{inner}")
        }
    }
}

impl fmt::Display for DisplayFormula<'_> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.formula {
            Formula::True => out.write_str("true"),
            Formula::False => out.write_str("false"),
            Formula::Atom(p) => out.write_str(self.symbols.name(*p)),
            Formula::NegAtom(p) => write!(out, "!{}", self.symbols.name(*p)),
            Formula::And(cs) | Formula::Or(cs) => {
                let (sep, prec) = if matches!(self.formula, Formula::And(_)) { (" & ", 3) } else { (" | ", 2) };
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        out.write_str(sep)?;
                    }
                    self.child(c, prec, out)?;
                }
                Ok(())
            }
            Formula::Next(f) => {
                out.write_str("X ")?;
                self.child(f, 4, out)
            }
            Formula::Eventually(f) => {
                out.write_str("F ")?;
                self.child(f, 4, out)
            }
            Formula::Until(l, r) => {
                self.child(l, 4, out)?;
                out.write_str(" U ")?;
                self.child(r, 3, out)
            }
        }
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "True"),
            Formula::False => write!(f, "False"),
            Formula::Atom(p) => write!(f, "p{}", p.0),
            Formula::NegAtom(p) => write!(f, "!p{}", p.0),
            Formula::And(cs) => f.debug_tuple("And").field(&&cs[..]).finish(),
            Formula::Or(cs) => f.debug_tuple("Or").field(&&cs[..]).finish(),
            Formula::Next(x) => f.debug_tuple("X").field(x).finish(),
            Formula::Eventually(x) => f.debug_tuple("F").field(x).finish(),
            Formula::Until(l, r) => f.debug_tuple("U").field(l).field(r).finish(),
        }
    }
}
