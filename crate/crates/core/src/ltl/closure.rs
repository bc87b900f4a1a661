use std::collections::{BTreeSet, HashMap, VecDeque};

use super::formula::Formula;
use super::progress::progress;
use super::symbols::{SymbolTable, TruthAssignment};
use crate::error::{Error, Result};

pub const DEFAULT_CLOSURE_CAP: usize = 10_000;

/// Progression closure of a task set, with a dense index per member.
///
/// Members are ordered by first discovery in a breadth-first walk that
/// starts from the tasks in their given order, so the index is
/// deterministic for a fixed task list.
#[derive(Debug, Clone)]
pub struct Closure {
    members: Vec<Formula>,
    index: HashMap<Formula, usize>,
}

impl Closure {
    /// Fixed point of [`progress`] over every truth assignment to the symbols
    /// mentioned by each formula. Assignments to unmentioned symbols cannot
    /// change the result.
    pub fn build(tasks: &[Formula], cap: usize) -> Result<Closure> {
        if tasks.is_empty() {
            return Err(Error::InvalidInput("closure of an empty task set".into()));
        }
        let mut members = Vec::new();
        let mut index = HashMap::new();
        let mut queue = VecDeque::new();
        for task in tasks {
            if !index.contains_key(task) {
                index.insert(task.clone(), members.len());
                members.push(task.clone());
                queue.push_back(task.clone());
            }
        }
        while let Some(phi) = queue.pop_front() {
            let syms = phi.symbols();
            if syms.len() > 20 {
                return Err(Error::ClosureCap { cap, size: members.len() });
            }
            // successors in a stable order
            let mut succ = BTreeSet::new();
            for mask in 0u64..(1u64 << syms.len()) {
                let sigma: TruthAssignment = syms
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, &id)| id)
                    .collect();
                succ.insert(progress(&phi, &sigma));
            }
            for next in succ {
                if !index.contains_key(&next) {
                    if members.len() >= cap {
                        return Err(Error::ClosureCap { cap, size: members.len() + 1 });
                    }
                    index.insert(next.clone(), members.len());
                    members.push(next.clone());
                    queue.push_back(next);
                }
            }
        }
        Ok(Closure { members, index })
    }

    /// Rebuilds a closure from an exported member list.
    pub fn from_members(members: Vec<Formula>) -> Closure {
        let index = members.iter().cloned().enumerate().map(|(i, f)| (f, i)).collect();
        Closure { members, index }
    }

    pub fn index_of(&self, phi: &Formula) -> Option<usize> {
        self.index.get(phi).copied()
    }

    pub fn contains(&self, phi: &Formula) -> bool {
        self.index.contains_key(phi)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Formula] {
        &self.members
    }

    /// One formula per line in index order.
    pub fn export(&self, symbols: &SymbolTable) -> String {
        let mut out = String::new();
        for f in &self.members {
            out.push_str(&f.display(symbols).to_string());
            out.push('\n');
        }
        out
    }

    /// Length of the longest progression chain from `phi` to `True`,
    /// counting both endpoints. `None` if `True` is unreachable or the
    /// progression graph below `phi` has a cycle other than self-loops.
    pub fn chain_depth(&self, phi: &Formula) -> Option<usize> {
        fn go(phi: &Formula, memo: &mut HashMap<Formula, Option<usize>>, stack: &mut Vec<Formula>) -> Option<usize> {
            if phi.is_true() {
                return Some(1);
            }
            if let Some(v) = memo.get(phi) {
                return *v;
            }
            if stack.contains(phi) {
                return None;
            }
            stack.push(phi.clone());
            let syms = phi.symbols();
            let mut best: Option<usize> = None;
            for mask in 0u64..(1u64 << syms.len()) {
                let sigma: TruthAssignment = syms
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, &id)| id)
                    .collect();
                let next = progress(phi, &sigma);
                if &next == phi || next.is_false() {
                    continue;
                }
                if let Some(d) = go(&next, memo, stack) {
                    best = Some(best.map_or(d + 1, |b: usize| b.max(d + 1)));
                }
            }
            stack.pop();
            memo.insert(phi.clone(), best);
            best
        }
        go(phi, &mut HashMap::new(), &mut Vec::new())
    }
}
