use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense identifier of a symbol occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymbolId(pub u16);

impl SymbolId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolEntry {
    /// Occurrence name as it appears in formula text, e.g. `check_letter_left#2`.
    pub name: String,
    /// Name of the evaluated base symbol, e.g. `check_letter_left`.
    pub base: String,
}

/// Ordered symbol names with dense ids `0..n`.
///
/// Repeated symbols are expanded into distinct occurrences that share a base
/// symbol: `p#1`, `p#2`, ... Each occurrence carries its own mapping
/// specification while being evaluated by the base symbol's evaluator.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolTable {
    entries: Vec<SymbolEntry>,
    #[serde(skip)]
    by_name: HashMap<String, SymbolId>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Table with one occurrence per name; each name is its own base.
    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut table = Self::new();
        for name in names {
            let name = name.into();
            table.insert(name.clone(), name);
        }
        table
    }

    /// Builds occurrence-expanded entries from `(base, multiplicity)` pairs.
    /// A base with multiplicity 1 keeps its plain name.
    pub fn from_multiset<S: AsRef<str>>(bases: &[(S, usize)]) -> Self {
        let mut table = Self::new();
        for (base, count) in bases {
            let base = base.as_ref();
            if *count == 1 {
                table.insert(base.to_string(), base.to_string());
            } else {
                for k in 1..=*count {
                    table.insert(format!("{base}#{k}"), base.to_string());
                }
            }
        }
        table
    }

    /// Inserts an occurrence; returns the existing id if the name is present.
    pub fn insert(&mut self, name: String, base: String) -> SymbolId {
        if let Some(&id) = self.by_name.get(&name) {
            return id;
        }
        let id = SymbolId(u16::try_from(self.entries.len()).expect("symbol table overflow"));
        self.by_name.insert(name.clone(), id);
        self.entries.push(SymbolEntry { name, base });
        id
    }

    pub fn lookup(&self, name: &str) -> Option<SymbolId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: SymbolId) -> &str {
        &self.entries[id.index()].name
    }

    pub fn base(&self, id: SymbolId) -> &str {
        &self.entries[id.index()].base
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = SymbolId> + '_ {
        (0..self.entries.len()).map(|i| SymbolId(i as u16))
    }

    pub fn entries(&self) -> &[SymbolEntry] {
        &self.entries
    }

    /// Occurrence ids of `base`, in id order.
    pub fn occurrences_of(&self, base: &str) -> Vec<SymbolId> {
        self.ids().filter(|&id| self.base(id) == base).collect()
    }

    /// Rebuilds the name index after deserialization.
    pub fn reindex(&mut self) {
        self.by_name = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.name.clone(), SymbolId(i as u16)))
            .collect();
    }
}

/// Set of satisfied symbol occurrences at one step.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruthAssignment {
    ids: Vec<SymbolId>,
}

impl TruthAssignment {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_ids<I: IntoIterator<Item = SymbolId>>(ids: I) -> Self {
        let mut ids: Vec<SymbolId> = ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        Self { ids }
    }

    /// Assignment whose members are the set bits of `mask` over ids `0..n`.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        Self {
            ids: (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| SymbolId(i as u16))
                .collect(),
        }
    }

    pub fn contains(&self, id: SymbolId) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    pub fn insert(&mut self, id: SymbolId) {
        if let Err(pos) = self.ids.binary_search(&id) {
            self.ids.insert(pos, id);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = SymbolId> + '_ {
        self.ids.iter().copied()
    }

    pub fn names(&self, table: &SymbolTable) -> Vec<String> {
        self.ids.iter().map(|&id| table.name(id).to_string()).collect()
    }
}

impl FromIterator<SymbolId> for TruthAssignment {
    fn from_iter<T: IntoIterator<Item = SymbolId>>(iter: T) -> Self {
        Self::from_ids(iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiset_expands_repeated_symbols() {
        let table = SymbolTable::from_multiset(&[("a", 1), ("b", 2)]);
        let names: Vec<_> = table.entries().iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names, ["a", "b#1", "b#2"]);
        assert_eq!(table.base(SymbolId(2)), "b");
        assert_eq!(table.occurrences_of("b"), vec![SymbolId(1), SymbolId(2)]);
    }

    #[test]
    fn ids_are_dense_and_names_unique() {
        let mut table = SymbolTable::from_names(["x", "y"]);
        assert_eq!(table.insert("x".into(), "x".into()), SymbolId(0));
        assert_eq!(table.len(), 2);
        assert_eq!(table.lookup("y"), Some(SymbolId(1)));
    }

    #[test]
    fn assignment_is_a_sorted_set() {
        let a = TruthAssignment::from_ids([SymbolId(3), SymbolId(1), SymbolId(3)]);
        assert_eq!(a.len(), 2);
        assert!(a.contains(SymbolId(1)));
        assert!(!a.contains(SymbolId(2)));
        assert_eq!(TruthAssignment::from_mask(0b101, 3), TruthAssignment::from_ids([SymbolId(0), SymbolId(2)]));
    }
}
