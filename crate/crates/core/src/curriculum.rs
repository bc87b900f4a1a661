//! Level-indexed task sets and the success-driven level schedule.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::env::EnvKind;
use crate::error::{Error, Result};
use crate::ltl::{Formula, SymbolId, SymbolTable};
use crate::rng::Rng;

/// Mean success a level must strictly exceed before the next one opens.
pub const ADVANCE_THRESHOLD: f64 = 0.9;

/// Rounding slack when comparing a mean against the threshold: sixteen rates
/// of exactly 0.9 average to one ulp above 0.9 in floating point.
const MEAN_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    NavS1,
    NavS2,
    Inspect,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 3] = [ScenarioName::NavS1, ScenarioName::NavS2, ScenarioName::Inspect];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::NavS1 => "nav-s1",
            ScenarioName::NavS2 => "nav-s2",
            ScenarioName::Inspect => "inspect",
        }
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown scenario `{s}` (expected nav-s1, nav-s2 or inspect)")))
    }
}

/// Symbol multiset and environment of one experiment family.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: ScenarioName,
    pub kind: EnvKind,
    /// Base symbols with multiplicities, in canonical order.
    pub multiset: Vec<(String, usize)>,
    pub max_level: usize,
    pub symbols: SymbolTable,
}

impl Scenario {
    pub fn new(name: ScenarioName, kind: EnvKind, multiset: Vec<(String, usize)>, max_level: Option<usize>) -> Result<Scenario> {
        let size: usize = multiset.iter().map(|(_, c)| c).sum();
        let max_level = max_level.unwrap_or(size);
        if max_level == 0 || max_level > size {
            return Err(Error::Config(format!("max level {max_level} outside 1..={size}")));
        }
        let symbols = SymbolTable::from_multiset(&multiset);
        Ok(Scenario { name, kind, multiset, max_level, symbols })
    }

    pub fn builtin(name: ScenarioName) -> Scenario {
        let ms = |v: &[(&str, usize)]| v.iter().map(|(s, c)| (s.to_string(), *c)).collect::<Vec<_>>();
        let built = match name {
            ScenarioName::NavS1 => Scenario::new(
                name,
                EnvKind::Nav,
                ms(&[("reach_bluebox", 1), ("reach_redbox", 1), ("check_letter_left", 1), ("check_letter_right", 1)]),
                None,
            ),
            ScenarioName::NavS2 => Scenario::new(
                name,
                EnvKind::Nav,
                ms(&[("reach_bluebox", 1), ("reach_redbox", 1), ("check_letter_left", 2), ("check_letter_right", 2)]),
                None,
            ),
            ScenarioName::Inspect => Scenario::new(
                name,
                EnvKind::Inspect,
                ms(&[("read_meter", 1), ("check_rust_valve", 1), ("check_leak_pipe", 1)]),
                Some(2),
            ),
        };
        built.expect("builtin scenarios are valid")
    }

    /// All distinct ordered draws of `level` symbols without replacement,
    /// as nested-eventually sequences. The i-th use of a repeated base maps
    /// to its i-th occurrence.
    pub fn enumerate_tasks(&self, level: usize) -> Result<Vec<Formula>> {
        if level == 0 || level > self.max_level {
            return Err(Error::LevelOutOfRange { level, max: self.max_level });
        }
        let occurrences: Vec<Vec<SymbolId>> =
            self.multiset.iter().map(|(base, _)| self.symbols.occurrences_of(base)).collect();
        let mut remaining: Vec<usize> = self.multiset.iter().map(|(_, c)| *c).collect();
        let mut prefix = Vec::with_capacity(level);
        let mut out = Vec::new();
        fn rec(
            level: usize,
            occ: &[Vec<SymbolId>],
            remaining: &mut [usize],
            prefix: &mut Vec<SymbolId>,
            out: &mut Vec<Formula>,
        ) {
            if prefix.len() == level {
                out.push(Formula::sequence(prefix));
                return;
            }
            for b in 0..occ.len() {
                if remaining[b] == 0 {
                    continue;
                }
                let used = occ[b].len() - remaining[b];
                remaining[b] -= 1;
                prefix.push(occ[b][used]);
                rec(level, occ, remaining, prefix, out);
                prefix.pop();
                remaining[b] += 1;
            }
        }
        rec(level, &occurrences, &mut remaining, &mut prefix, &mut out);
        Ok(out)
    }

    /// Tasks of every level, index `k - 1` holding level `k`.
    pub fn all_levels(&self) -> Vec<Vec<Formula>> {
        (1..=self.max_level).map(|k| self.enumerate_tasks(k).expect("level in range")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurriculumMode {
    #[default]
    Normal,
    /// Hardest tasks first.
    Anti,
    /// Every level available from the start.
    None,
}

impl FromStr for CurriculumMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Self::Normal),
            "anti" => Ok(Self::Anti),
            "none" => Ok(Self::None),
            _ => Err(Error::InvalidInput(format!("unknown curriculum mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CurriculumState {
    mode: CurriculumMode,
    level: usize,
    levels: Vec<Vec<Formula>>,
    last_eval: BTreeMap<Formula, f64>,
}

impl CurriculumState {
    pub fn new(mode: CurriculumMode, levels: Vec<Vec<Formula>>) -> Result<Self> {
        if levels.is_empty() || levels.iter().any(Vec::is_empty) {
            return Err(Error::Config("curriculum needs at least one task per level".into()));
        }
        let level = if mode == CurriculumMode::None { levels.len() } else { 1 };
        Ok(Self { mode, level, levels, last_eval: BTreeMap::new() })
    }

    pub fn for_scenario(scenario: &Scenario, mode: CurriculumMode) -> Self {
        Self::new(mode, scenario.all_levels()).expect("scenario levels are non-empty")
    }

    pub fn mode(&self) -> CurriculumMode {
        self.mode
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn max_level(&self) -> usize {
        self.levels.len()
    }

    pub fn tasks_at(&self, level: usize) -> &[Formula] {
        &self.levels[level - 1]
    }

    pub fn all_tasks(&self) -> impl Iterator<Item = &Formula> {
        self.levels.iter().flatten()
    }

    /// Levels currently open for sampling and evaluation.
    pub fn active_levels(&self) -> std::ops::RangeInclusive<usize> {
        let max = self.max_level();
        match self.mode {
            CurriculumMode::Normal => 1..=self.level,
            CurriculumMode::Anti => max + 1 - self.level..=max,
            CurriculumMode::None => 1..=max,
        }
    }

    pub fn active_tasks(&self) -> Vec<Formula> {
        self.active_levels().flat_map(|k| self.levels[k - 1].iter().cloned()).collect()
    }

    pub fn sample_task(&self, rng: &mut Rng) -> Formula {
        let levels = self.active_levels();
        let total: usize = levels.clone().map(|k| self.levels[k - 1].len()).sum();
        let mut i = rng.random_range(0..total);
        for k in levels {
            let tasks = &self.levels[k - 1];
            if i < tasks.len() {
                return tasks[i].clone();
            }
            i -= tasks.len();
        }
        unreachable!("index drawn below the active task count")
    }

    pub fn last_eval(&self) -> &BTreeMap<Formula, f64> {
        &self.last_eval
    }

    /// Stores the summary and opens the next level if the mean success over
    /// the active tasks exceeds the threshold. Returns whether it advanced.
    pub fn record_eval_and_maybe_advance(&mut self, per_task: &BTreeMap<Formula, f64>) -> Result<bool> {
        let active = self.active_tasks();
        let mut sum = 0.0;
        for task in &active {
            sum += per_task.get(task).ok_or_else(|| Error::MissingTask(format!("{task:?}")))?;
        }
        self.last_eval = per_task.clone();
        let mean = sum / active.len() as f64;
        if self.mode != CurriculumMode::None && mean > ADVANCE_THRESHOLD + MEAN_SLACK && self.level < self.max_level() {
            self.level += 1;
            return Ok(true);
        }
        Ok(false)
    }
}
