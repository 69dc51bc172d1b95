//! Checks that an evaluation episode does not start from a state seen in training.

use std::collections::HashSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::dataset::DatasetFile;
use crate::envs::Environment;
use crate::Result;

const CONTINUOUS_MATCH: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeakageMode {
    /// Reject if the initial state equals any training state.
    Strict,
    /// Reject if the initial state equals any training episode's first state.
    InitialStatesOnly,
    /// Only reject seeds that were used to generate the dataset.
    SeedDisjoint,
}

impl LeakageMode {
    /// Order in which modes are tried when a mode cannot supply enough seeds.
    pub const FALLBACK_ORDER: [LeakageMode; 3] =
        [LeakageMode::Strict, LeakageMode::InitialStatesOnly, LeakageMode::SeedDisjoint];
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub mode: LeakageMode,
    pub checked: usize,
    pub rejected: usize,
    pub details: Vec<(u64, String)>,
}

/// Whether two states match: exact bits when `candidate` is integer-valued,
/// otherwise L-infinity distance below 1e-9.
pub fn states_match(candidate: &[f32], other: &[f32]) -> bool {
    if candidate.len() != other.len() {
        return false;
    }
    if is_integer_valued(candidate) {
        candidate.iter().zip(other).all(|(a, b)| a.to_bits() == b.to_bits())
    } else {
        candidate
            .iter()
            .zip(other)
            .all(|(a, b)| ((*a as f64) - (*b as f64)).abs() < CONTINUOUS_MATCH)
    }
}

fn is_integer_valued(state: &[f32]) -> bool {
    state.iter().all(|x| x.fract() == 0.0)
}

/// Training states indexed for fast membership queries.
#[derive(Debug, Clone)]
struct StateIndex {
    exact: HashSet<Vec<u32>>,
    /// `(first component, state)`, sorted by the first component.
    sorted: Vec<(f64, Vec<f32>)>,
}

impl StateIndex {
    fn new<'a>(states: impl Iterator<Item = &'a [f32]>) -> Self {
        let mut exact = HashSet::new();
        let mut sorted = Vec::new();
        for s in states {
            exact.insert(s.iter().map(|x| x.to_bits()).collect());
            sorted.push((s.first().copied().unwrap_or(0.0) as f64, s.to_vec()));
        }
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { exact, sorted }
    }

    fn contains(&self, candidate: &[f32]) -> bool {
        if is_integer_valued(candidate) {
            return self.exact.contains(&candidate.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        }
        let key = candidate.first().copied().unwrap_or(0.0) as f64;
        let lo = self.sorted.partition_point(|(k, _)| *k <= key - CONTINUOUS_MATCH);
        self.sorted[lo..]
            .iter()
            .take_while(|(k, _)| *k < key + CONTINUOUS_MATCH)
            .any(|(_, s)| states_match(candidate, s))
    }
}

/// Precomputed view of a training split for repeated leakage checks.
#[derive(Debug, Clone)]
pub struct LeakageChecker {
    all_states: StateIndex,
    first_states: StateIndex,
    generation_seeds: HashSet<u64>,
}

impl LeakageChecker {
    pub fn new(train: &DatasetFile, range: Range<usize>) -> Result<Self> {
        let episodes = train.episode_ranges();
        if range.end > episodes.len() || range.start > range.end {
            return Err(crate::Error::OutOfRange(format!(
                "training episodes {range:?} of {}",
                episodes.len()
            )));
        }
        let selected = &episodes[range];
        let all_states = StateIndex::new(selected.iter().flat_map(|r| r.clone()).map(|i| train.state(i)));
        let first_states = StateIndex::new(selected.iter().map(|r| train.state(r.start)));
        Ok(Self {
            all_states,
            first_states,
            generation_seeds: train.metadata.episode_seeds.iter().copied().collect(),
        })
    }

    pub fn check(&self, env: &mut dyn Environment, candidate_seed: u64, mode: LeakageMode) -> Verdict {
        if self.generation_seeds.contains(&candidate_seed) {
            return Verdict::Reject("seed was used to generate the dataset".into());
        }
        let s0 = env.reset(candidate_seed);
        let hit = match mode {
            LeakageMode::Strict => self.all_states.contains(&s0),
            LeakageMode::InitialStatesOnly => self.first_states.contains(&s0),
            LeakageMode::SeedDisjoint => false,
        };
        if hit {
            let what = match mode {
                LeakageMode::Strict => "a training state",
                _ => "a training episode's first state",
            };
            Verdict::Reject(format!("initial state {s0:?} matches {what}"))
        } else {
            Verdict::Accept
        }
    }
}

/// One-off leakage check of `candidate_seed` against the training episodes in `range`.
pub fn check_leakage(
    train: &DatasetFile,
    range: Range<usize>,
    env: &mut dyn Environment,
    candidate_seed: u64,
    mode: LeakageMode,
) -> Result<Verdict> {
    Ok(LeakageChecker::new(train, range)?.check(env, candidate_seed, mode))
}
