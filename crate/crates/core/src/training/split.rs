use std::ops::Range;

use crate::dataset::{ActionColumn, DatasetFile};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Eval,
}

/// `n_episodes` training episodes; `Eval` selects everything after them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub n_episodes: usize,
    pub split: Split,
}

impl SplitSpec {
    pub fn train(n_episodes: usize) -> Self {
        Self {
            n_episodes,
            split: Split::Train,
        }
    }

    pub fn eval(n_episodes: usize) -> Self {
        Self {
            n_episodes,
            split: Split::Eval,
        }
    }
}

/// Train is `[0, n)`, eval is `[n, total)`.
pub fn split_range(total_episodes: usize, spec: SplitSpec) -> Result<Range<usize>> {
    let n = spec.n_episodes;
    if n == 0 || n > total_episodes {
        return Err(Error::OutOfRange(format!(
            "n_episodes = {n} with {total_episodes} episodes available"
        )));
    }
    match spec.split {
        Split::Train => Ok(0..n),
        Split::Eval if n == total_episodes => Err(Error::EmptySplit),
        Split::Eval => Ok(n..total_episodes),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionRef<'a> {
    Discrete(u32),
    Continuous(&'a [f32]),
}

/// `(s_t, a_t, s_{t+1})` within one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionView<'a> {
    pub step: usize,
    pub s: &'a [f32],
    pub a: ActionRef<'a>,
    pub s_next: &'a [f32],
}

/// Transitions of the episodes in `range`, in file order. An episode of `T`
/// steps contributes `T - 1` transitions; none crosses an episode boundary.
pub fn transitions(dataset: &DatasetFile, range: Range<usize>) -> Result<Vec<TransitionView<'_>>> {
    let episodes = dataset.episode_ranges();
    if range.start > range.end || range.end > episodes.len() {
        return Err(Error::OutOfRange(format!(
            "episodes {range:?} of {}",
            episodes.len()
        )));
    }
    let act_dim = dataset.act_dim();
    let mut out = Vec::new();
    for steps in &episodes[range] {
        for i in steps.start..steps.end.saturating_sub(1) {
            let a = match &dataset.actions {
                ActionColumn::Discrete(v) => ActionRef::Discrete(v[i]),
                ActionColumn::Continuous(v) => ActionRef::Continuous(&v[i * act_dim..(i + 1) * act_dim]),
            };
            out.push(TransitionView {
                step: i,
                s: dataset.state(i),
                a,
                s_next: dataset.state(i + 1),
            });
        }
    }
    Ok(out)
}
