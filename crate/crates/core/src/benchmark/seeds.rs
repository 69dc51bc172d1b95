//! Seed plans: disjoint generation, training, validation and evaluation seeds.

use std::collections::HashSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::leakage::{LeakageChecker, LeakageMode, LeakageReport, Verdict};
use crate::dataset::DatasetFile;
use crate::envs::Environment;
use crate::{derive_seed, seed_blocks, Error, Result};

/// Candidates scanned per requested eval seed before falling back to the next mode.
pub const SCAN_FACTOR: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedPlanParams {
    /// Benchmark master seed; all plan seeds derive from it.
    pub master: u64,
    #[serde(default = "default_validation")]
    pub n_validation: usize,
    #[serde(default = "default_eval")]
    pub n_eval: usize,
}

fn default_validation() -> usize {
    10
}

fn default_eval() -> usize {
    100
}

impl SeedPlanParams {
    pub fn new(master: u64) -> Self {
        Self {
            master,
            n_validation: default_validation(),
            n_eval: default_eval(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedPlan {
    pub generation_master: u64,
    pub benchmark_master: u64,
    pub train_seed: u64,
    pub validation_seeds: Vec<u64>,
    pub eval_seeds: Vec<u64>,
    /// Rejections under the final mode.
    pub rejected_eval_seeds: Vec<(u64, String)>,
    /// Mode the eval seeds were accepted under.
    pub mode: LeakageMode,
    /// One report per mode tried, in order; more than one means a fallback happened.
    pub leakage: Vec<LeakageReport>,
}

impl SeedPlan {
    pub fn fell_back(&self) -> bool {
        self.leakage.len() > 1
    }

    pub fn fingerprint_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("seed plan serializes")
    }
}

/// Derive the plan for a dataset and its training range.
///
/// Eval candidates are scanned in strict mode first; when fewer than
/// `n_eval` survive `SCAN_FACTOR * n_eval` candidates the scan restarts in
/// the next mode of [`LeakageMode::FALLBACK_ORDER`].
pub fn build_seed_plan(
    params: &SeedPlanParams,
    dataset: &DatasetFile,
    train_range: Range<usize>,
    env: &mut dyn Environment,
) -> Result<SeedPlan> {
    if params.n_eval == 0 || params.n_validation == 0 {
        return Err(Error::InvalidConfig("n_eval and n_validation must be >= 1".into()));
    }
    let checker = LeakageChecker::new(dataset, train_range)?;
    let mut taken: HashSet<u64> = dataset.metadata.episode_seeds.iter().copied().collect();
    if taken.len() != dataset.metadata.episode_seeds.len() {
        return Err(Error::SeedCollision("dataset reuses an episode seed".into()));
    }

    let take_fresh = |block: u64, count: usize, taken: &mut HashSet<u64>| -> Vec<u64> {
        let mut out = Vec::with_capacity(count);
        let mut k = 0u64;
        while out.len() < count {
            let s = derive_seed(params.master, block + k);
            if taken.insert(s) {
                out.push(s);
            }
            k += 1;
        }
        out
    };
    let train_seed = take_fresh(seed_blocks::TRAIN, 1, &mut taken)[0];
    let validation_seeds = take_fresh(seed_blocks::VALIDATION, params.n_validation, &mut taken);

    let budget = SCAN_FACTOR * params.n_eval;
    let mut reports = Vec::new();
    for mode in LeakageMode::FALLBACK_ORDER {
        let mut eval = Vec::with_capacity(params.n_eval);
        let mut report = LeakageReport {
            mode,
            checked: 0,
            rejected: 0,
            details: Vec::new(),
        };
        for k in 0..budget as u64 {
            if eval.len() == params.n_eval {
                break;
            }
            let seed = derive_seed(params.master, seed_blocks::EVAL + k);
            report.checked += 1;
            let verdict = if taken.contains(&seed) {
                Verdict::Reject("seed already used by another group".into())
            } else {
                checker.check(env, seed, mode)
            };
            match verdict {
                Verdict::Accept => eval.push(seed),
                Verdict::Reject(reason) => {
                    report.rejected += 1;
                    report.details.push((seed, reason));
                }
            }
        }
        let done = eval.len() == params.n_eval;
        let rejected_eval_seeds = report.details.clone();
        reports.push(report);
        if done {
            let plan = SeedPlan {
                generation_master: dataset.metadata.master_seed,
                benchmark_master: params.master,
                train_seed,
                validation_seeds,
                eval_seeds: eval,
                rejected_eval_seeds,
                mode,
                leakage: reports,
            };
            debug_assert!(groups_disjoint(&plan, &dataset.metadata.episode_seeds));
            return Ok(plan);
        }
    }
    Err(Error::NoEvalSeeds {
        checked: reports.iter().map(|r| r.checked).sum(),
    })
}

/// Generation, training, validation and eval seeds are pairwise disjoint.
pub fn groups_disjoint(plan: &SeedPlan, generation_seeds: &[u64]) -> bool {
    let mut seen = HashSet::new();
    generation_seeds
        .iter()
        .chain(std::iter::once(&plan.train_seed))
        .chain(&plan.validation_seeds)
        .chain(&plan.eval_seeds)
        .all(|s| seen.insert(*s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::tests_support::tiny_grid;
    use crate::envs::{GridWorld, LineReacher};

    #[test]
    fn plan_is_deterministic_and_disjoint() {
        let d = tiny_grid();
        let params = SeedPlanParams::new(5);
        let a = build_seed_plan(&params, &d, 0..2, &mut GridWorld::new()).unwrap();
        let b = build_seed_plan(&params, &d, 0..2, &mut GridWorld::new()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.eval_seeds.len(), 100);
        assert_eq!(a.validation_seeds.len(), 10);
        assert_eq!(a.mode, LeakageMode::Strict);
        assert!(!a.fell_back());
        assert!(groups_disjoint(&a, &d.metadata.episode_seeds));
        // Every strict rejection is one of the five training cells.
        assert!(!a.rejected_eval_seeds.is_empty());
    }

    #[test]
    fn strict_eval_starts_avoid_training_states() {
        let d = tiny_grid();
        let plan = build_seed_plan(&SeedPlanParams::new(8), &d, 0..2, &mut GridWorld::new()).unwrap();
        let train: HashSet<(i32, i32)> = (0..d.n_steps())
            .map(|i| (d.state(i)[0] as i32, d.state(i)[1] as i32))
            .collect();
        for s in plan.eval_seeds {
            assert!(!train.contains(&GridWorld::start_cell(s)));
        }
    }

    #[test]
    fn collision_with_generation_seed_is_skipped() {
        let mut d = tiny_grid();
        let params = SeedPlanParams::new(3);
        let first_eval = derive_seed(3, seed_blocks::EVAL);
        d.metadata.episode_seeds = vec![first_eval, derive_seed(3, seed_blocks::TRAIN)];
        let plan = build_seed_plan(&params, &d, 0..2, &mut GridWorld::new()).unwrap();
        assert_ne!(plan.train_seed, derive_seed(3, seed_blocks::TRAIN));
        assert!(!plan.eval_seeds.contains(&first_eval));
        assert!(groups_disjoint(&plan, &d.metadata.episode_seeds));
    }

    #[test]
    fn mismatched_env_still_terminates() {
        // A continuous env with an untouched empty range accepts everything.
        let d = tiny_grid();
        let plan = build_seed_plan(&SeedPlanParams::new(1), &d, 0..0, &mut LineReacher::new()).unwrap();
        assert_eq!(plan.leakage[0].rejected, 0);
    }
}
