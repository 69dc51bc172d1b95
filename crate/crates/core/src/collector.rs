//! Parallel expert-rollout collection.
//!
//! A [`Controller`] owns an `enjoy` function (one episode) and a `collate`
//! function (episodes to dataset). Workers pull episode indices from a shared
//! queue, each with its own environment/policy pair. Episode `i`, retry `r` is
//! seeded with `derive_seed(master, i * (max_retries + 1) + r)`, so the output
//! does not depend on the thread count or on scheduling.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use crate::dataset::{ActionColumn, DatasetFile, DatasetMetadata, Registry};
use crate::envs::{CatalogPair, EnvDescriptor, Environment, Policy, RolloutFactory};
use crate::types::StoredAction;
use crate::{average_episodic_reward, derive_seed, seed_blocks, Episode, Error, Result, Step};

pub const DEFAULT_MAX_RETRIES: u32 = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct CollectionConfig {
    pub registry_key: String,
    pub episodes: usize,
    pub threads: usize,
    pub master_seed: u64,
    /// Minimum accepted `total_return`; `-inf` accepts everything.
    pub acceptance_threshold: f64,
    pub max_retries_per_episode: u32,
}

impl CollectionConfig {
    pub fn new(registry_key: impl Into<String>, episodes: usize, threads: usize, master_seed: u64) -> Self {
        Self {
            registry_key: registry_key.into(),
            episodes,
            threads,
            master_seed,
            acceptance_threshold: f64::NEG_INFINITY,
            max_retries_per_episode: DEFAULT_MAX_RETRIES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.threads == 0 {
            return Err(Error::InvalidConfig("episodes and threads must be >= 1".into()));
        }
        let attempts = (self.episodes as u128) * (self.max_retries_per_episode as u128 + 1);
        if attempts > seed_blocks::BLOCK_SIZE as u128 {
            return Err(Error::InvalidConfig("too many collection attempts for the seed block".into()));
        }
        if self.acceptance_threshold.is_nan() {
            return Err(Error::InvalidConfig("acceptance threshold is NaN".into()));
        }
        Ok(())
    }

    /// Seed of episode `index`, attempt `retry`.
    pub fn attempt_seed(&self, index: usize, retry: u32) -> u64 {
        let attempt = index as u64 * (self.max_retries_per_episode as u64 + 1) + retry as u64;
        derive_seed(self.master_seed, seed_blocks::GENERATION + attempt)
    }
}

#[derive(Debug, Clone)]
pub struct CollectionResult {
    /// Accepted episodes, sorted by index `0..E`.
    pub episodes: Vec<Episode>,
    pub rejected_count: usize,
    pub wall_time: Duration,
    /// Time spent inside `enjoy` over total wall time, per worker.
    pub per_worker_busy_fraction: Vec<f64>,
    /// Highest number of simultaneously running `enjoy` calls.
    pub peak_concurrency: usize,
}

/// Progress notification sent after each accepted episode.
#[derive(Debug, Clone, Copy)]
pub struct Progress {
    pub index: usize,
    pub total: usize,
    pub total_return: f64,
}

impl std::fmt::Display for Progress {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "episode {}/{} accepted return={}",
            self.index + 1,
            self.total,
            self.total_return
        )
    }
}

/// Metadata that `collate` cannot derive from the episodes themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct CollateInfo {
    pub expert_id: String,
    pub random_aer: Option<f64>,
    pub master_seed: u64,
    pub acceptance_threshold: Option<f64>,
    pub max_retries: u32,
    pub rejected_count: u64,
    pub created_unix: u64,
}

pub type EnjoyFn = dyn Fn(&mut dyn Environment, &mut dyn Policy, u64) -> Result<Episode> + Sync;
pub type CollateFn = dyn Fn(&[Episode], &EnvDescriptor, &CollateInfo) -> Result<DatasetFile> + Sync;
pub type ProgressFn = dyn Fn(&Progress) + Sync;

/// Roll out one episode: reset both sides with `seed`, then act/step until done.
///
/// The returned episode has index 0; the collector assigns the real index.
pub fn enjoy_episode(env: &mut dyn Environment, policy: &mut dyn Policy, seed: u64) -> Result<Episode> {
    let max_steps = env.descriptor().max_steps;
    let mut state = env.reset(seed);
    policy.reset(seed);
    let mut steps = Vec::new();
    let mut accumulated = 0.0;
    loop {
        let step = steps.len();
        if step >= max_steps {
            return Err(Error::EpisodeFailed {
                seed,
                step,
                reason: format!("no termination within max_steps = {max_steps}"),
            });
        }
        let failed = |e: Error| Error::EpisodeFailed {
            seed,
            step,
            reason: e.to_string(),
        };
        let action = policy.act(&state).map_err(failed)?;
        let outcome = env.step(&action).map_err(failed)?;
        accumulated += outcome.reward;
        steps.push(Step {
            state: std::mem::replace(&mut state, outcome.state),
            action: StoredAction::from(&action),
            reward: outcome.reward,
            accumulated_reward: accumulated,
            episode_start: step == 0,
        });
        if outcome.done {
            break;
        }
    }
    Ok(Episode {
        index: 0,
        seed,
        steps,
        total_return: accumulated,
    })
}

/// Concatenate episodes (sorted by index, contiguous from 0) into a dataset.
pub fn collate(episodes: &[Episode], descriptor: &EnvDescriptor, info: &CollateInfo) -> Result<DatasetFile> {
    if episodes.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut ordered: Vec<&Episode> = episodes.iter().collect();
    ordered.sort_by_key(|e| e.index);
    for (expected, ep) in ordered.iter().enumerate() {
        if ep.index != expected {
            return Err(Error::NonContiguousEpisodes(format!(
                "expected index {expected}, found {}",
                ep.index
            )));
        }
    }

    let n_steps: usize = ordered.iter().map(|e| e.len()).sum();
    let mut states = Vec::with_capacity(n_steps * descriptor.obs_dim);
    let discrete = descriptor.action_space.is_discrete();
    let mut discrete_actions = Vec::new();
    let mut continuous_actions = Vec::new();
    let mut rewards = Vec::with_capacity(n_steps);
    let mut accumulated_rewards = Vec::with_capacity(n_steps);
    let mut episode_starts = Vec::with_capacity(n_steps);
    for ep in &ordered {
        for step in &ep.steps {
            states.extend_from_slice(&step.state);
            match (&step.action, discrete) {
                (StoredAction::Discrete(a), true) => discrete_actions.push(*a),
                (StoredAction::Continuous(a), false) => continuous_actions.extend_from_slice(a),
                _ => {
                    return Err(Error::InvalidDataset(format!(
                        "episode {}: action kind does not match {}",
                        ep.index, descriptor.env_id
                    )))
                }
            }
            rewards.push(step.reward);
            accumulated_rewards.push(step.accumulated_reward);
            episode_starts.push(step.episode_start);
        }
    }
    let returns: Vec<f64> = ordered.iter().map(|e| e.total_return).collect();
    let (expert_aer, _) = average_episodic_reward(&returns)?;
    let file = DatasetFile {
        descriptor: descriptor.clone(),
        states,
        actions: if discrete {
            ActionColumn::Discrete(discrete_actions)
        } else {
            ActionColumn::Continuous(continuous_actions)
        },
        rewards,
        accumulated_rewards,
        episode_starts,
        metadata: DatasetMetadata {
            env_id: descriptor.env_id.clone(),
            expert_id: info.expert_id.clone(),
            expert_aer,
            random_aer: info.random_aer,
            master_seed: info.master_seed,
            acceptance_threshold: info.acceptance_threshold,
            max_retries: info.max_retries,
            rejected_count: info.rejected_count,
            episode_seeds: ordered.iter().map(|e| e.seed).collect(),
            created_unix: info.created_unix,
            tool_version: crate::TOOL_VERSION.to_string(),
        },
    };
    file.validate()?;
    Ok(file)
}

pub struct Controller {
    enjoy: Box<EnjoyFn>,
    collate: Box<CollateFn>,
    progress: Option<Box<ProgressFn>>,
}

impl Default for Controller {
    fn default() -> Self {
        Self::new(enjoy_episode, collate)
    }
}

impl Controller {
    pub fn new<E, C>(enjoy: E, collate: C) -> Self
    where
        E: Fn(&mut dyn Environment, &mut dyn Policy, u64) -> Result<Episode> + Sync + 'static,
        C: Fn(&[Episode], &EnvDescriptor, &CollateInfo) -> Result<DatasetFile> + Sync + 'static,
    {
        Self {
            enjoy: Box::new(enjoy),
            collate: Box::new(collate),
            progress: None,
        }
    }

    pub fn with_progress(mut self, progress: impl Fn(&Progress) + Sync + 'static) -> Self {
        self.progress = Some(Box::new(progress));
        self
    }

    /// Run the worker pool and return the accepted episodes.
    pub fn run(&self, cfg: &CollectionConfig, factory: &dyn RolloutFactory) -> Result<CollectionResult> {
        cfg.validate()?;
        let queue = Mutex::new(0..cfg.episodes);
        let sink: Mutex<Vec<Episode>> = Mutex::new(Vec::with_capacity(cfg.episodes));
        let failures: Mutex<Vec<(usize, Error)>> = Mutex::new(Vec::new());
        let stop = AtomicBool::new(false);
        let rejected = AtomicUsize::new(0);
        let active = AtomicUsize::new(0);
        let peak = AtomicUsize::new(0);

        let started = Instant::now();
        let busy: Vec<Duration> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..cfg.threads)
                .map(|_| {
                    scope.spawn(|| {
                        let mut env = factory.make_env();
                        let mut policy = factory.make_policy();
                        let mut busy = Duration::ZERO;
                        loop {
                            if stop.load(Ordering::Acquire) {
                                break;
                            }
                            let Some(index) = queue.lock().expect("queue poisoned").next() else {
                                break;
                            };
                            let t0 = Instant::now();
                            let now = active.fetch_add(1, Ordering::AcqRel) + 1;
                            peak.fetch_max(now, Ordering::AcqRel);
                            let outcome = self.collect_one(cfg, index, env.as_mut(), policy.as_mut(), &rejected);
                            active.fetch_sub(1, Ordering::AcqRel);
                            busy += t0.elapsed();
                            match outcome {
                                Ok(ep) => {
                                    if let Some(progress) = &self.progress {
                                        progress(&Progress {
                                            index,
                                            total: cfg.episodes,
                                            total_return: ep.total_return,
                                        });
                                    }
                                    sink.lock().expect("sink poisoned").push(ep);
                                }
                                Err(e) => {
                                    stop.store(true, Ordering::Release);
                                    failures.lock().expect("failures poisoned").push((index, e));
                                }
                            }
                        }
                        busy
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("collector worker panicked"))
                .collect()
        });
        let wall_time = started.elapsed();

        // Indices are handed out in order and in-flight episodes finish, so the
        // lowest failing index is the same for every thread count.
        let mut failures = failures.into_inner().expect("failures poisoned");
        if !failures.is_empty() {
            failures.sort_by_key(|(i, _)| *i);
            return Err(failures.swap_remove(0).1);
        }
        let mut episodes = sink.into_inner().expect("sink poisoned");
        episodes.sort_by_key(|e| e.index);
        let wall = wall_time.as_secs_f64().max(f64::MIN_POSITIVE);
        Ok(CollectionResult {
            episodes,
            rejected_count: rejected.into_inner(),
            wall_time,
            per_worker_busy_fraction: busy.iter().map(|b| (b.as_secs_f64() / wall).min(1.0)).collect(),
            peak_concurrency: peak.into_inner(),
        })
    }

    fn collect_one(
        &self,
        cfg: &CollectionConfig,
        index: usize,
        env: &mut dyn Environment,
        policy: &mut dyn Policy,
        rejected: &AtomicUsize,
    ) -> Result<Episode> {
        for retry in 0..=cfg.max_retries_per_episode {
            let mut ep = (self.enjoy)(env, policy, cfg.attempt_seed(index, retry))?;
            if ep.total_return >= cfg.acceptance_threshold {
                ep.index = index;
                return Ok(ep);
            }
            rejected.fetch_add(1, Ordering::Relaxed);
        }
        Err(Error::AcceptanceExhausted { index })
    }

    /// Run the pool, then collate into one dataset.
    pub fn start(
        &self,
        cfg: &CollectionConfig,
        factory: &dyn RolloutFactory,
        info: &CollateInfo,
    ) -> Result<(CollectionResult, DatasetFile)> {
        let result = self.run(cfg, factory)?;
        let info = CollateInfo {
            rejected_count: result.rejected_count as u64,
            ..info.clone()
        };
        let file = (self.collate)(&result.episodes, &factory.descriptor(), &info)?;
        Ok((result, file))
    }
}

/// Collect a dataset for a registry entry with its expert.
///
/// `cfg.acceptance_threshold` is used as given; callers that want the
/// registry's threshold copy it from the entry first.
pub fn collect_registered(
    controller: &Controller,
    registry: &Registry,
    cfg: &CollectionConfig,
    created_unix: u64,
) -> Result<(CollectionResult, DatasetFile)> {
    let entry = registry.lookup(&cfg.registry_key)?;
    let pair = CatalogPair::new(&entry.env_id, &entry.expert_id)?;
    let info = CollateInfo {
        expert_id: entry.expert_id.clone(),
        random_aer: Some(entry.random_aer),
        master_seed: cfg.master_seed,
        acceptance_threshold: cfg.acceptance_threshold.is_finite().then_some(cfg.acceptance_threshold),
        max_retries: cfg.max_retries_per_episode,
        rejected_count: 0,
        created_unix,
    };
    controller.start(cfg, &pair, &info)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{GridWorld, GridWorldExpert, GRIDWORLD_EXPERT_ID, GRIDWORLD_ID};
    use crate::types::StoredAction;

    fn grid_pair() -> CatalogPair {
        CatalogPair::new(GRIDWORLD_ID, GRIDWORLD_EXPERT_ID).unwrap()
    }

    fn seed_for_start(cell: (i32, i32)) -> u64 {
        (0..).find(|&s| GridWorld::start_cell(s) == cell).unwrap()
    }

    fn info() -> CollateInfo {
        CollateInfo {
            expert_id: GRIDWORLD_EXPERT_ID.into(),
            random_aer: None,
            master_seed: 0,
            acceptance_threshold: None,
            max_retries: 5,
            rejected_count: 0,
            created_unix: 0,
        }
    }

    #[test]
    fn enjoy_single_forced_step() {
        let seed = seed_for_start((4, 3));
        let ep = enjoy_episode(&mut GridWorld::new(), &mut GridWorldExpert, seed).unwrap();
        assert_eq!(ep.len(), 1);
        assert_eq!(ep.total_return, -1.0);
        assert!(ep.steps[0].episode_start);
        assert_eq!(ep.steps[0].state, vec![4.0, 3.0]);
        assert_eq!(ep.steps[0].action, StoredAction::Discrete(3));
    }

    #[test]
    fn enjoy_from_origin() {
        let seed = seed_for_start((0, 0));
        let ep = enjoy_episode(&mut GridWorld::new(), &mut GridWorldExpert, seed).unwrap();
        assert_eq!(ep.len(), 8);
        assert_eq!(ep.total_return, -8.0);
        let acc: Vec<f64> = ep.steps.iter().map(|s| s.accumulated_reward).collect();
        assert_eq!(acc, (1..=8).map(|k| -(k as f64)).collect::<Vec<_>>());
        assert!(ep.steps.iter().skip(1).all(|s| !s.episode_start));
        let again = enjoy_episode(&mut GridWorld::new(), &mut GridWorldExpert, seed).unwrap();
        assert_eq!(ep, again);
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let pair = grid_pair();
        let ctl = Controller::default();
        let one = ctl.run(&CollectionConfig::new("g", 10, 1, 3), &pair).unwrap();
        let four = ctl.run(&CollectionConfig::new("g", 10, 4, 3), &pair).unwrap();
        assert_eq!(one.episodes, four.episodes);
        assert!(four.peak_concurrency <= 4);
        assert_eq!(one.episodes.iter().map(|e| e.index).collect::<Vec<_>>(), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn impossible_threshold_exhausts_episode_zero() {
        let mut cfg = CollectionConfig::new("g", 10, 3, 3);
        cfg.acceptance_threshold = 0.0;
        let err = Controller::default().run(&cfg, &grid_pair()).unwrap_err();
        assert!(matches!(err, Error::AcceptanceExhausted { index: 0 }), "{err}");
    }

    #[test]
    fn retries_use_next_attempt_seed() {
        // Threshold -4 rejects long paths; accepted seeds must be attempt seeds.
        let mut cfg = CollectionConfig::new("g", 30, 2, 9);
        cfg.acceptance_threshold = -4.0;
        cfg.max_retries_per_episode = 50;
        let res = Controller::default().run(&cfg, &grid_pair()).unwrap();
        assert!(res.rejected_count > 0);
        for ep in &res.episodes {
            assert!(ep.total_return >= -4.0);
            let retry = (0..=50).find(|&r| cfg.attempt_seed(ep.index, r) == ep.seed).unwrap();
            for r in 0..retry {
                let s = cfg.attempt_seed(ep.index, r);
                let replay = enjoy_episode(&mut GridWorld::new(), &mut GridWorldExpert, s).unwrap();
                assert!(replay.total_return < -4.0);
            }
        }
    }

    #[test]
    fn collate_layout_and_ordering() {
        let pair = grid_pair();
        let mut a = enjoy_episode(&mut GridWorld::new(), &mut GridWorldExpert, seed_for_start((2, 4))).unwrap();
        let mut b = enjoy_episode(&mut GridWorld::new(), &mut GridWorldExpert, seed_for_start((4, 2))).unwrap();
        a.index = 0;
        b.index = 1;
        assert_eq!((a.len(), b.len()), (2, 2));
        let mut c = enjoy_episode(&mut GridWorld::new(), &mut GridWorldExpert, seed_for_start((1, 4))).unwrap();
        c.index = 0;
        let d = collate(&[c.clone(), b.clone()], &pair.descriptor(), &info()).unwrap();
        assert_eq!(d.n_steps(), 5);
        assert_eq!(d.episode_starts, vec![true, false, false, true, false]);
        assert_eq!(d.metadata.expert_aer, (c.total_return + b.total_return) / 2.0);

        let permuted = collate(&[b.clone(), c.clone()], &pair.descriptor(), &info()).unwrap();
        assert_eq!(permuted, d);

        b.index = 2;
        assert!(matches!(
            collate(&[a.clone(), b.clone()], &pair.descriptor(), &info()),
            Err(Error::NonContiguousEpisodes(_))
        ));
        b.index = 0;
        assert!(matches!(
            collate(&[a, b], &pair.descriptor(), &info()),
            Err(Error::NonContiguousEpisodes(_))
        ));
    }

    #[test]
    fn start_fills_metadata() {
        let pair = grid_pair();
        let cfg = CollectionConfig::new("g", 6, 2, 5);
        let (res, file) = Controller::default().start(&cfg, &pair, &info()).unwrap();
        assert_eq!(file.n_episodes(), 6);
        assert_eq!(file.metadata.episode_seeds, res.episodes.iter().map(|e| e.seed).collect::<Vec<_>>());
        assert_eq!(file.episode_returns(), res.episodes.iter().map(|e| e.total_return).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_bad_config() {
        let ctl = Controller::default();
        assert!(ctl.run(&CollectionConfig::new("g", 0, 1, 0), &grid_pair()).is_err());
        assert!(ctl.run(&CollectionConfig::new("g", 1, 0, 0), &grid_pair()).is_err());
    }
}
