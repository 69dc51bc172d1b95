//! End-to-end benchmark: split, plan seeds, fit each method, select, evaluate, report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::eval::{evaluate, select_best, ModelRollout};
use super::seeds::{build_seed_plan, SeedPlan, SeedPlanParams};
use crate::dataset::{fetch_dataset, read_ilds, sha256_file, sha256_hex, DatasetFile, Registry, RegistryEntry};
use crate::envs::{make_env, CatalogPair, RolloutFactory, RANDOM_POLICY_ID};
use crate::training::{split_range, train_bc, SplitSpec, TrainConfig, DEFAULT_HIDDEN};
use crate::{derive_seed, performance, seed_blocks, Error, MetricsReport, MetricsRow, Result};

pub const METHOD_BC: &str = "bc";
pub const METHOD_RANDOM: &str = "random";
pub const METHOD_EXPERT: &str = "scripted-expert";

/// Number of random-policy episodes behind a registry's `random_aer`.
pub const BASELINE_EPISODES: usize = 10_000;
/// Master seed of the random-baseline calibration block.
pub const BASELINE_MASTER: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainParams {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
}

fn default_epochs() -> usize {
    5000
}
fn default_lr() -> f64 {
    0.05
}
fn default_batch() -> usize {
    64
}
fn default_hidden() -> usize {
    DEFAULT_HIDDEN
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            epochs: default_epochs(),
            learning_rate: default_lr(),
            batch_size: default_batch(),
            hidden: default_hidden(),
        }
    }
}

impl TrainParams {
    pub fn to_config(&self, train_seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            train_seed,
            hidden: self.hidden,
            checkpoint_every: Some((self.epochs / 10).max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub markdown: PathBuf,
}

/// Benchmark config file. Relative paths resolve against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub registry_key: String,
    pub methods: Vec<String>,
    pub n_train_episodes: usize,
    /// Per-method training parameters; methods without an entry use defaults.
    #[serde(default)]
    pub train: BTreeMap<String, TrainParams>,
    pub seeds: SeedPlanParams,
    /// Registry file; defaults to the registry shipped with the toolkit.
    #[serde(default)]
    pub registry: Option<PathBuf>,
    /// Use this ILDS file instead of fetching the registry's dataset.
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    pub output: OutputPaths,
}

impl BenchmarkConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("methods must not be empty".into()));
        }
        if self.n_train_episodes == 0 {
            return Err(Error::InvalidConfig("n_train_episodes must be >= 1".into()));
        }
        for m in &self.methods {
            if ![METHOD_BC, METHOD_RANDOM, METHOD_EXPERT].contains(&m.as_str()) {
                return Err(Error::InvalidConfig(format!("unknown method `{m}`")));
            }
        }
        Ok(())
    }

    pub fn train_params(&self, method: &str) -> TrainParams {
        self.train.get(method).cloned().unwrap_or_default()
    }
}

#[derive(Serialize)]
struct FingerprintInput<'a> {
    registry_key: &'a str,
    methods: &'a [String],
    n_train_episodes: usize,
    train: BTreeMap<&'a str, TrainParams>,
    seeds: &'a SeedPlanParams,
    dataset_sha256: &'a str,
}

/// sha256 over the semantic part of the config plus the dataset identity.
pub fn config_fingerprint(cfg: &BenchmarkConfig, dataset_sha256: &str) -> String {
    let input = FingerprintInput {
        registry_key: &cfg.registry_key,
        methods: &cfg.methods,
        n_train_episodes: cfg.n_train_episodes,
        train: cfg.methods.iter().map(|m| (m.as_str(), cfg.train_params(m))).collect(),
        seeds: &cfg.seeds,
        dataset_sha256,
    };
    sha256_hex(&serde_json::to_vec(&input).expect("fingerprint input serializes"))
}

/// One fitted method: candidate policies in checkpoint order.
pub struct FittedMethod {
    pub candidates: Vec<Box<dyn RolloutFactory>>,
    /// Checkpoint epoch per candidate (0 for methods without training).
    pub epochs: Vec<usize>,
}

impl RolloutFactory for Box<dyn RolloutFactory> {
    fn descriptor(&self) -> crate::envs::EnvDescriptor {
        self.as_ref().descriptor()
    }
    fn make_env(&self) -> Box<dyn crate::envs::Environment> {
        self.as_ref().make_env()
    }
    fn make_policy(&self) -> Box<dyn crate::envs::Policy> {
        self.as_ref().make_policy()
    }
}

/// Context handed to each method.
pub struct FitContext<'a> {
    pub dataset: &'a DatasetFile,
    pub train_range: std::ops::Range<usize>,
    pub entry: &'a RegistryEntry,
    pub plan: &'a SeedPlan,
    pub params: TrainParams,
}

/// An imitation-learning method the harness can train and evaluate.
pub trait Method {
    fn id(&self) -> &str;
    fn fit(&self, ctx: &FitContext<'_>) -> Result<FittedMethod>;
}

pub struct BehavioralCloning;
pub struct RandomBaseline;
pub struct ScriptedExpert;

impl Method for BehavioralCloning {
    fn id(&self) -> &str {
        METHOD_BC
    }

    fn fit(&self, ctx: &FitContext<'_>) -> Result<FittedMethod> {
        let cfg = ctx.params.to_config(ctx.plan.train_seed);
        let outcome = train_bc(ctx.dataset, ctx.train_range.clone(), &cfg)?;
        let mut candidates: Vec<Box<dyn RolloutFactory>> = Vec::new();
        let mut epochs = Vec::new();
        for (epoch, model) in outcome.checkpoints {
            candidates.push(Box::new(ModelRollout::new(&ctx.entry.env_id, model)?));
            epochs.push(epoch);
        }
        Ok(FittedMethod { candidates, epochs })
    }
}

impl Method for RandomBaseline {
    fn id(&self) -> &str {
        METHOD_RANDOM
    }

    fn fit(&self, ctx: &FitContext<'_>) -> Result<FittedMethod> {
        Ok(FittedMethod {
            candidates: vec![Box::new(CatalogPair::new(&ctx.entry.env_id, RANDOM_POLICY_ID)?)],
            epochs: vec![0],
        })
    }
}

impl Method for ScriptedExpert {
    fn id(&self) -> &str {
        METHOD_EXPERT
    }

    fn fit(&self, ctx: &FitContext<'_>) -> Result<FittedMethod> {
        Ok(FittedMethod {
            candidates: vec![Box::new(CatalogPair::new(&ctx.entry.env_id, &ctx.entry.expert_id)?)],
            epochs: vec![0],
        })
    }
}

pub fn method_by_id(id: &str) -> Result<Box<dyn Method>> {
    match id {
        METHOD_BC => Ok(Box::new(BehavioralCloning)),
        METHOD_RANDOM => Ok(Box::new(RandomBaseline)),
        METHOD_EXPERT => Ok(Box::new(ScriptedExpert)),
        other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
    }
}

#[derive(Debug, Clone)]
pub struct MethodSelection {
    pub method: String,
    pub checkpoint_epoch: usize,
    pub validation_aers: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutcome {
    pub report: MetricsReport,
    pub plan: SeedPlan,
    pub selections: Vec<MethodSelection>,
    pub dataset_path: PathBuf,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Path of the registry shipped in this repository.
pub fn default_registry_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../registry/registry.json")
}

/// Default fetch cache directory, next to the shipped registry.
pub fn default_cache_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../.ilkit-cache")
}

pub fn run_benchmark(cfg: &BenchmarkConfig, base_dir: &Path) -> Result<BenchmarkOutcome> {
    let methods = cfg
        .methods
        .iter()
        .map(|m| method_by_id(m))
        .collect::<Result<Vec<_>>>()?;
    run_benchmark_with(cfg, base_dir, &methods)
}

/// Like [`run_benchmark`] with caller-supplied method implementations.
pub fn run_benchmark_with(cfg: &BenchmarkConfig, base_dir: &Path, methods: &[Box<dyn Method>]) -> Result<BenchmarkOutcome> {
    if methods.is_empty() {
        return Err(Error::InvalidConfig("methods must not be empty".into()));
    }
    if cfg.n_train_episodes == 0 {
        return Err(Error::InvalidConfig("n_train_episodes must be >= 1".into()));
    }
    let registry_path = cfg
        .registry
        .as_ref()
        .map(|p| resolve(base_dir, p))
        .unwrap_or_else(default_registry_path);
    let registry = Registry::load(&registry_path)?;
    let entry = registry.lookup(&cfg.registry_key)?;
    let dataset_path = match &cfg.dataset {
        Some(p) => resolve(base_dir, p),
        None => {
            let cache = cfg
                .cache_dir
                .as_ref()
                .map(|p| resolve(base_dir, p))
                .unwrap_or_else(default_cache_dir);
            fetch_dataset(entry, cache)?
        }
    };
    let dataset = read_ilds(&dataset_path)?;
    if dataset.descriptor.env_id != entry.env_id {
        return Err(Error::InvalidConfig(format!(
            "dataset is for {}, registry entry for {}",
            dataset.descriptor.env_id, entry.env_id
        )));
    }
    let dataset_sha = sha256_file(&dataset_path)?;
    let train_range = split_range(dataset.n_episodes(), SplitSpec::train(cfg.n_train_episodes))?;

    let mut env = make_env(&entry.env_id)?;
    let plan = build_seed_plan(&cfg.seeds, &dataset, train_range.clone(), env.as_mut())?;
    let config_fp = config_fingerprint(cfg, &dataset_sha);
    let seed_fp = sha256_hex(&plan.fingerprint_bytes());

    let mut report = MetricsReport::default();
    let mut selections = Vec::new();
    for method in methods {
        let ctx = FitContext {
            dataset: &dataset,
            train_range: train_range.clone(),
            entry,
            plan: &plan,
            params: cfg.train_params(method.id()),
        };
        let fitted = method.fit(&ctx)?;
        let (best, validation_aers) = select_best(&fitted.candidates, &plan.validation_seeds)?;
        let eval = evaluate(&fitted.candidates[best], &plan.eval_seeds)?;
        report.push(MetricsRow {
            method: method.id().to_string(),
            env: entry.env_id.clone(),
            aer_mean: eval.mean,
            aer_std: eval.std,
            performance: performance(eval.mean, entry.random_aer, entry.expert_aer)?,
            n_eval: eval.returns.len(),
            config_fp: config_fp.clone(),
            seed_fp: seed_fp.clone(),
        })?;
        selections.push(MethodSelection {
            method: method.id().to_string(),
            checkpoint_epoch: fitted.epochs[best],
            validation_aers,
        });
    }
    Ok(BenchmarkOutcome {
        report,
        plan,
        selections,
        dataset_path,
    })
}

/// Random-policy AER over the reserved baseline seed block.
pub fn calibrate_random_aer(env_id: &str, episodes: usize) -> Result<f64> {
    let seeds: Vec<u64> = (0..episodes as u64)
        .map(|k| derive_seed(BASELINE_MASTER, seed_blocks::BASELINE + k))
        .collect();
    Ok(evaluate(&CatalogPair::new(env_id, RANDOM_POLICY_ID)?, &seeds)?.mean)
}
