//! `ilkit`: collect, inspect, train on and benchmark imitation-learning datasets.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use ilkit::benchmark::{
    calibrate_random_aer, default_cache_dir, default_registry_path, emit_report, render_report, run_benchmark,
    BenchmarkConfig, ReportFormat, BASELINE_EPISODES,
};
use ilkit::collector::{collect_registered, CollectionConfig, Controller, DEFAULT_MAX_RETRIES};
use ilkit::dataset::{fetch_dataset, read_ilds, write_ilds, DatasetFile, Registry};
use ilkit::training::{split_range, train_bc, write_checkpoint, write_loss_csv, SplitSpec, TrainConfig, DEFAULT_HIDDEN};

#[derive(Parser)]
#[command(name = "ilkit", version, about = "Imitation-learning dataset toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Roll out the registered expert and write an ILDS dataset.
    Collect(CollectArgs),
    /// Print a dataset summary and its metadata.
    Inspect {
        #[arg(value_parser = non_empty_path)]
        path: PathBuf,
    },
    /// Train a behavioral-cloning policy on the first N episodes of a dataset.
    Train(TrainArgs),
    /// Run a benchmark config and write CSV and markdown reports.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
    },
    /// Query the dataset registry.
    Registry {
        #[command(subcommand)]
        action: RegistryAction,
        #[arg(long, global = true)]
        registry: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CollectArgs {
    /// Registry key.
    #[arg(long)]
    env: String,
    #[arg(long)]
    episodes: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Minimum accepted return; defaults to the registry entry's threshold.
    #[arg(long, allow_hyphen_values = true)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MAX_RETRIES)]
    max_retries: u32,
    /// Record a creation time of 0 so repeated runs are byte-identical.
    #[arg(long)]
    fixed_timestamp: bool,
    #[arg(long)]
    registry: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset path or registry key.
    #[arg(long)]
    data: String,
    #[arg(long)]
    n_episodes: usize,
    #[arg(long)]
    epochs: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = DEFAULT_HIDDEN)]
    hidden: usize,
    /// Also write `<out>.epoch-<k>` every this many epochs.
    #[arg(long)]
    checkpoint_every: Option<usize>,
    #[arg(long)]
    registry: Option<PathBuf>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum RegistryAction {
    /// List keys and environment ids.
    List,
    /// Print one entry as JSON.
    Show { key: String },
    /// Recompute a key's random-policy AER and the expert AER of its dataset.
    Calibrate {
        key: String,
        #[arg(long, default_value_t = BASELINE_EPISODES)]
        episodes: usize,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
}

fn non_empty_path(s: &str) -> Result<PathBuf, String> {
    if s.is_empty() {
        Err("path must not be empty".into())
    } else {
        Ok(PathBuf::from(s))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_registry(path: Option<&Path>) -> ilkit::Result<Registry> {
    Registry::load(path.map(Path::to_path_buf).unwrap_or_else(default_registry_path))
}

fn run(command: Command) -> ilkit::Result<()> {
    match command {
        Command::Collect(args) => collect(args),
        Command::Inspect { path } => inspect(&path),
        Command::Train(args) => train(args),
        Command::Benchmark { config } => benchmark(&config),
        Command::Registry { action, registry } => registry_cmd(action, registry.as_deref()),
    }
}

fn collect(args: CollectArgs) -> ilkit::Result<()> {
    let registry = load_registry(args.registry.as_deref())?;
    let entry = registry.lookup(&args.env)?;
    let mut cfg = CollectionConfig::new(&args.env, args.episodes, args.threads, args.seed);
    cfg.acceptance_threshold = args.threshold.unwrap_or_else(|| entry.threshold());
    cfg.max_retries_per_episode = args.max_retries;
    let created = if args.fixed_timestamp {
        0
    } else {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
    };
    let mut controller = Controller::default();
    if !args.quiet {
        controller = controller.with_progress(|p| eprintln!("{p}"));
    }
    let (_, file) = collect_registered(&controller, &registry, &cfg, created)?;
    write_ilds(&file, &args.out)?;
    println!(
        "wrote {} episodes, {} steps, expert_aer={}",
        file.n_episodes(),
        file.n_steps(),
        file.metadata.expert_aer
    );
    Ok(())
}

fn inspect(path: &Path) -> ilkit::Result<()> {
    let file = read_ilds(path)?;
    let returns = file.episode_returns();
    println!("env_id: {}", file.descriptor.env_id);
    println!("n_episodes: {}", file.n_episodes());
    println!("n_steps: {}", file.n_steps());
    println!("expert_aer: {}", file.metadata.expert_aer);
    if !returns.is_empty() {
        let min = returns.iter().copied().fold(f64::INFINITY, f64::min);
        let max = returns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mean, _) = ilkit::average_episodic_reward(&returns)?;
        println!("return min/mean/max: {min} / {mean} / {max}");
    }
    println!("metadata: {}", serde_json::to_string_pretty(&file.metadata)?);
    Ok(())
}

fn resolve_data(spec: &str, registry: Option<&Path>, cache_dir: Option<&Path>) -> ilkit::Result<DatasetFile> {
    let as_path = Path::new(spec);
    if as_path.exists() {
        return read_ilds(as_path);
    }
    let registry = load_registry(registry)?;
    let entry = registry.lookup(spec)?;
    let cache = cache_dir.map(Path::to_path_buf).unwrap_or_else(default_cache_dir);
    read_ilds(fetch_dataset(entry, cache)?)
}

fn train(args: TrainArgs) -> ilkit::Result<()> {
    let data = resolve_data(&args.data, args.registry.as_deref(), args.cache_dir.as_deref())?;
    let range = split_range(data.n_episodes(), SplitSpec::train(args.n_episodes))?;
    let cfg = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        batch_size: args.batch_size,
        train_seed: args.seed,
        hidden: args.hidden,
        checkpoint_every: args.checkpoint_every,
    };
    let outcome = train_bc(&data, range, &cfg)?;
    write_checkpoint(&outcome.model, &args.out)?;
    let mut loss_path = args.out.clone().into_os_string();
    loss_path.push(".loss.csv");
    write_loss_csv(&outcome.losses, PathBuf::from(loss_path))?;
    if args.checkpoint_every.is_some() {
        for (epoch, model) in &outcome.checkpoints {
            let mut p = args.out.clone().into_os_string();
            p.push(format!(".epoch-{epoch}"));
            write_checkpoint(model, PathBuf::from(p))?;
        }
    }
    let final_loss = outcome.losses.last().copied().unwrap_or(f64::NAN);
    println!(
        "trained {} epochs on {} transitions, final loss={final_loss}",
        args.epochs,
        outcome.samples.len()
    );
    Ok(())
}

fn benchmark(config: &Path) -> ilkit::Result<()> {
    let (cfg, base) = BenchmarkConfig::load(config)?;
    cfg.validate()?;
    let outcome = run_benchmark(&cfg, &base)?;
    if outcome.plan.fell_back() {
        let tried: Vec<String> = outcome
            .plan
            .leakage
            .iter()
            .map(|r| format!("{:?} rejected {}/{}", r.mode, r.rejected, r.checked))
            .collect();
        eprintln!("leakage fallback: {}", tried.join(", "));
    }
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    emit_report(&outcome.report, ReportFormat::Csv, resolve(&cfg.output.csv))?;
    emit_report(&outcome.report, ReportFormat::Markdown, resolve(&cfg.output.markdown))?;
    print!("{}", render_report(&outcome.report, ReportFormat::Markdown)?);
    Ok(())
}

fn registry_cmd(action: RegistryAction, path: Option<&Path>) -> ilkit::Result<()> {
    let registry = load_registry(path)?;
    match action {
        RegistryAction::List => {
            for e in &registry.entries {
                println!("{}\t{}\t{}", e.key, e.env_id, e.expert_id);
            }
        }
        RegistryAction::Show { key } => {
            println!("{}", serde_json::to_string_pretty(registry.lookup(&key)?)?);
        }
        RegistryAction::Calibrate { key, episodes, cache_dir } => {
            let entry = registry.lookup(&key)?;
            let random = calibrate_random_aer(&entry.env_id, episodes)?;
            println!("random_aer: {random}");
            let cache = cache_dir.unwrap_or_else(default_cache_dir);
            match fetch_dataset(entry, cache).and_then(read_ilds) {
                Ok(file) => println!("expert_aer: {}", file.metadata.expert_aer),
                Err(e) => eprintln!("dataset unavailable: {e}"),
            }
        }
    }
    Ok(())
}
