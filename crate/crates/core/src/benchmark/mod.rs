//! Benchmark harness: leakage-checked seed plans, checkpoint selection,
//! evaluation against registry baselines and CSV/markdown reports.

mod eval;
mod leakage;
mod report;
mod run;
mod seeds;

pub use eval::{evaluate, select_best, Evaluation, ModelRollout};
pub use leakage::{check_leakage, states_match, LeakageChecker, LeakageMode, LeakageReport, Verdict};
pub use report::{emit_report, format_sig6, render_report, ReportFormat, CSV_HEADER};
pub use run::{
    calibrate_random_aer, config_fingerprint, default_cache_dir, default_registry_path, method_by_id, run_benchmark,
    run_benchmark_with, BehavioralCloning, BenchmarkConfig, BenchmarkOutcome, FitContext, FittedMethod, Method,
    MethodSelection, OutputPaths, RandomBaseline, ScriptedExpert, TrainParams, BASELINE_EPISODES, BASELINE_MASTER,
    METHOD_BC, METHOD_EXPERT, METHOD_RANDOM,
};
pub use seeds::{build_seed_plan, groups_disjoint, SeedPlan, SeedPlanParams, SCAN_FACTOR};
