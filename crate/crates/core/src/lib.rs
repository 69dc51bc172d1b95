//! Imitation-learning dataset toolkit.
//!
//! The crate covers the whole pipeline:
//!
//! - [`collector`]: a fixed-size worker pool that rolls out one episode per task
//!   with a scripted expert and collates the accepted episodes into one dataset.
//! - [`dataset`]: the ILDS binary container, the dataset registry and a
//!   checksum-verified fetch cache.
//! - [`training`]: episode-range splits, `(s_t, a_t, s_{t+1})` transition
//!   iteration and a behavioral-cloning learner.
//! - [`benchmark`]: leakage-checked seed plans, checkpoint selection, evaluation
//!   and CSV/markdown reports.
//!
//! Randomness flows exclusively through [`RngStream`] and [`derive_seed`], so
//! every artifact is a pure function of its master seeds.

pub mod benchmark;
pub mod collector;
pub mod dataset;
pub mod envs;
mod error;
pub mod metrics;
mod rng;
pub mod training;
mod types;

pub use error::{Error, Result};
pub use metrics::{average_episodic_reward, performance, MetricsReport, MetricsRow};
pub use rng::{derive_seed, seed_blocks, RngStream};
pub use types::{Action, ActionSpace, Episode, Step, StoredAction};

/// Version string recorded in dataset metadata.
pub const TOOL_VERSION: &str = concat!("ilkit ", env!("CARGO_PKG_VERSION"));
