//! Cover times of λ-biased random walks on supercritical Galton-Watson trees.
//!
//! The crate is a small simulation laboratory built around one object: the
//! continuous-time walk on a depth-`n` truncated GW tree that jumps to the
//! parent with probability λ/(λ+ν) and to each child with probability
//! 1/(λ+ν). Everything else supports studying when that walk has visited
//! every vertex:
//!
//! * [`tree`] — arena trees conditioned on depth-`n` survival, resistances,
//!   stationary weights, regularity diagnostics, text serialization.
//! * [`walk`] — the event-driven walker: full cover trials and fixed
//!   excursion-budget runs with normalized local-time fields.
//! * [`pglocal`] — the compound Poisson-exponential law PG(a,b), an exact
//!   walk-free sampler of local-time fields, and uncovered-set diagnostics.
//! * [`dgff`] — Gaussian free fields on the tree, the second Ray-Knight
//!   coupling, and the maximum law.
//! * [`stats`] — Gumbel/Poisson references, Kolmogorov-Smirnov and
//!   total-variation machinery, cover-time normalization.
//! * [`config`] / [`experiment`] — declarative experiment configs, a
//!   deterministic parallel trial runner, CSV/manifest persistence, reports.
//!
//! Each major capability has a runnable demo under `examples/`:
//!
//! ```text
//! cargo run --release --example tree_regularity
//! cargo run --release --example cover_trial
//! cargo run --release --example excursion_field
//! cargo run --release --example exact_field
//! cargo run --release --example uncovered_poisson
//! cargo run --release --example ray_knight
//! cargo run --release --example dgff_max
//! ```
//!
//! The `gwcover` binary wraps the same machinery behind `gen-tree`, `run`,
//! `report` and `selftest` subcommands for scripted use.

pub mod config;
pub mod dgff;
pub mod experiment;
pub mod pglocal;
pub mod rng;
pub mod stats;
pub mod tree;
pub mod walk;

use thiserror::Error;

/// Unified error type; variants map onto the CLI's exit codes (validation
/// errors exit 1, runtime errors exit 2).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid offspring distribution: {0}")]
    InvalidOffspring(String),
    #[error(
        "tree rejection budget exhausted after {attempts} attempts \
         (estimated extinction probability {extinction:.6})"
    )]
    RejectionBudget { attempts: u32, extinction: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid regime: {0}")]
    InvalidRegime(String),
    #[error("empty sample")]
    EmptySample,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("malformed tree file: {0}")]
    MalformedTree(String),
    #[error("incomplete experiment: {0}")]
    IncompleteExperiment(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
