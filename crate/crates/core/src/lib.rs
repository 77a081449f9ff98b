//! Core computations for fairness-aware evaluation of ranked retrieval runs.
//!
//! Relevance is measured with R-Precision. Fairness is the distributional
//! similarity between the category distribution of a system's results and a
//! target distribution: KL-divergence of the add-one smoothed results
//! distribution against the target, min-max normalized across the systems in
//! a batch and flipped so that 1 is the most fair. The two are combined with
//! weighted arithmetic or geometric means.
//!
//! The crate is `no_std` and needs only `alloc`. Parsing, report files and the
//! command-line tool live in the `fairdex` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bias;
pub mod distribution;
pub mod engine;
pub mod error;
pub mod kendall;
pub mod metrics;
pub mod model;

mod batch;

pub use batch::{BatchReport, Correlation, LeaderboardEntry, SCHEMA_VERSION};
pub use bias::{bias_report, BiasConfig, BiasReport};
pub use distribution::{kl_divergence, laplace_smooth, CategoricalDistribution};
pub use engine::{
    derive_population_target, Aggregation, Cutoff, EvalConfig, Evaluator, ResultsScope,
    SystemScore, TopicScore, Warning,
};
pub use error::{Error, Result};
pub use kendall::{kendall_tau, kendall_tau_orderings, tau_b};
pub use metrics::{
    fairness_scores, interpolate, minmax_normalize, r_precision, Interpolation, InterpolationKind,
    Normalized,
};
pub use model::{
    resolve_category, CategoryMapping, CategorySource, NamedTarget, Qrels, Resolved, Run, RunEntry,
    SourceMode, Strictness, TargetSpec, UNKNOWN_CATEGORY,
};
