//! Mutation-based evaluation: operators, ground truth and metrics.

pub mod metrics;
pub mod mutation;
pub mod synth;

pub use metrics::{aggregate, f1, read_counts_csv, render_csv, score, Aggregate, Counts, MetricsRow, ScoreError};
pub use mutation::{applicable, mutate, quota, GroundTruth, Label, Mutation, MutationOperator, Target};
pub use synth::random_model;
