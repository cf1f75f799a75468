//! Experiment orchestration: configurations, the embedding cache and
//! client, the run pipeline, and replication comparisons.

pub mod cache;
pub mod client;
pub mod config;
pub mod replication;
pub mod run;

pub use cache::EmbeddingCache;
pub use client::{EmbeddingClient, Encoder, HttpEncoder, OracleEncoder};
pub use config::{ExperimentConfig, ModelSpec, BUILTIN_NAMES};
pub use replication::{compare_tables, replication_report, ReplicationReport};
pub use run::{run_experiment, RunOptions, RunSummary};
