//! Configuration, ingestion, caching and end-to-end orchestration.

pub mod cache;
pub mod config;
pub mod ingest;
pub mod run;

pub use cache::StageCache;
pub use config::{Column, DataConfig, DataFormat, EvalSection, Manifest, PipelineConfig, RecommendSection, TrainSection, WalkSection};
pub use ingest::{ingest, read_delimited, read_movielens, IngestSummary};
pub use run::{run_pipeline, with_threads, Pipeline, PipelineOutcome, SideArtifacts, FULL_DATA};
