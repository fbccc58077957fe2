//! Cross-validated top-N evaluation.

pub mod metrics;
pub mod report;
pub mod split;

pub use metrics::{score, Metrics};
pub use report::{CutoffResult, MetricsReport};
pub use split::{split, FoldPlan};
