//! Cluster-local top-N recommendation.
//!
//! The pipeline projects the user-item bipartite network (optionally enriched
//! with item categories) onto users and onto items, embeds both projections
//! with biased second-order random walks and skip-gram training, clusters the
//! vectors with density-gated spectral clustering, and finally recommends
//! inside the item clusters matched to each user cluster.

pub mod clustering;
pub mod data;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod graph;
pub mod pipeline;
pub mod recommend;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Node vectors as the pipeline stores them.
pub type Embedding = embedding::EmbeddingMatrix<f32>;
/// Similarity, ratings and scores are computed in double precision.
pub type Similarity = clustering::DnnSimilarity<f64>;
pub type Ratings = recommend::RatingMatrix<f64>;
pub type Recommendations = recommend::TopNList<f64>;
