//! Two-phase recommendation: item clusters are matched to each user cluster
//! by link weight, then a base recommender runs inside the matched block.

pub mod base;
pub mod matching;
pub mod matrix;
pub mod two_phase;

pub use base::{
    nmf_factorize, recommend_ibcf, recommend_nmf, recommend_popular, recommend_ubcf, BaseRecommender, NmfFactors,
    Prepared,
};
pub use matching::{match_item_clusters, ClusterBipartite};
pub use matrix::{RatingMatrix, TopNList};
pub use two_phase::{recommend_original, two_phase, TwoPhaseInput};
