//! Node embeddings from biased random walks and skip-gram training.

mod alias;
mod sgns;
mod walk;

pub use alias::AliasTable;
pub use sgns::{
    sgd_step, sgns_gradient, sgns_loss, sigmoid, train_sgns, EmbeddingMatrix, SgnsGradient, TrainConfig,
};
pub use walk::{generate_walks, generate_walks_on, mix_seed, read_walks, write_walks, WalkConfig, WalkGraph, WalkSampler};
