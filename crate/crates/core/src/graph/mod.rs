//! Bipartite networks and their category-enriched one-mode projections.

mod bipartite;
mod ids;
mod projection;

pub use bipartite::{
    build_user_category, build_user_item, item_category_graph, user_item_graph, BipartiteGraph,
    UserCategoryBuild, UserItemBuild,
};
pub use ids::{IdMap, Namespace, NodeId};
pub use projection::{project, ProjectionEdge, ProjectionGraph, ProjectionOptions, Side};
