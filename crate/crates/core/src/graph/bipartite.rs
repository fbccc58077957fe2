use log::warn;

use super::ids::{IdMap, Namespace};
use crate::data::{Interaction, RawInteraction};
use crate::error::{Error, Result};

/// Weighted edges between two disjoint node sets. Both directions are kept
/// as adjacency lists sorted by neighbor index; weights are positive counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    left_namespace: Namespace,
    right_namespace: Namespace,
    left_adj: Vec<Vec<(u32, u32)>>,
    right_adj: Vec<Vec<(u32, u32)>>,
}

impl BipartiteGraph {
    /// Duplicate pairs are aggregated by summing their weights; zero weights
    /// are dropped.
    pub fn from_weighted_pairs<I>(
        left_namespace: Namespace,
        right_namespace: Namespace,
        n_left: usize,
        n_right: usize,
        pairs: I,
    ) -> Self
    where
        I: IntoIterator<Item = (u32, u32, u32)>,
    {
        assert_ne!(left_namespace, right_namespace, "bipartite sides must differ");
        let mut left_adj: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n_left];
        for (l, r, w) in pairs {
            assert!((r as usize) < n_right, "right index {r} out of range {n_right}");
            if w > 0 {
                left_adj[l as usize].push((r, w));
            }
        }
        for row in &mut left_adj {
            row.sort_unstable_by_key(|e| e.0);
            let mut merged: Vec<(u32, u32)> = Vec::with_capacity(row.len());
            for &(r, w) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == r => last.1 += w,
                    _ => merged.push((r, w)),
                }
            }
            *row = merged;
        }
        let mut right_adj: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n_right];
        for (l, row) in left_adj.iter().enumerate() {
            for &(r, w) in row {
                right_adj[r as usize].push((l as u32, w));
            }
        }
        BipartiteGraph {
            left_namespace,
            right_namespace,
            left_adj,
            right_adj,
        }
    }

    pub fn left_namespace(&self) -> Namespace {
        self.left_namespace
    }

    pub fn right_namespace(&self) -> Namespace {
        self.right_namespace
    }

    pub fn n_left(&self) -> usize {
        self.left_adj.len()
    }

    pub fn n_right(&self) -> usize {
        self.right_adj.len()
    }

    pub fn n_edges(&self) -> usize {
        self.left_adj.iter().map(Vec::len).sum()
    }

    /// `(right, weight)` pairs of a left node, ascending by right index.
    pub fn left_neighbors(&self, left: u32) -> &[(u32, u32)] {
        &self.left_adj[left as usize]
    }

    /// `(left, weight)` pairs of a right node, ascending by left index.
    pub fn right_neighbors(&self, right: u32) -> &[(u32, u32)] {
        &self.right_adj[right as usize]
    }

    pub fn weight(&self, left: u32, right: u32) -> u32 {
        let row = &self.left_adj[left as usize];
        row.binary_search_by_key(&right, |e| e.0)
            .map(|p| row[p].1)
            .unwrap_or(0)
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        self.left_adj
            .iter()
            .enumerate()
            .flat_map(|(l, row)| row.iter().map(move |&(r, w)| (l as u32, r, w)))
    }

    /// Adjacency of the nodes on `namespace`'s side.
    pub(crate) fn side(&self, namespace: Namespace) -> Option<&[Vec<(u32, u32)>]> {
        if namespace == self.left_namespace {
            Some(&self.left_adj)
        } else if namespace == self.right_namespace {
            Some(&self.right_adj)
        } else {
            None
        }
    }

    /// Adjacency of the side opposite to `namespace`.
    pub(crate) fn opposite(&self, namespace: Namespace) -> Option<&[Vec<(u32, u32)>]> {
        if namespace == self.left_namespace {
            Some(&self.right_adj)
        } else if namespace == self.right_namespace {
            Some(&self.left_adj)
        } else {
            None
        }
    }
}

/// User-item graph together with the id maps densified from raw records.
#[derive(Debug, Clone)]
pub struct UserItemBuild {
    pub graph: BipartiteGraph,
    pub users: IdMap,
    pub items: IdMap,
}

/// One edge per distinct (user, item) pair, weighted by how often it occurs.
pub fn build_user_item(records: &[RawInteraction]) -> Result<UserItemBuild> {
    if records.is_empty() {
        return Err(Error::DatasetEmpty);
    }
    let mut users = IdMap::new(Namespace::User);
    let mut items = IdMap::new(Namespace::Item);
    let mut pairs = Vec::with_capacity(records.len());
    for r in records {
        if r.user.is_empty() || r.item.is_empty() {
            return Err(Error::parse("interactions", r.line, "empty user or item id"));
        }
        pairs.push((users.intern(&r.user), items.intern(&r.item), 1));
    }
    let graph = BipartiteGraph::from_weighted_pairs(
        Namespace::User,
        Namespace::Item,
        users.len(),
        items.len(),
        pairs,
    );
    Ok(UserItemBuild {
        graph,
        users,
        items,
    })
}

/// User-item graph over already densified interactions.
pub fn user_item_graph(interactions: &[Interaction], n_users: usize, n_items: usize) -> BipartiteGraph {
    BipartiteGraph::from_weighted_pairs(
        Namespace::User,
        Namespace::Item,
        n_users,
        n_items,
        interactions.iter().map(|it| (it.user, it.item, 1)),
    )
}

pub fn item_category_graph(memberships: &[(u32, u32)], n_items: usize, n_categories: usize) -> BipartiteGraph {
    BipartiteGraph::from_weighted_pairs(
        Namespace::Item,
        Namespace::Category,
        n_items,
        n_categories,
        memberships.iter().map(|&(i, c)| (i, c, 1)),
    )
}

#[derive(Debug, Clone)]
pub struct UserCategoryBuild {
    pub graph: BipartiteGraph,
    /// Items with interactions but no category; they contribute nothing.
    pub uncategorized_items: Vec<u32>,
}

/// weight(u, c) = sum over items v of weight(u, v) for every v in category c.
pub fn build_user_category(user_item: &BipartiteGraph, item_category: &BipartiteGraph) -> Result<UserCategoryBuild> {
    if user_item.left_namespace() != Namespace::User
        || user_item.right_namespace() != Namespace::Item
        || item_category.left_namespace() != Namespace::Item
        || item_category.right_namespace() != Namespace::Category
    {
        return Err(Error::Config(
            "build_user_category expects (user-item, item-category) graphs".into(),
        ));
    }
    if item_category.n_left() < user_item.n_right() {
        return Err(Error::Config(format!(
            "item-category graph covers {} items, user-item graph has {}",
            item_category.n_left(),
            user_item.n_right()
        )));
    }
    let mut uncategorized_items = Vec::new();
    for v in 0..user_item.n_right() as u32 {
        if !user_item.right_neighbors(v).is_empty() && item_category.left_neighbors(v).is_empty() {
            uncategorized_items.push(v);
        }
    }
    if !uncategorized_items.is_empty() {
        warn!(
            "{} interacted items have no category and are treated as category-less",
            uncategorized_items.len()
        );
    }
    let pairs = (0..user_item.n_left() as u32).flat_map(|u| {
        user_item.left_neighbors(u).iter().flat_map(move |&(v, w)| {
            item_category
                .left_neighbors(v)
                .iter()
                .map(move |&(c, _)| (u, c, w))
        })
    });
    let graph = BipartiteGraph::from_weighted_pairs(
        Namespace::User,
        Namespace::Category,
        user_item.n_left(),
        item_category.n_right(),
        pairs,
    );
    Ok(UserCategoryBuild {
        graph,
        uncategorized_items,
    })
}
