//! User-cluster to item-cluster link weights and matching.

use crate::data::Interaction;

/// Interaction counts between user clusters and item clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterBipartite {
    n_user_clusters: usize,
    n_item_clusters: usize,
    weights: Vec<u64>,
}

impl ClusterBipartite {
    pub fn new(
        interactions: &[Interaction],
        user_clusters: &[usize],
        item_clusters: &[usize],
        n_user_clusters: usize,
        n_item_clusters: usize,
    ) -> Self {
        let mut weights = vec![0u64; n_user_clusters * n_item_clusters];
        for it in interactions {
            let u = user_clusters[it.user as usize];
            let i = item_clusters[it.item as usize];
            weights[u * n_item_clusters + i] += 1;
        }
        ClusterBipartite {
            n_user_clusters,
            n_item_clusters,
            weights,
        }
    }

    /// From an explicit `n_user_clusters × n_item_clusters` weight table.
    pub fn from_weights(weights: Vec<Vec<u64>>) -> Self {
        let n_item_clusters = weights.first().map_or(0, Vec::len);
        assert!(weights.iter().all(|r| r.len() == n_item_clusters));
        ClusterBipartite {
            n_user_clusters: weights.len(),
            n_item_clusters,
            weights: weights.concat(),
        }
    }

    pub fn n_user_clusters(&self) -> usize {
        self.n_user_clusters
    }

    pub fn n_item_clusters(&self) -> usize {
        self.n_item_clusters
    }

    pub fn weight(&self, user_cluster: usize, item_cluster: usize) -> u64 {
        self.weights[user_cluster * self.n_item_clusters + item_cluster]
    }

    pub fn row(&self, user_cluster: usize) -> &[u64] {
        let s = user_cluster * self.n_item_clusters;
        &self.weights[s..s + self.n_item_clusters]
    }

    pub fn total(&self) -> u64 {
        self.weights.iter().sum()
    }

    /// Total weight per item cluster across all user clusters.
    pub fn item_totals(&self) -> Vec<u64> {
        let mut t = vec![0u64; self.n_item_clusters];
        for u in 0..self.n_user_clusters {
            for (x, &w) in t.iter_mut().zip(self.row(u)) {
                *x += w;
            }
        }
        t
    }

    /// Item clusters ordered by descending weight to `user_cluster`, ties by id.
    pub fn ranked_item_clusters(&self, user_cluster: usize) -> Vec<usize> {
        let row = self.row(user_cluster);
        let mut order: Vec<usize> = (0..self.n_item_clusters).collect();
        order.sort_by(|&a, &b| row[b].cmp(&row[a]).then(a.cmp(&b)));
        order
    }
}

/// Splits the item clusters into two classes by 1-D k-means over their link
/// weights to `user_cluster` and returns the heavier class, ascending.
pub fn match_item_clusters(cb: &ClusterBipartite, user_cluster: usize) -> Vec<usize> {
    let w: Vec<f64> = cb.row(user_cluster).iter().map(|&x| x as f64).collect();
    let m = w.len();
    if m <= 1 {
        return (0..m).collect();
    }
    if w.iter().all(|&x| x == 0.0) {
        let totals = cb.item_totals();
        let best = (0..m).max_by(|&a, &b| totals[a].cmp(&totals[b]).then(b.cmp(&a))).unwrap();
        return vec![best];
    }
    let (mut lo, mut hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if lo == hi {
        return (0..m).collect();
    }
    let mut high = vec![false; m];
    for _ in 0..100 {
        let next: Vec<bool> = w.iter().map(|&x| (x - hi).abs() < (x - lo).abs()).collect();
        let mean = |flag: bool| {
            let (s, c) = w
                .iter()
                .zip(&next)
                .filter(|e| *e.1 == flag)
                .fold((0.0, 0usize), |(s, c), (x, _)| (s + x, c + 1));
            s / c as f64
        };
        let (nlo, nhi) = (mean(false), mean(true));
        let done = next == high;
        high = next;
        lo = nlo;
        hi = nhi;
        if done {
            break;
        }
    }
    (0..m).filter(|&i| high[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obvious_split() {
        let cb = ClusterBipartite::from_weights(vec![vec![50, 48, 2, 1]]);
        assert_eq!(match_item_clusters(&cb, 0), vec![0, 1]);
    }

    #[test]
    fn singleton_and_flat() {
        let cb = ClusterBipartite::from_weights(vec![vec![10]]);
        assert_eq!(match_item_clusters(&cb, 0), vec![0]);
        let cb = ClusterBipartite::from_weights(vec![vec![3, 3, 3]]);
        assert_eq!(match_item_clusters(&cb, 0), vec![0, 1, 2]);
    }

    #[test]
    fn zero_row_falls_back_to_most_popular() {
        let cb = ClusterBipartite::from_weights(vec![vec![0, 0, 0], vec![1, 9, 4]]);
        assert_eq!(match_item_clusters(&cb, 0), vec![1]);
    }

    #[test]
    fn two_dominant_clusters_among_eight() {
        let cb = ClusterBipartite::from_weights(vec![vec![3, 41, 5, 2, 6, 1, 37, 4]]);
        assert_eq!(match_item_clusters(&cb, 0), vec![1, 6]);
    }

    #[test]
    fn weights_conserve_interactions() {
        let data: Vec<Interaction> = (0..20)
            .map(|k| Interaction {
                user: k % 4,
                item: k % 5,
                rating: 1.0,
                timestamp: None,
            })
            .collect();
        let cb = ClusterBipartite::new(&data, &[0, 1, 0, 1], &[0, 0, 1, 2, 2], 2, 3);
        assert_eq!(cb.total(), 20);
        assert_eq!(cb.ranked_item_clusters(0).len(), 3);
    }
}
