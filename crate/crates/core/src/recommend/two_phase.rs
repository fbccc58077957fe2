//! Cluster-level matching followed by block-level recommendation.

use rayon::prelude::*;

use super::base::BaseRecommender;
use super::matching::{match_item_clusters, ClusterBipartite};
use super::matrix::{pad, RatingMatrix, TopNList};
use crate::clustering::ClusterModel;
use crate::data::Interaction;
use crate::embedding::mix_seed;
use crate::scalar::Scalar;

/// Training data and both cluster models.
#[derive(Debug, Clone, Copy)]
pub struct TwoPhaseInput<'a> {
    pub train: &'a [Interaction],
    pub n_users: usize,
    pub n_items: usize,
    pub implicit: bool,
    pub users: &'a ClusterModel,
    pub items: &'a ClusterModel,
}

impl TwoPhaseInput<'_> {
    pub fn bipartite(&self) -> ClusterBipartite {
        ClusterBipartite::new(
            self.train,
            &self.users.assignments,
            &self.items.assignments,
            self.users.k,
            self.items.k,
        )
    }
}

/// The base recommender run once on the whole training matrix.
pub fn recommend_original<T: Scalar>(
    train: &[Interaction],
    n_users: usize,
    n_items: usize,
    implicit: bool,
    base: &BaseRecommender,
    n: usize,
    seed: u64,
) -> TopNList<T> {
    let full = RatingMatrix::<T>::full(train, n_users, n_items, implicit);
    let prepared = base.prepare_seeded(&full, seed);
    TopNList {
        lists: (0..n_users).into_par_iter().map(|u| prepared.recommend(u, n)).collect(),
    }
}

/// Recommends for every user. Each user cluster is matched to its heavy item
/// clusters; the base recommender then runs on the block of ratings between
/// the cluster's users and the matched items. Short lists are topped up from
/// the remaining item clusters in descending link weight, most popular within
/// the user cluster first. Cold users get global popularity.
/// Block `c` uses the seed `mix_seed(seed, c, 0)`.
pub fn two_phase<T: Scalar>(input: &TwoPhaseInput, base: &BaseRecommender, n: usize, seed: u64) -> TopNList<T> {
    let cb = input.bipartite();
    let user_members = input.users.members();
    let item_members = input.items.members();
    let global_count = {
        let full = RatingMatrix::<T>::full(input.train, input.n_users, input.n_items, input.implicit);
        (0..input.n_items).map(|i| full.col(i).len()).collect::<Vec<_>>()
    };

    let per_cluster: Vec<Vec<(usize, Vec<(u32, T)>)>> = (0..input.users.k)
        .into_par_iter()
        .map(|uc| {
            let members = &user_members[uc];
            if members.is_empty() {
                return Vec::new();
            }
            let users: Vec<u32> = members.iter().map(|&u| u as u32).collect();
            if Some(uc) == input.users.cold_cluster {
                let all: Vec<u32> = (0..input.n_items as u32).collect();
                let full = RatingMatrix::<T>::new(input.train, (0..input.n_users as u32).collect(), all, input.implicit);
                let prepared = BaseRecommender::Popular.prepare(&full);
                return members.iter().map(|&u| (u, prepared.recommend(u, n))).collect();
            }
            let matched = match_item_clusters(&cb, uc);
            let items: Vec<u32> = matched
                .iter()
                .flat_map(|&ic| item_members[ic].iter().map(|&i| i as u32))
                .collect();
            let block = RatingMatrix::<T>::new(input.train, users.clone(), items, input.implicit);
            let prepared = base.prepare_seeded(&block, mix_seed(seed, uc as u64, 0));

            // fallback order over items outside the block
            let wide = RatingMatrix::<T>::new(input.train, users, (0..input.n_items as u32).collect(), input.implicit);
            let mut fallback: Vec<usize> = Vec::new();
            for ic in cb.ranked_item_clusters(uc) {
                if matched.contains(&ic) {
                    continue;
                }
                let mut part = item_members[ic].clone();
                part.sort_by(|&a, &b| {
                    wide.col(b)
                        .len()
                        .cmp(&wide.col(a).len())
                        .then(global_count[b].cmp(&global_count[a]))
                        .then(a.cmp(&b))
                });
                fallback.extend(part);
            }

            members
                .iter()
                .enumerate()
                .map(|(lu, &u)| {
                    let mut recs = prepared.recommend(lu, n);
                    if recs.len() < n {
                        let mut list: Vec<(usize, T)> = recs.iter().map(|&(i, s)| (i as usize, s)).collect();
                        pad(&mut list, fallback.iter().copied(), &wide.seen_mask(lu), n);
                        recs = list.into_iter().map(|(i, s)| (i as u32, s)).collect();
                    }
                    (u, recs)
                })
                .collect()
        })
        .collect();

    let mut out = TopNList::empty(input.n_users);
    for (u, recs) in per_cluster.into_iter().flatten() {
        out.lists[u] = recs;
    }
    out
}
