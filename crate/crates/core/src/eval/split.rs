//! Seeded k-fold partition of interactions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Interaction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Test fold per interaction, aligned with the input slice. `None` marks
    /// interactions that always stay in training (their user has only one).
    pub labels: Vec<Option<usize>>,
}

fn canonical_key(it: &Interaction) -> (u32, u32, Option<i64>, u64) {
    (it.user, it.item, it.timestamp, it.rating.to_bits())
}

/// Shuffles users and each user's interactions, then deals interactions to
/// folds round-robin with one counter shared across users. Consecutive
/// interactions of a user land in consecutive folds, so a user with at least
/// two interactions always keeps one in training. The result depends only on
/// the multiset of interactions and the seed, not on input order.
pub fn split(interactions: &[Interaction], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let mut order: Vec<usize> = (0..interactions.len()).collect();
    order.sort_by_key(|&x| (canonical_key(&interactions[x]), x));
    let mut by_user: Vec<(u32, Vec<usize>)> = Vec::new();
    for x in order {
        let u = interactions[x].user;
        match by_user.last_mut() {
            Some((lu, v)) if *lu == u => v.push(x),
            _ => by_user.push((u, vec![x])),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    by_user.shuffle(&mut rng);
    let mut labels = vec![None; interactions.len()];
    let mut counter = 0usize;
    for (_, mut xs) in by_user {
        if xs.len() < 2 {
            continue;
        }
        xs.shuffle(&mut rng);
        for x in xs {
            labels[x] = Some(counter % k);
            counter += 1;
        }
    }
    Ok(FoldPlan { k, seed, labels })
}

impl FoldPlan {
    pub fn train(&self, interactions: &[Interaction], fold: usize) -> Vec<Interaction> {
        interactions
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| **l != Some(fold))
            .map(|(it, _)| *it)
            .collect()
    }

    /// Held-out items per user, minus anything the user also has in training,
    /// sorted and deduplicated.
    pub fn test_sets(&self, interactions: &[Interaction], fold: usize, n_users: usize) -> Vec<Vec<u32>> {
        let mut train: Vec<Vec<u32>> = vec![Vec::new(); n_users];
        let mut test: Vec<Vec<u32>> = vec![Vec::new(); n_users];
        for (it, l) in interactions.iter().zip(&self.labels) {
            if *l == Some(fold) {
                test[it.user as usize].push(it.item);
            } else {
                train[it.user as usize].push(it.item);
            }
        }
        for (t, tr) in test.iter_mut().zip(train.iter_mut()) {
            tr.sort_unstable();
            t.sort_unstable();
            t.dedup();
            t.retain(|i| tr.binary_search(i).is_err());
        }
        test
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for l in self.labels.iter().flatten() {
            s[*l] += 1;
        }
        s
    }

    /// One `fold` label per line, `-` for always-training rows, aligned with
    /// the interaction order.
    pub fn write<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        for l in &self.labels {
            match l {
                Some(f) => writeln!(out, "{f}")?,
                None => writeln!(out, "-")?,
            }
        }
        Ok(())
    }
}
