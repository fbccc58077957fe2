//! Base recommenders operating on one rating block.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{pad, top_n, RatingMatrix};
use crate::scalar::Scalar;

/// Which recommender runs inside a block, with its knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BaseRecommender {
    Ubcf {
        #[serde(default = "default_user_neighbors")]
        neighbors: usize,
    },
    Ibcf {
        #[serde(default = "default_item_neighbors")]
        neighbors: usize,
    },
    Nmf {
        #[serde(default = "default_rank")]
        rank: usize,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
    },
    Popular,
}

fn default_user_neighbors() -> usize {
    25
}
fn default_item_neighbors() -> usize {
    30
}
fn default_rank() -> usize {
    40
}
fn default_max_iter() -> usize {
    200
}

impl BaseRecommender {
    pub fn ubcf() -> Self {
        BaseRecommender::Ubcf { neighbors: 25 }
    }

    pub fn ibcf() -> Self {
        BaseRecommender::Ibcf { neighbors: 30 }
    }

    pub fn nmf() -> Self {
        BaseRecommender::Nmf { rank: 40, max_iter: 200 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaseRecommender::Ubcf { .. } => "ubcf",
            BaseRecommender::Ibcf { .. } => "ibcf",
            BaseRecommender::Nmf { .. } => "nmf",
            BaseRecommender::Popular => "popular",
        }
    }

    pub fn prepare<'a, T: Scalar>(&self, block: &'a RatingMatrix<T>) -> Prepared<'a, T> {
        self.prepare_seeded(block, 0)
    }

    /// Fits whatever the recommender precomputes for the block. Only NMF
    /// draws random numbers.
    pub fn prepare_seeded<'a, T: Scalar>(&self, block: &'a RatingMatrix<T>, seed: u64) -> Prepared<'a, T> {
        let kind = match *self {
            BaseRecommender::Ubcf { neighbors } => Kind::Ubcf(UserModel::new(block), neighbors),
            BaseRecommender::Ibcf { neighbors } => Kind::Ibcf(ItemModel::new(block, neighbors)),
            BaseRecommender::Nmf { rank, max_iter } => Kind::Nmf(nmf_factorize(block, rank, max_iter, seed)),
            BaseRecommender::Popular => Kind::Popular,
        };
        Prepared {
            block,
            popular: block.popularity_order(),
            kind,
        }
    }
}

enum Kind<T> {
    Ubcf(UserModel<T>, usize),
    Ibcf(ItemModel<T>),
    Nmf(NmfFactors<T>),
    Popular,
}

pub struct Prepared<'a, T> {
    block: &'a RatingMatrix<T>,
    popular: Vec<usize>,
    kind: Kind<T>,
}

impl<T: Scalar> Prepared<'_, T> {
    /// Up to `n` unseen items for local user `u` as `(global item, score)`,
    /// topped up from block popularity when the model scores too few.
    pub fn recommend(&self, u: usize, n: usize) -> Vec<(u32, T)> {
        let seen = self.block.seen_mask(u);
        let mut list = match &self.kind {
            Kind::Ubcf(m, nn) => top_n(m.scores(self.block, u, *nn, &seen), n),
            Kind::Ibcf(m) => top_n(m.scores(self.block, u, &seen), n),
            Kind::Nmf(f) => top_n(f.scores(u, &seen), n),
            Kind::Popular => top_n(popular_scores(self.block, &seen), n),
        };
        pad(&mut list, self.popular.iter().copied(), &seen, n);
        list.into_iter()
            .map(|(i, s)| (self.block.item_id(i), s))
            .collect()
    }
}

fn popular_scores<T: Scalar>(block: &RatingMatrix<T>, seen: &[bool]) -> Vec<(usize, T)> {
    (0..block.n_items())
        .filter(|&i| !seen[i] && !block.col(i).is_empty())
        .map(|i| (i, T::of_usize(block.col(i).len())))
        .collect()
}

/// Items ordered by count in the block, unseen only.
pub fn recommend_popular<T: Scalar>(block: &RatingMatrix<T>, u: usize, n: usize) -> Vec<(u32, T)> {
    BaseRecommender::Popular.prepare(block).recommend(u, n)
}

pub fn recommend_ubcf<T: Scalar>(block: &RatingMatrix<T>, u: usize, n: usize, neighbors: usize) -> Vec<(u32, T)> {
    BaseRecommender::Ubcf { neighbors }.prepare(block).recommend(u, n)
}

pub fn recommend_ibcf<T: Scalar>(block: &RatingMatrix<T>, u: usize, n: usize, neighbors: usize) -> Vec<(u32, T)> {
    BaseRecommender::Ibcf { neighbors }.prepare(block).recommend(u, n)
}

pub fn recommend_nmf<T: Scalar>(block: &RatingMatrix<T>, u: usize, n: usize, rank: usize) -> Vec<(u32, T)> {
    BaseRecommender::Nmf { rank, max_iter: 200 }
    .prepare(block)
    .recommend(u, n)
}

/// Mean-centered rows (raw for implicit data) and their norms.
struct UserModel<T> {
    centered: Vec<Vec<(u32, T)>>,
    means: Vec<T>,
    norms: Vec<T>,
}

impl<T: Scalar> UserModel<T> {
    fn new(block: &RatingMatrix<T>) -> Self {
        let mut centered = Vec::with_capacity(block.n_users());
        let mut means = Vec::with_capacity(block.n_users());
        let mut norms = Vec::with_capacity(block.n_users());
        for u in 0..block.n_users() {
            let row = block.row(u);
            let mean = if block.implicit() || row.is_empty() {
                T::zero()
            } else {
                row.iter().map(|e| e.1).sum::<T>() / T::of_usize(row.len())
            };
            let c: Vec<(u32, T)> = row.iter().map(|&(i, r)| (i, r - mean)).collect();
            norms.push(c.iter().map(|e| e.1 * e.1).sum::<T>().sqrt());
            centered.push(c);
            means.push(mean);
        }
        UserModel { centered, means, norms }
    }

    /// Cosine similarity of `u` to every user sharing an item with it.
    fn similarities(&self, block: &RatingMatrix<T>, u: usize) -> Vec<(usize, T)> {
        let mut acc = vec![T::zero(); block.n_users()];
        let mut touched = Vec::new();
        for &(i, cu) in &self.centered[u] {
            for &(v, r) in block.col(i as usize) {
                let v = v as usize;
                if v == u {
                    continue;
                }
                if acc[v] == T::zero() {
                    touched.push(v);
                }
                acc[v] += cu * (r - self.means[v]);
            }
        }
        touched.sort_unstable();
        touched.dedup();
        touched
            .into_iter()
            .filter_map(|v| {
                let d = self.norms[u] * self.norms[v];
                (d > T::zero()).then(|| (v, acc[v] / d))
            })
            .collect()
    }

    fn scores(&self, block: &RatingMatrix<T>, u: usize, nn: usize, seen: &[bool]) -> Vec<(usize, T)> {
        let mut sims: Vec<(usize, T)> = self
            .similarities(block, u)
            .into_iter()
            .filter(|e| e.1 > T::zero())
            .collect();
        sims = top_n(sims, nn);
        if sims.is_empty() {
            return Vec::new();
        }
        let total: T = sims.iter().map(|e| e.1.abs()).sum();
        let mut acc = vec![T::zero(); block.n_items()];
        let mut hit = vec![false; block.n_items()];
        for &(v, s) in &sims {
            for &(i, c) in &self.centered[v] {
                acc[i as usize] += s * c;
                hit[i as usize] = true;
            }
        }
        (0..block.n_items())
            .filter(|&i| hit[i] && !seen[i])
            .map(|i| (i, acc[i] / total))
            .collect()
    }
}

/// Each item's most similar items by cosine over mean-centered columns.
struct ItemModel<T> {
    neighbors: Vec<Vec<(u32, T)>>,
}

impl<T: Scalar> ItemModel<T> {
    fn new(block: &RatingMatrix<T>, k: usize) -> Self {
        let m = block.n_items();
        let means: Vec<T> = (0..m)
            .map(|i| {
                let c = block.col(i);
                if block.implicit() || c.is_empty() {
                    T::zero()
                } else {
                    c.iter().map(|e| e.1).sum::<T>() / T::of_usize(c.len())
                }
            })
            .collect();
        let norms: Vec<T> = (0..m)
            .map(|i| {
                block
                    .col(i)
                    .iter()
                    .map(|e| (e.1 - means[i]) * (e.1 - means[i]))
                    .sum::<T>()
                    .sqrt()
            })
            .collect();
        let mut gram = vec![T::zero(); m * m];
        for u in 0..block.n_users() {
            let row = block.row(u);
            for (a, &(i, ri)) in row.iter().enumerate() {
                let ci = ri - means[i as usize];
                let base = i as usize * m;
                for &(j, rj) in &row[a + 1..] {
                    gram[base + j as usize] += ci * (rj - means[j as usize]);
                }
            }
        }
        let neighbors = (0..m)
            .map(|i| {
                let sims: Vec<(usize, T)> = (0..m)
                    .filter(|&j| j != i)
                    .filter_map(|j| {
                        let g = if i < j { gram[i * m + j] } else { gram[j * m + i] };
                        let d = norms[i] * norms[j];
                        let s = if d > T::zero() { g / d } else { T::zero() };
                        (s > T::zero()).then_some((j, s))
                    })
                    .collect();
                top_n(sims, k).into_iter().map(|(j, s)| (j as u32, s)).collect()
            })
            .collect();
        ItemModel { neighbors }
    }

    fn scores(&self, block: &RatingMatrix<T>, u: usize, seen: &[bool]) -> Vec<(usize, T)> {
        let mut rating = vec![None; block.n_items()];
        for &(i, r) in block.row(u) {
            rating[i as usize] = Some(r);
        }
        (0..block.n_items())
            .filter(|&i| !seen[i])
            .filter_map(|i| {
                let mut s = T::zero();
                let mut any = false;
                for &(j, sim) in &self.neighbors[i] {
                    if let Some(r) = rating[j as usize] {
                        s += sim * r;
                        any = true;
                    }
                }
                any.then_some((i, s))
            })
            .collect()
    }
}

/// Factors of a masked non-negative factorization R ≈ W·H.
#[derive(Debug, Clone)]
pub struct NmfFactors<T> {
    pub rank: usize,
    /// Row-major `n_users × rank`.
    pub w: Vec<T>,
    /// Row-major `rank × n_items`.
    pub h: Vec<T>,
    /// Squared error over observed entries, at initialization and after every
    /// iteration.
    pub objective: Vec<T>,
    n_items: usize,
}

impl<T: Scalar> NmfFactors<T> {
    pub fn predict(&self, u: usize, i: usize) -> T {
        let mut s = T::zero();
        for a in 0..self.rank {
            s += self.w[u * self.rank + a] * self.h[a * self.n_items + i];
        }
        s
    }

    fn scores(&self, u: usize, seen: &[bool]) -> Vec<(usize, T)> {
        (0..self.n_items)
            .filter(|&i| !seen[i])
            .map(|i| (i, self.predict(u, i)))
            .collect()
    }
}

fn masked_objective<T: Scalar>(block: &RatingMatrix<T>, f: &NmfFactors<T>) -> T {
    let mut e = T::zero();
    for u in 0..block.n_users() {
        for &(i, r) in block.row(u) {
            let d = r - f.predict(u, i as usize);
            e += d * d;
        }
    }
    e
}

/// Multiplicative updates restricted to observed entries. `rank` is clamped
/// to the block's smaller dimension. Stops early once the relative objective
/// change falls below 1e-9.
pub fn nmf_factorize<T: Scalar>(block: &RatingMatrix<T>, rank: usize, max_iter: usize, seed: u64) -> NmfFactors<T> {
    let (nu, ni) = (block.n_users(), block.n_items());
    let rank = rank.min(nu).min(ni).max(1);
    let nnz = block.nnz();
    let mean = if nnz == 0 {
        1.0
    } else {
        (0..nu).flat_map(|u| block.row(u).iter().map(|e| e.1.to_f64_lossy())).sum::<f64>() / nnz as f64
    };
    let scale = (mean.max(1e-12) / rank as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut init = |len: usize| -> Vec<T> { (0..len).map(|_| T::of(scale * rng.random_range(0.5..1.5))).collect() };
    let w = init(nu * rank);
    let h = init(rank * ni);
    let mut f = NmfFactors {
        rank,
        w,
        h,
        objective: Vec::new(),
        n_items: ni,
    };
    let eps = T::of(1e-12);
    f.objective.push(masked_objective(block, &f));
    let mut converged = nnz == 0;
    let mut pred: Vec<Vec<T>> = (0..nu).map(|u| vec![T::zero(); block.row(u).len()]).collect();
    for _ in 0..max_iter {
        if converged {
            break;
        }
        for u in 0..nu {
            for (p, &(i, _)) in pred[u].iter_mut().zip(block.row(u)) {
                *p = f.predict(u, i as usize);
            }
        }
        let mut num = vec![T::zero(); rank * ni];
        let mut den = vec![T::zero(); rank * ni];
        for u in 0..nu {
            let wu = &f.w[u * rank..(u + 1) * rank];
            for (&(i, r), &p) in block.row(u).iter().zip(&pred[u]) {
                for a in 0..rank {
                    num[a * ni + i as usize] += wu[a] * r;
                    den[a * ni + i as usize] += wu[a] * p;
                }
            }
        }
        for ((h, n), d) in f.h.iter_mut().zip(&num).zip(&den) {
            *h = *h * *n / (*d + eps);
        }

        for u in 0..nu {
            for (p, &(i, _)) in pred[u].iter_mut().zip(block.row(u)) {
                *p = f.predict(u, i as usize);
            }
        }
        for u in 0..nu {
            let mut num = vec![T::zero(); rank];
            let mut den = vec![T::zero(); rank];
            for (&(i, r), &p) in block.row(u).iter().zip(&pred[u]) {
                for a in 0..rank {
                    let ha = f.h[a * ni + i as usize];
                    num[a] += r * ha;
                    den[a] += p * ha;
                }
            }
            for a in 0..rank {
                let x = &mut f.w[u * rank + a];
                *x = *x * num[a] / (den[a] + eps);
            }
        }
        let obj = masked_objective(block, &f);
        let prev = *f.objective.last().unwrap();
        f.objective.push(obj);
        if (prev - obj).abs() <= T::of(1e-9) * prev.max(T::min_positive_value()) {
            converged = true;
        }
    }
    if !converged {
        log::warn!("nmf stopped after {max_iter} iterations without converging");
    }
    f
}
