//! Fixtures and brute-force reference implementations shared by the
//! integration tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use locrec::data::Interaction;
use locrec::graph::{build_user_category, item_category_graph, project, user_item_graph, ProjectionGraph, ProjectionOptions, Side};
use locrec::recommend::TopNList;
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub fn interaction(user: u32, item: u32, rating: f64) -> Interaction {
    Interaction {
        user,
        item,
        rating,
        timestamp: None,
    }
}

/// Random user-item interactions (duplicates allowed) and item-category
/// memberships. Some items may be left without a category.
#[derive(Debug, Clone)]
pub struct BipartiteFixture {
    pub n_users: usize,
    pub n_items: usize,
    pub n_categories: usize,
    pub interactions: Vec<Interaction>,
    pub memberships: Vec<(u32, u32)>,
}

impl BipartiteFixture {
    pub fn random<R: Rng>(rng: &mut R, max_users: usize, max_items: usize, max_categories: usize) -> Self {
        let n_users = rng.random_range(2..=max_users);
        let n_items = rng.random_range(2..=max_items);
        let n_categories = rng.random_range(1..=max_categories);
        let density = rng.random_range(0.05..0.4);
        let mut interactions = Vec::new();
        for u in 0..n_users as u32 {
            for i in 0..n_items as u32 {
                if rng.random_bool(density) {
                    interactions.push(interaction(u, i, rng.random_range(1..=5) as f64));
                    if rng.random_bool(0.05) {
                        interactions.push(interaction(u, i, 1.0));
                    }
                }
            }
        }
        if interactions.is_empty() {
            interactions.push(interaction(0, 0, 1.0));
        }
        let mut memberships = Vec::new();
        for i in 0..n_items as u32 {
            for c in 0..n_categories as u32 {
                if rng.random_bool(0.3) {
                    memberships.push((i, c));
                }
            }
        }
        BipartiteFixture {
            n_users,
            n_items,
            n_categories,
            interactions,
            memberships,
        }
    }

    pub fn project(&self, side: Side, opts: &ProjectionOptions) -> ProjectionGraph {
        let ui = user_item_graph(&self.interactions, self.n_users, self.n_items);
        let ic = item_category_graph(&self.memberships, self.n_items, self.n_categories);
        match side {
            Side::User => {
                let uc = build_user_category(&ui, &ic).unwrap().graph;
                project(&ui, &uc, Side::User, opts).unwrap()
            }
            Side::Item => project(&ui, &ic, Side::Item, opts).unwrap(),
        }
    }

    /// `(ck, ca, w)` for every pair `i < j` with `w > 0`, counted pair by pair
    /// over every candidate neighbor and category.
    pub fn brute_force_projection(&self, side: Side, opts: &ProjectionOptions) -> BTreeMap<(u32, u32), (u32, u32, u64)> {
        let mut consumed = vec![vec![false; self.n_items]; self.n_users];
        for it in &self.interactions {
            consumed[it.user as usize][it.item as usize] = true;
        }
        let mut in_category = vec![vec![false; self.n_categories]; self.n_items];
        for &(i, c) in &self.memberships {
            in_category[i as usize][c as usize] = true;
        }
        let (n, m) = match side {
            Side::User => (self.n_users, self.n_items),
            Side::Item => (self.n_items, self.n_users),
        };
        let linked = |a: usize, b: usize| match side {
            Side::User => consumed[a][b],
            Side::Item => consumed[b][a],
        };
        let has_category: Vec<Vec<bool>> = (0..n)
            .map(|a| {
                (0..self.n_categories)
                    .map(|c| match side {
                        Side::User => (0..self.n_items).any(|i| consumed[a][i] && in_category[i][c]),
                        Side::Item => in_category[a][c],
                    })
                    .collect()
            })
            .collect();
        let bare = |x: usize| has_category[x].iter().all(|h| !h);
        let mut out = BTreeMap::new();
        for a in 0..n {
            for b in a + 1..n {
                let ck = (0..m).filter(|&x| linked(a, x) && linked(b, x)).count() as u32;
                let ca = if opts.enrichment {
                    let shared = (0..self.n_categories)
                        .filter(|&c| has_category[a][c] && has_category[b][c])
                        .count() as u32;
                    if shared == 0 && opts.uncategorized_ca_floor && (bare(a) || bare(b)) {
                        1
                    } else {
                        shared
                    }
                } else {
                    1
                };
                let w = ck as u64 * ca as u64;
                if w > 0 {
                    out.insert((a as u32, b as u32), (ck, ca, w));
                }
            }
        }
        out
    }
}

pub fn projection_map(g: &ProjectionGraph) -> BTreeMap<(u32, u32), (u32, u32, u64)> {
    g.edges().iter().map(|e| ((e.i, e.j), (e.ck, e.ca, e.w))).collect()
}

/// Exact second-order transition distribution out of `cur` after arriving
/// from `prev`, from a dense weight matrix.
pub fn transition_table(weights: &[Vec<f64>], prev: usize, cur: usize, p: f64, q: f64) -> Vec<f64> {
    let n = weights.len();
    let mut out = vec![0.0; n];
    for x in 0..n {
        let w = weights[cur][x];
        if w == 0.0 {
            continue;
        }
        let bias = if x == prev {
            1.0 / p
        } else if weights[prev][x] > 0.0 {
            1.0
        } else {
            1.0 / q
        };
        out[x] = w * bias;
    }
    let total: f64 = out.iter().sum();
    out.iter().map(|v| v / total).collect()
}

/// Isotropic Gaussian blobs with centers evenly spaced on a circle whose
/// chord between neighbors is `separation`. Points are shuffled so blob
/// membership is not visible in the index order.
pub fn circle_blobs<R: Rng>(rng: &mut R, k: usize, sizes: &[usize], std: f64, separation: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let radius = if k == 1 {
        0.0
    } else {
        separation / (2.0 * (std::f64::consts::PI / k as f64).sin())
    };
    let normal = Normal::new(0.0, std).unwrap();
    let mut pts = Vec::new();
    for (b, &size) in sizes.iter().enumerate() {
        let angle = 2.0 * std::f64::consts::PI * b as f64 / k as f64;
        let (cx, cy) = (radius * angle.cos(), radius * angle.sin());
        for _ in 0..size {
            pts.push((vec![cx + normal.sample(rng), cy + normal.sample(rng)], b));
        }
    }
    for i in (1..pts.len()).rev() {
        let j = rng.random_range(0..=i);
        pts.swap(i, j);
    }
    pts.into_iter().unzip()
}

/// Fraction of points labeled correctly under the best one-to-one mapping
/// between predicted clusters and true labels.
pub fn matched_accuracy(truth: &[usize], predicted: &[usize]) -> f64 {
    let kt = truth.iter().max().map_or(0, |m| m + 1);
    let kp = predicted.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0usize; kp]; kt];
    for (&t, &p) in truth.iter().zip(predicted) {
        table[t][p] += 1;
    }
    if kt > kp {
        table = (0..kp).map(|p| (0..kt).map(|t| table[t][p]).collect()).collect();
    }
    max_assignment(&table) as f64 / truth.len() as f64
}

/// Maximum-weight matching of every row to a distinct column, by dynamic
/// programming over column subsets. Needs rows <= columns <= 20.
fn max_assignment(table: &[Vec<usize>]) -> usize {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    assert!(rows <= cols && cols <= 20, "cannot match {rows}x{cols}");
    let mut best = vec![None::<usize>; 1 << cols];
    best[0] = Some(0);
    let mut result = 0;
    for mask in 0..1usize << cols {
        let Some(v) = best[mask] else { continue };
        let r = mask.count_ones() as usize;
        if r == rows {
            result = result.max(v);
            continue;
        }
        for c in 0..cols {
            if mask & (1 << c) == 0 {
                let next = mask | (1 << c);
                let cand = v + table[r][c];
                if best[next].is_none_or(|b| b < cand) {
                    best[next] = Some(cand);
                }
            }
        }
    }
    result
}

/// Dense ratings with `None` for missing entries.
pub type Dense = Vec<Vec<Option<f64>>>;

pub fn random_block<R: Rng>(rng: &mut R, users: usize, items: usize, density: f64, implicit: bool) -> Dense {
    (0..users)
        .map(|_| {
            (0..items)
                .map(|_| {
                    rng.random_bool(density)
                        .then(|| if implicit { 1.0 } else { rng.random_range(1..=5) as f64 })
                })
                .collect()
        })
        .collect()
}

pub fn dense_interactions(r: &Dense) -> Vec<Interaction> {
    let mut out = Vec::new();
    for (u, row) in r.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            if let Some(x) = v {
                out.push(interaction(u as u32, i as u32, *x));
            }
        }
    }
    out
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na * nb > 0.0 {
        dot / (na * nb)
    } else {
        0.0
    }
}

/// Best-first by score, ties by ascending index.
fn rank(mut scored: Vec<(usize, f64)>, n: usize) -> Vec<(usize, f64)> {
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.truncate(n);
    scored
}

/// Item counts best-first, ties by ascending index.
fn popularity(r: &Dense) -> Vec<usize> {
    let m = r[0].len();
    let count = |i: usize| r.iter().filter(|row| row[i].is_some()).count();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| count(b).cmp(&count(a)).then(a.cmp(&b)));
    order
}

/// Tops `list` up to `n` with unseen popular items scored below its tail.
fn top_up(r: &Dense, u: usize, mut list: Vec<(usize, f64)>, n: usize) -> Vec<(usize, f64)> {
    let floor = list.last().map_or(0.0, |e| e.1);
    let mut step = 0.0;
    for i in popularity(r) {
        if list.len() >= n {
            break;
        }
        if r[u][i].is_some() || list.iter().any(|e| e.0 == i) {
            continue;
        }
        step += 1.0;
        list.push((i, floor - step));
    }
    list
}

fn centered_rows(r: &Dense, implicit: bool) -> Vec<Vec<f64>> {
    r.iter()
        .map(|row| {
            let rated: Vec<f64> = row.iter().flatten().copied().collect();
            let mean = if implicit || rated.is_empty() {
                0.0
            } else {
                rated.iter().sum::<f64>() / rated.len() as f64
            };
            row.iter().map(|v| v.map_or(0.0, |x| x - mean)).collect()
        })
        .collect()
}

/// User-based CF scores for every unseen item some neighbor rated.
pub fn ubcf_reference(r: &Dense, u: usize, n: usize, nn: usize, implicit: bool) -> Vec<(usize, f64)> {
    let c = centered_rows(r, implicit);
    let sims: Vec<(usize, f64)> = (0..r.len())
        .filter(|&v| v != u)
        .map(|v| (v, cosine(&c[u], &c[v])))
        .filter(|e| e.1 > 0.0)
        .collect();
    let neighbors = rank(sims, nn);
    let total: f64 = neighbors.iter().map(|e| e.1.abs()).sum();
    let mut scored = Vec::new();
    if total > 0.0 {
        for i in 0..r[0].len() {
            if r[u][i].is_some() || !neighbors.iter().any(|&(v, _)| r[v][i].is_some()) {
                continue;
            }
            let s: f64 = neighbors.iter().map(|&(v, s)| s * c[v][i]).sum();
            scored.push((i, s / total));
        }
    }
    top_up(r, u, rank(scored, n), n)
}

/// Item-based CF over the `k` most similar positively correlated items.
pub fn ibcf_reference(r: &Dense, u: usize, n: usize, k: usize, implicit: bool) -> Vec<(usize, f64)> {
    let m = r[0].len();
    let columns: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let rated: Vec<f64> = r.iter().filter_map(|row| row[i]).collect();
            let mean = if implicit || rated.is_empty() {
                0.0
            } else {
                rated.iter().sum::<f64>() / rated.len() as f64
            };
            r.iter().map(|row| row[i].map_or(0.0, |x| x - mean)).collect()
        })
        .collect();
    let mut scored = Vec::new();
    for i in 0..m {
        if r[u][i].is_some() {
            continue;
        }
        let sims: Vec<(usize, f64)> = (0..m)
            .filter(|&j| j != i)
            .map(|j| (j, cosine(&columns[i], &columns[j])))
            .filter(|e| e.1 > 0.0)
            .collect();
        let neighbors = rank(sims, k);
        let rated: Vec<(usize, f64)> = neighbors.into_iter().filter(|&(j, _)| r[u][j].is_some()).collect();
        if !rated.is_empty() {
            scored.push((i, rated.iter().map(|&(j, s)| s * r[u][j].unwrap()).sum()));
        }
    }
    top_up(r, u, rank(scored, n), n)
}

/// Asserts that two ranked lists agree: scores position by position, and
/// each listed item's score. Items may trade places only within a
/// floating-point tie.
pub fn assert_same_ranking(got: &[(u32, f64)], want: &[(usize, f64)], all_scores: &[(usize, f64)], tol: f64) {
    assert_eq!(got.len(), want.len(), "list lengths differ: {got:?} vs {want:?}");
    for (k, (g, w)) in got.iter().zip(want).enumerate() {
        assert!((g.1 - w.1).abs() <= tol, "score at rank {k}: {} vs {}", g.1, w.1);
        if g.0 as usize != w.0 {
            let alt = all_scores.iter().find(|e| e.0 == g.0 as usize);
            assert!(alt.is_some_and(|e| (e.1 - g.1).abs() <= tol), "item {} at rank {k} not justified", g.0);
        }
    }
    let distinct: BTreeSet<u32> = got.iter().map(|e| e.0).collect();
    assert_eq!(distinct.len(), got.len(), "duplicate items in {got:?}");
}

/// Per-definition metrics over users with a non-empty test set.
pub fn metrics_reference(lists: &[Vec<u32>], test: &[Vec<u32>], n: usize) -> Option<[f64; 4]> {
    let mut sums = [0.0; 4];
    let mut users = 0usize;
    for (u, t) in test.iter().enumerate() {
        if t.is_empty() {
            continue;
        }
        users += 1;
        let list: &[u32] = lists.get(u).map_or(&[], |l| &l[..l.len().min(n)]);
        let mut seen = BTreeSet::new();
        let mut hits = 0usize;
        let mut reciprocal = 0.0;
        for (pos, item) in list.iter().enumerate() {
            if seen.insert(*item) && t.contains(item) {
                hits += 1;
                reciprocal += 1.0 / (pos + 1) as f64;
            }
        }
        sums[0] += hits as f64 / n as f64;
        sums[1] += hits as f64 / t.len() as f64;
        sums[2] += if hits > 0 { 1.0 } else { 0.0 };
        sums[3] += reciprocal;
    }
    (users > 0).then(|| sums.map(|s| s / users as f64))
}

pub fn lists_of(items: &[Vec<u32>]) -> TopNList<f64> {
    TopNList {
        lists: items
            .iter()
            .map(|l| l.iter().enumerate().map(|(k, &i)| (i, -(k as f64))).collect())
            .collect(),
    }
}

/// Five nodes: a weighted triangle-rich core and a pendant node.
pub fn walk_law_fixture() -> (locrec::embedding::WalkGraph, Vec<Vec<f64>>) {
    let edges = [(0u32, 1u32, 1.0), (0, 2, 2.0), (1, 2, 1.0), (1, 3, 3.0), (2, 3, 1.0), (3, 4, 2.0)];
    let mut dense = vec![vec![0.0; 5]; 5];
    for &(a, b, w) in &edges {
        dense[a as usize][b as usize] = w;
        dense[b as usize][a as usize] = w;
    }
    (locrec::embedding::WalkGraph::from_edges(5, edges), dense)
}

/// Largest standardized deviation between observed and exact second-order
/// transition counts over `steps` draws, one cell per (prev, cur, next).
/// Returns infinity if a zero-probability move is observed.
pub fn walk_law_max_z(p: f64, q: f64, alias_budget: usize, steps: usize, seed: u64) -> (f64, bool) {
    use rand::SeedableRng;
    let (graph, dense) = walk_law_fixture();
    let sampler = locrec::embedding::WalkSampler::new(&graph, p, q, alias_budget);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = dense.len();
    let mut counts = vec![vec![vec![0u64; n]; n]; n];
    let mut done = 0;
    while done < steps {
        let start = rng.random_range(0..n as u32);
        let walk = sampler.walk(start, 1001.min(steps - done + 2), &mut rng);
        for w in walk.windows(3) {
            counts[w[0] as usize][w[1] as usize][w[2] as usize] += 1;
            done += 1;
        }
    }
    let mut worst: f64 = 0.0;
    for prev in 0..n {
        for cur in 0..n {
            let total: u64 = counts[prev][cur].iter().sum();
            if total == 0 {
                continue;
            }
            let exact = transition_table(&dense, prev, cur, p, q);
            for next in 0..n {
                let observed = counts[prev][cur][next] as f64;
                let mean = total as f64 * exact[next];
                let sd = (total as f64 * exact[next] * (1.0 - exact[next])).sqrt();
                let z = if sd > 0.0 {
                    (observed - mean).abs() / sd
                } else if observed == mean {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(z);
            }
        }
    }
    (worst, sampler.uses_edge_alias())
}

/// Relative error `|a - f| / (|a| + |f|)` over the full parameter vector
/// between the analytic loss gradient and central differences, for one
/// random configuration.
pub fn sgns_gradient_error<R: Rng>(rng: &mut R, step: f64) -> f64 {
    use locrec::embedding::{sgns_gradient, sgns_loss};
    let dim = rng.random_range(2..=16);
    let k = rng.random_range(1..=6);
    let normal = Normal::new(0.0, 0.6).unwrap();
    let mut draw = |len: usize| (0..len).map(|_| normal.sample(rng)).collect::<Vec<f64>>();
    let center = draw(dim);
    let context = draw(dim);
    let negatives: Vec<Vec<f64>> = (0..k).map(|_| draw(dim)).collect();

    let mut flat: Vec<f64> = center.iter().chain(&context).copied().collect();
    for n in &negatives {
        flat.extend(n);
    }
    let loss = |x: &[f64]| {
        let (c, rest) = x.split_at(dim);
        let (o, rest) = rest.split_at(dim);
        let negs: Vec<&[f64]> = rest.chunks(dim).collect();
        sgns_loss(c, o, &negs)
    };
    let refs: Vec<&[f64]> = negatives.iter().map(Vec::as_slice).collect();
    let g = sgns_gradient(&center, &context, &refs);
    let mut analytic: Vec<f64> = g.center.iter().chain(&g.context).copied().collect();
    for n in &g.negatives {
        analytic.extend(n);
    }
    let mut numeric = Vec::with_capacity(flat.len());
    for idx in 0..flat.len() {
        let mut up = flat.clone();
        up[idx] += step;
        let mut down = flat.clone();
        down[idx] -= step;
        numeric.push((loss(&up) - loss(&down)) / (2.0 * step));
    }
    let diff: f64 = analytic.iter().zip(&numeric).map(|(a, f)| (a - f).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt() + numeric.iter().map(|f| f * f).sum::<f64>().sqrt();
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Unit basis vector `k` in `dim` dimensions, scaled.
fn axis(dim: usize, k: usize, scale: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[k] = scale;
    v
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// A dense cluster of six mutually equidistant points (`b` = 0, `d` = 1)
/// and a sparse cluster `a`, `c`, `e` attached next to `d`. All squared
/// distances are integers, so density ties are exact.
///
/// With one nearest distance per point, every dense point has density 5
/// and every sparse point density 1. `d` is nearer to `a` than `a`'s own
/// cluster mates are, and `a` has a larger local scale than `b`.
pub struct MultiScale {
    pub points: Vec<Vec<f64>>,
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
}

pub fn multi_scale_fixture() -> MultiScale {
    const DIM: usize = 11;
    let mut points: Vec<Vec<f64>> = (0..6).map(|k| axis(DIM, k, 1.0)).collect();
    let a = [6, 7, 8].iter().fold(axis(DIM, 1, 1.0), |acc, &k| add(&acc, &axis(DIM, k, 1.0)));
    let c = add(&a, &axis(DIM, 9, 3.0));
    let e = add(&a, &axis(DIM, 10, 3.0));
    points.extend([a, c, e]);
    MultiScale {
        points,
        a: 6,
        b: 0,
        c: 7,
        d: 1,
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Self-tuning similarity `exp(-d² / (2 σ_i σ_j))` with `σ_i` the distance
/// from `i` to its `t`-th nearest neighbor.
pub fn stsc_similarity(points: &[Vec<f64>], t: usize) -> Vec<Vec<f64>> {
    let n = points.len();
    let sigma: Vec<f64> = (0..n)
        .map(|i| {
            let mut d: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| euclid(&points[i], &points[j])).collect();
            d.sort_by(|x, y| x.partial_cmp(y).unwrap());
            d[t - 1]
        })
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (-euclid(&points[i], &points[j]).powi(2) / (2.0 * sigma[i] * sigma[j])).exp())
                .collect()
        })
        .collect()
}

/// Density-gated similarity evaluated straight from its definition, pair by
/// pair, as a dense matrix.
pub fn dnn_reference(points: &[Vec<f64>], p: usize, theta: Option<f64>, k: usize) -> (Vec<usize>, Vec<Vec<f64>>) {
    let n = points.len();
    let d = |i: usize, j: usize| euclid(&points[i], &points[j]);
    let sorted_from = |i: usize| {
        let mut v: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (d(i, j), j)).collect();
        v.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
        v
    };
    let rho: Vec<usize> = (0..n)
        .map(|i| {
            let s = sorted_from(i);
            let cut = s[p.min(n - 1) - 1].0;
            (0..n).filter(|&j| j != i && d(i, j) <= cut).count()
        })
        .collect();
    let mean = rho.iter().sum::<usize>() as f64 / n as f64;
    let std = (rho.iter().map(|&r| (r as f64 - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let theta = theta.unwrap_or(0.5 * std);
    let t_sets: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let nbrs: Vec<usize> = sorted_from(i).into_iter().take(k).map(|e| e.1).collect();
            let gate = nbrs
                .iter()
                .filter(|&&j| (rho[i] as f64 - rho[j] as f64).abs() > theta)
                .map(|&j| d(j, i))
                .fold(f64::INFINITY, f64::min);
            nbrs.into_iter().filter(|&j| d(i, j) < gate).collect()
        })
        .collect();
    let raw: Vec<f64> = t_sets
        .iter()
        .enumerate()
        .map(|(i, t)| if t.is_empty() { 0.0 } else { t.iter().map(|&j| d(i, j)).sum::<f64>() / t.len() as f64 })
        .collect();
    let floor = raw.iter().copied().filter(|&s| s > 0.0).fold(f64::INFINITY, f64::min);
    let sigma: Vec<f64> = raw.iter().map(|&s| if s > 0.0 { s } else { floor }).collect();
    let mut s = vec![vec![0.0; n]; n];
    for i in 0..n {
        s[i][i] = 1.0;
        for &j in &t_sets[i] {
            let m = sigma[i].max(sigma[j]);
            let v = (-d(i, j).powi(2) / (2.0 * m * m)).exp();
            s[i][j] = f64::max(s[i][j], v);
            s[j][i] = f64::max(s[j][i], v);
        }
    }
    (rho, s)
}
