//! Skip-gram with negative sampling over walk corpora.

use std::cell::UnsafeCell;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::alias::AliasTable;
use super::walk::mix_seed;
use crate::error::{Error, Result};
use crate::graph::Namespace;
use crate::scalar::{axpy, dot, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives_per_positive: usize,
    pub epochs: usize,
    pub initial_learning_rate: f64,
    pub seed: u64,
    /// Worker count. One worker is bitwise reproducible; more workers update
    /// the shared tables without locks.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            window: 10,
            negatives_per_positive: 5,
            epochs: 5,
            initial_learning_rate: 0.025,
            seed: 0,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.window == 0 || self.negatives_per_positive == 0 || self.epochs == 0 {
            return Err(Error::Config("dim, window, negatives and epochs must be positive".into()));
        }
        if !(self.initial_learning_rate > 0.0) {
            return Err(Error::Config("initial_learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Dense per-node vectors, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T> {
    namespace: Namespace,
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> EmbeddingMatrix<T> {
    pub fn zeros(namespace: Namespace, n: usize, dim: usize) -> Self {
        EmbeddingMatrix {
            namespace,
            dim,
            data: vec![T::zero(); n * dim],
        }
    }

    pub fn from_rows(namespace: Namespace, rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Config("embedding rows differ in length".into()));
        }
        Ok(EmbeddingMatrix {
            namespace,
            dim,
            data: rows.concat(),
        })
    }

    pub fn namespace(&self) -> Namespace {
        self.namespace
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn is_zero_row(&self, i: usize) -> bool {
        self.row(i).iter().all(|x| *x == T::zero())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> EmbeddingMatrix<U> {
        EmbeddingMatrix {
            namespace: self.namespace,
            dim: self.dim,
            data: self.data.iter().map(|x| U::of(x.to_f64_lossy())).collect(),
        }
    }

    /// word2vec text layout: `n d`, then `node_index v1 .. vd` per row.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.n_nodes(), self.dim)?;
        for (i, row) in self.rows().enumerate() {
            write!(out, "{i}")?;
            for x in row {
                write!(out, " {x}")?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(namespace: Namespace, input: R, origin: &str) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(origin, 1, "missing `n d` header"))?
            .map_err(|e| Error::io(origin, e))?;
        let mut hf = header.split_whitespace().map(str::parse::<usize>);
        let (n, dim) = match (hf.next(), hf.next(), hf.next()) {
            (Some(Ok(n)), Some(Ok(d)), None) => (n, d),
            _ => return Err(Error::parse(origin, 1, "header must be `n d`")),
        };
        let mut m = EmbeddingMatrix::zeros(namespace, n, dim);
        let mut seen = vec![false; n];
        for (k, line) in lines.enumerate() {
            let lineno = k + 2;
            let line = line.map_err(|e| Error::io(origin, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut f = line.split_whitespace();
            let idx: usize = f
                .next()
                .and_then(|s| s.parse().ok())
                .filter(|&i| i < n)
                .ok_or_else(|| Error::parse(origin, lineno, "bad node index"))?;
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::parse(origin, lineno, format!("node {idx} listed twice")));
            }
            let row = m.row_mut(idx);
            let mut count = 0;
            for (slot, tok) in row.iter_mut().zip(f.by_ref()) {
                *slot = tok
                    .parse::<T>()
                    .map_err(|_| Error::parse(origin, lineno, format!("bad value `{tok}`")))?;
                count += 1;
            }
            if count != dim || f.next().is_some() {
                return Err(Error::parse(origin, lineno, format!("expected {dim} values")));
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::parse(origin, 0, format!("node {missing} has no vector")));
        }
        Ok(m)
    }
}

#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// `-log sigmoid(x)`, stable for large |x|.
#[inline]
fn neg_log_sigmoid<T: Scalar>(x: T) -> T {
    let zero = T::zero();
    (-x).max(zero) + (-(x.abs())).exp().ln_1p()
}

/// `-log σ(u·v) - Σ_k log σ(-u·v_k)`
pub fn sgns_loss<T: Scalar>(center: &[T], context: &[T], negatives: &[&[T]]) -> T {
    let mut loss = neg_log_sigmoid(dot(center, context));
    for n in negatives {
        loss += neg_log_sigmoid(-dot(center, n));
    }
    loss
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient<T> {
    pub center: Vec<T>,
    pub context: Vec<T>,
    pub negatives: Vec<Vec<T>>,
}

/// Analytic gradient of [`sgns_loss`] with respect to every argument.
pub fn sgns_gradient<T: Scalar>(center: &[T], context: &[T], negatives: &[&[T]]) -> SgnsGradient<T> {
    // d/dx -log σ(x) = σ(x) - 1 ; d/dx -log σ(-x) = σ(x)
    let g_pos = sigmoid(dot(center, context)) - T::one();
    let mut g_center: Vec<T> = context.iter().map(|&c| g_pos * c).collect();
    let g_context: Vec<T> = center.iter().map(|&u| g_pos * u).collect();
    let mut g_negs = Vec::with_capacity(negatives.len());
    for n in negatives {
        let g = sigmoid(dot(center, n));
        axpy(g, n, &mut g_center);
        g_negs.push(center.iter().map(|&u| g * u).collect());
    }
    SgnsGradient {
        center: g_center,
        context: g_context,
        negatives: g_negs,
    }
}

/// One SGD step on the loss of a single (center, context) pair.
///
/// `outputs` is the whole output table. Output rows are updated in place in
/// target order; the center update is accumulated in `scratch` from the
/// pre-update output rows and applied last, so with distinct targets this is
/// exactly `theta -= lr * grad` at the current point.
pub fn sgd_step<T: Scalar>(
    center: &mut [T],
    outputs: &mut [T],
    positive: u32,
    negatives: &[u32],
    lr: T,
    scratch: &mut [T],
) {
    let dim = center.len();
    scratch.iter_mut().for_each(|x| *x = T::zero());
    let mut update = |target: u32, label: T| {
        let row = &mut outputs[target as usize * dim..(target as usize + 1) * dim];
        let g = (label - sigmoid(dot(center, row))) * lr;
        axpy(g, row, scratch);
        axpy(g, center, row);
    };
    update(positive, T::one());
    for &n in negatives {
        update(n, T::zero());
    }
    axpy(T::one(), scratch, center);
}

/// Shared parameter tables for lock-free multi-worker training.
struct SharedTables<T> {
    input: UnsafeCell<Vec<T>>,
    output: UnsafeCell<Vec<T>>,
}

// Workers race on individual entries; each read or write is of a whole
// plain-old-data value and stale reads only perturb the SGD trajectory.
unsafe impl<T: Send> Sync for SharedTables<T> {}

fn pair_count(walks: &[Vec<u32>], window: usize) -> u64 {
    walks
        .iter()
        .map(|w| {
            let l = w.len();
            (0..l)
                .map(|p| (p.min(window) + (l - 1 - p).min(window)) as u64)
                .sum::<u64>()
        })
        .sum()
}

struct Worker<'a> {
    walks: &'a [Vec<u32>],
    noise: &'a AliasTable,
    cfg: &'a TrainConfig,
    /// pairs this worker processes over all epochs
    total: u64,
    seed: u64,
}

impl Worker<'_> {
    /// Safety: when several workers run at once they must only touch the
    /// tables through this function; concurrent entry updates may be lost.
    unsafe fn run<T: Scalar>(&self, tables: &SharedTables<T>) {
        let dim = self.cfg.dim;
        let input = (*tables.input.get()).as_mut_ptr();
        let output_len = (*tables.output.get()).len();
        let output = (*tables.output.get()).as_mut_ptr();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut scratch = vec![T::zero(); dim];
        let mut negs = Vec::with_capacity(self.cfg.negatives_per_positive);
        let lr0 = self.cfg.initial_learning_rate;
        let mut done = 0u64;
        let total = self.total.max(1) as f64;
        for _epoch in 0..self.cfg.epochs {
            for walk in self.walks {
                for (pos, &center) in walk.iter().enumerate() {
                    let lo = pos.saturating_sub(self.cfg.window);
                    let hi = (pos + self.cfg.window).min(walk.len() - 1);
                    for (ctx_pos, &context) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                        if ctx_pos == pos {
                            continue;
                        }
                        let lr = T::of(lr0 * (1.0 - done as f64 / total).max(1e-4));
                        done += 1;
                        negs.clear();
                        for _ in 0..self.cfg.negatives_per_positive {
                            for _attempt in 0..16 {
                                let n = self.noise.sample(&mut rng) as u32;
                                if n != context {
                                    negs.push(n);
                                    break;
                                }
                            }
                        }
                        let center_row =
                            std::slice::from_raw_parts_mut(input.add(center as usize * dim), dim);
                        let outputs = std::slice::from_raw_parts_mut(output, output_len);
                        sgd_step(center_row, outputs, context, &negs, lr, &mut scratch);
                    }
                }
            }
        }
    }
}

/// Trains center ("input") vectors for `n_nodes` nodes from the walk corpus.
///
/// Negatives are drawn from the walk-token unigram distribution raised to
/// 3/4. The learning rate decays linearly over all pairs and epochs. Nodes
/// that never occur in a walk get the zero vector.
pub fn train_sgns<T: Scalar>(
    walks: &[Vec<u32>],
    n_nodes: usize,
    namespace: Namespace,
    cfg: &TrainConfig,
) -> Result<EmbeddingMatrix<T>> {
    cfg.validate()?;
    let mut freq = vec![0u64; n_nodes];
    for w in walks {
        for &v in w {
            let slot = freq.get_mut(v as usize).ok_or_else(|| {
                Error::Config(format!("walk node {v} out of range for {n_nodes} nodes"))
            })?;
            *slot += 1;
        }
    }
    let total_pairs = pair_count(walks, cfg.window);
    if total_pairs == 0 {
        return Err(Error::EmptyCorpus);
    }
    let noise_weights: Vec<f64> = freq.iter().map(|&f| (f as f64).powf(0.75)).collect();
    let noise = AliasTable::new(&noise_weights).ok_or(Error::EmptyCorpus)?;

    let dim = cfg.dim;
    let mut init_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0x1417, 0));
    let half = 0.5 / dim as f64;
    let input: Vec<T> = (0..n_nodes * dim)
        .map(|_| T::of(init_rng.random_range(-half..half)))
        .collect();
    let tables = SharedTables {
        input: UnsafeCell::new(input),
        output: UnsafeCell::new(vec![T::zero(); n_nodes * dim]),
    };

    let threads = cfg.threads.max(1).min(walks.len().max(1));
    let chunk = walks.len().div_ceil(threads);
    let workers: Vec<Worker> = walks
        .chunks(chunk.max(1))
        .enumerate()
        .map(|(k, part)| Worker {
            walks: part,
            noise: &noise,
            cfg,
            total: pair_count(part, cfg.window) * cfg.epochs as u64,
            seed: mix_seed(cfg.seed, 0x5655, k as u64),
        })
        .collect();
    if workers.len() == 1 {
        // SAFETY: single worker, exclusive access.
        unsafe { workers[0].run(&tables) };
    } else {
        let shared = &tables;
        rayon::scope(|s| {
            for w in &workers {
                // SAFETY: lock-free shared updates, see `SharedTables`.
                s.spawn(move |_| unsafe { w.run(shared) });
            }
        });
    }

    let mut m = EmbeddingMatrix {
        namespace,
        dim,
        data: tables.input.into_inner(),
    };
    for (v, f) in freq.iter().enumerate() {
        if *f == 0 {
            m.row_mut(v).iter_mut().for_each(|x| *x = T::zero());
        }
    }
    if !m.all_finite() {
        return Err(Error::DegenerateDataset("training produced non-finite vectors".into()));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_is_stable_at_extremes() {
        let u = [50.0f64];
        let v = [50.0f64];
        let n: [&[f64]; 1] = [&[-50.0]];
        let l = sgns_loss(&u, &v, &n);
        assert!(l.is_finite() && l >= 0.0 && l < 1e-12);
        let l = sgns_loss(&[-50.0f64], &v, &[&[50.0]]);
        assert!((l - 2500.0).abs() < 1e-9);
    }

    #[test]
    fn single_step_matches_hand_computed_update() {
        let lr = 0.1f64;
        let mut center = vec![0.3, -0.2, 0.5];
        let ctx = [0.1, 0.4, -0.3];
        let neg = [-0.2, 0.1, 0.6];
        let mut outputs: Vec<f64> = [ctx, neg].concat();
        // by hand: s_p = σ(u·v) , s_n = σ(u·n)
        let up: f64 = 0.3 * 0.1 + -0.2 * 0.4 + 0.5 * -0.3;
        let un: f64 = 0.3 * -0.2 + -0.2 * 0.1 + 0.5 * 0.6;
        let sp = 1.0 / (1.0 + (-up).exp());
        let sn = 1.0 / (1.0 + (-un).exp());
        let u0 = center.clone();
        let exp_center: Vec<f64> = (0..3)
            .map(|k| u0[k] + lr * ((1.0 - sp) * ctx[k] - sn * neg[k]))
            .collect();
        let exp_ctx: Vec<f64> = (0..3).map(|k| ctx[k] + lr * (1.0 - sp) * u0[k]).collect();
        let exp_neg: Vec<f64> = (0..3).map(|k| neg[k] - lr * sn * u0[k]).collect();
        let mut scratch = vec![0.0; 3];
        sgd_step(&mut center, &mut outputs, 0, &[1], lr, &mut scratch);
        for k in 0..3 {
            assert!((center[k] - exp_center[k]).abs() < 1e-15);
            assert!((outputs[k] - exp_ctx[k]).abs() < 1e-15);
            assert!((outputs[3 + k] - exp_neg[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let r = train_sgns::<f32>(&[vec![0], vec![1]], 2, Namespace::User, &TrainConfig::default());
        assert!(matches!(r, Err(Error::EmptyCorpus)));
    }

    #[test]
    fn unseen_nodes_get_zero_vectors_and_seed_reproduces() {
        let walks = vec![vec![0, 1, 2, 1, 0], vec![2, 1, 0, 1, 2]];
        let cfg = TrainConfig {
            dim: 8,
            epochs: 3,
            seed: 9,
            ..Default::default()
        };
        let a = train_sgns::<f32>(&walks, 4, Namespace::Item, &cfg).unwrap();
        let b = train_sgns::<f32>(&walks, 4, Namespace::Item, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.is_zero_row(3));
        assert!(!a.is_zero_row(0));
        assert!(a.all_finite());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let walks = vec![vec![0, 1, 2, 1, 0, 2]];
        let cfg = TrainConfig {
            dim: 5,
            ..Default::default()
        };
        let m = train_sgns::<f32>(&walks, 3, Namespace::User, &cfg).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let back = EmbeddingMatrix::<f32>::read_text(Namespace::User, buf.as_slice(), "mem").unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn read_rejects_short_rows() {
        let text = "2 2\n0 1 2\n1 3\n";
        let err = EmbeddingMatrix::<f64>::read_text(Namespace::User, text.as_bytes(), "mem").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }
}
