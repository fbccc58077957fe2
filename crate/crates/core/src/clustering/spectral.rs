//! Normalized spectral clustering seeded by detected centers.

use std::collections::VecDeque;

use super::adcn::CenterDetection;
use super::dnn::DnnSimilarity;
use super::eigen::{largest_eigenpairs, symmetric_eigen, LanczosOptions, SparseSymmetric};
use super::kmeans::{kmeans, KMeansOptions};
use crate::error::Result;
use crate::scalar::{norm, Scalar};

#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions {
    pub eigen_tol: f64,
    /// Components larger than this use the iterative eigensolver.
    pub dense_limit: usize,
    pub kmeans_max_iter: usize,
    pub seed: u64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            eigen_tol: 1e-10,
            dense_limit: 2000,
            kmeans_max_iter: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterModel {
    /// Cluster id per node, dense in `0..k`.
    pub assignments: Vec<usize>,
    pub k: usize,
    pub centers: Vec<usize>,
    pub spectral_dim: usize,
    /// Id reserved for nodes with no similarity mass, if any exist.
    pub cold_cluster: Option<usize>,
}

impl ClusterModel {
    pub fn n_nodes(&self) -> usize {
        self.assignments.len()
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &c) in self.assignments.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for &c in &self.assignments {
            out[c] += 1;
        }
        out
    }
}

fn components<T: Scalar>(s: &DnnSimilarity<T>, active: &[bool]) -> Vec<Vec<usize>> {
    let n = s.n();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for start in 0..n {
        if seen[start] || !active[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &(v, w) in s.row(u) {
                let v = v as usize;
                if w > T::zero() && !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Top `k` eigenvectors of D^{-1/2} A D^{-1/2} restricted to `comp`, returned
/// as row-normalized spectral coordinates, one row per member.
fn spectral_rows<T: Scalar>(
    s: &DnnSimilarity<T>,
    comp: &[usize],
    k: usize,
    opts: &SpectralOptions,
) -> Vec<Vec<T>> {
    let m = comp.len();
    let mut local = vec![usize::MAX; s.n()];
    for (a, &g) in comp.iter().enumerate() {
        local[g] = a;
    }
    let inv_sqrt: Vec<T> = comp.iter().map(|&g| T::one() / s.degree(g).sqrt()).collect();
    let rows: Vec<Vec<(u32, T)>> = comp
        .iter()
        .enumerate()
        .map(|(a, &g)| {
            s.row(g)
                .iter()
                .map(|&(j, w)| {
                    let b = local[j as usize];
                    (b as u32, w * inv_sqrt[a] * inv_sqrt[b])
                })
                .collect()
        })
        .collect();
    let op = SparseSymmetric::from_rows(&rows);
    let eig = if m <= opts.dense_limit {
        let full = symmetric_eigen(&op.to_dense(), m);
        super::eigen::Eigen {
            values: full.values[m - k..].to_vec(),
            vectors: full.vectors[m - k..].to_vec(),
        }
    } else {
        largest_eigenpairs(
            &op,
            k,
            &LanczosOptions {
                tol: opts.eigen_tol,
                seed: opts.seed,
                ..Default::default()
            },
        )
    };
    (0..m)
        .map(|a| {
            let mut r: Vec<T> = eig.vectors.iter().rev().map(|v| v[a]).collect();
            let nr = norm(&r);
            if nr > T::zero() {
                r.iter_mut().for_each(|x| *x /= nr);
            }
            r
        })
        .collect()
}

/// Clusters with k equal to the number of detected centers.
pub fn spectral_cluster<T: Scalar>(
    s: &DnnSimilarity<T>,
    detection: &CenterDetection<T>,
    opts: &SpectralOptions,
) -> Result<ClusterModel> {
    spectral_cluster_with_seeds(s, &detection.centers, opts)
}

/// Each connected component of the similarity graph receives as many clusters
/// as it holds seeds (at least one, at most its size). Within a component the
/// spectral rows of its seeds, in the order given, initialize k-means.
/// Zero-degree nodes share one trailing cold cluster.
pub fn spectral_cluster_with_seeds<T: Scalar>(
    s: &DnnSimilarity<T>,
    seeds: &[usize],
    opts: &SpectralOptions,
) -> Result<ClusterModel> {
    let n = s.n();
    let active: Vec<bool> = (0..n).map(|i| s.degree(i) > T::zero()).collect();
    let comps = components(s, &active);
    let mut comp_of = vec![usize::MAX; n];
    for (c, comp) in comps.iter().enumerate() {
        for &g in comp {
            comp_of[g] = c;
        }
    }
    let mut comp_seeds: Vec<Vec<usize>> = vec![Vec::new(); comps.len()];
    for &g in seeds {
        if g < n && comp_of[g] != usize::MAX && !comp_seeds[comp_of[g]].contains(&g) {
            comp_seeds[comp_of[g]].push(g);
        }
    }

    let mut assignments = vec![usize::MAX; n];
    let mut next_id = 0;
    let mut spectral_dim = 0;
    for (comp, cs) in comps.iter().zip(&comp_seeds) {
        let k = cs.len().clamp(1, comp.len());
        if k == 1 {
            for &g in comp {
                assignments[g] = next_id;
            }
            next_id += 1;
            spectral_dim = spectral_dim.max(1);
            continue;
        }
        spectral_dim = spectral_dim.max(k);
        let rows = spectral_rows(s, comp, k, opts);
        let init: Vec<Vec<T>> = cs[..k]
            .iter()
            .map(|g| rows[comp.binary_search(g).unwrap()].clone())
            .collect();
        let km = kmeans(
            &rows,
            k,
            Some(&init),
            &KMeansOptions {
                max_iter: opts.kmeans_max_iter,
                tol: 1e-8,
                seed: opts.seed,
            },
        )?;
        // relabel by first appearance so ids stay dense and ordered
        let mut relabel = vec![usize::MAX; k];
        for (a, &g) in comp.iter().enumerate() {
            let c = km.assignments[a];
            if relabel[c] == usize::MAX {
                relabel[c] = next_id;
                next_id += 1;
            }
            assignments[g] = relabel[c];
        }
    }
    let cold_cluster = if assignments.iter().any(|&c| c == usize::MAX) {
        let id = next_id;
        next_id += 1;
        for c in &mut assignments {
            if *c == usize::MAX {
                *c = id;
            }
        }
        Some(id)
    } else {
        None
    };
    Ok(ClusterModel {
        assignments,
        k: next_id,
        centers: seeds.to_vec(),
        spectral_dim,
        cold_cluster,
    })
}
