//! Density-gated spectral clustering with automatic cluster-count detection.
//!
//! [`cluster_points`] runs the whole chain: density, center detection, gated
//! similarity, then spectral clustering with one cluster per detected center.
//! All-zero rows (nodes that never appeared in a walk) skip the chain and land
//! in a reserved cold cluster.

pub mod adcn;
pub mod density;
pub mod dnn;
pub mod eigen;
pub mod kmeans;
pub mod spectral;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

pub use adcn::{detect_centers, detect_centers_with, CenterDetection};
pub use density::{compute_density, default_neighbor_budget, DensityProfile};
pub use dnn::{default_neighbors, default_theta, dnn_similarity, DnnSimilarity};
pub use eigen::{largest_eigenpairs, symmetric_eigen, Eigen, LanczosOptions, SparseSymmetric};
pub use kmeans::{kmeans, KMeansOptions, KMeansResult};
pub use spectral::{spectral_cluster, spectral_cluster_with_seeds, ClusterModel, SpectralOptions};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterParams {
    /// Neighbor budget as a fraction of the point count (rounded up).
    pub density_fraction: f64,
    /// Absolute neighbor budget; overrides `density_fraction`.
    pub neighbor_budget: Option<usize>,
    /// Density gate as a multiple of the standard deviation of ρ.
    pub theta_factor: f64,
    /// Initial neighbor count; defaults to max(p, 7).
    pub neighbors: Option<usize>,
    /// Standard deviations above the mean γ a center must reach.
    pub center_sigmas: f64,
    pub eigen_tol: f64,
    pub dense_limit: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            density_fraction: 0.02,
            neighbor_budget: None,
            theta_factor: 0.5,
            neighbors: None,
            center_sigmas: 5.0,
            eigen_tol: 1e-10,
            dense_limit: 2000,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("cluster: {m}")));
        if !(self.density_fraction > 0.0 && self.density_fraction <= 1.0) {
            return bad("density_fraction must lie in (0, 1]");
        }
        if self.neighbor_budget == Some(0) || self.neighbors == Some(0) {
            return bad("neighbor counts must be positive");
        }
        if !(self.theta_factor >= 0.0) || !(self.center_sigmas >= 0.0) {
            return bad("theta_factor and center_sigmas must be non-negative");
        }
        if !(self.eigen_tol > 0.0) {
            return bad("eigen_tol must be positive");
        }
        Ok(())
    }

    fn budget(&self, n: usize) -> usize {
        self.neighbor_budget
            .unwrap_or_else(|| ((n as f64 * self.density_fraction).ceil() as usize).max(1))
    }
}

/// Per-point diagnostics for the full node set; cold nodes report zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterDiagnostics {
    pub rho: Vec<usize>,
    pub delta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub is_center: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct ClusterRun {
    pub model: ClusterModel,
    pub diagnostics: ClusterDiagnostics,
}

/// Clusters the rows of `points`.
pub fn cluster_points<T: Scalar>(points: &[Vec<T>], params: &ClusterParams, seed: u64) -> Result<ClusterRun> {
    params.validate()?;
    let n = points.len();
    let active: Vec<usize> = (0..n)
        .filter(|&i| points[i].iter().any(|&x| x != T::zero()))
        .collect();
    let mut diagnostics = ClusterDiagnostics {
        rho: vec![0; n],
        delta: vec![0.0; n],
        gamma: vec![0.0; n],
        is_center: vec![false; n],
    };

    let (local_assign, local_centers, k_active, spectral_dim) = if active.len() < 2 {
        (vec![0; active.len()], active.iter().map(|_| 0).collect::<Vec<_>>(), active.len().min(1), active.len().min(1))
    } else {
        let sub: Vec<Vec<T>> = active.iter().map(|&i| points[i].clone()).collect();
        let p = params.budget(sub.len());
        let profile = compute_density(&sub, p)?;
        let detection = detect_centers_with(&profile, &sub, params.center_sigmas);
        let theta = params.theta_factor * profile.std_dev();
        let k = params.neighbors.unwrap_or_else(|| default_neighbors(profile.neighbor_budget));
        let s = match dnn_similarity(&sub, &profile, theta, k) {
            Ok(s) => s,
            // every active row is identical: one cluster
            Err(Error::DegenerateDataset(_)) => DnnSimilarity::from_rows(
                (0..sub.len())
                    .map(|i| (0..sub.len()).filter(|&j| j != i).map(|j| (j as u32, T::one())).collect())
                    .collect(),
            ),
            Err(e) => return Err(e),
        };
        let model = spectral_cluster(
            &s,
            &detection,
            &SpectralOptions {
                eigen_tol: params.eigen_tol,
                dense_limit: params.dense_limit,
                kmeans_max_iter: 300,
                seed,
            },
        )?;
        for (a, &g) in active.iter().enumerate() {
            diagnostics.rho[g] = profile.rho[a];
            diagnostics.delta[g] = detection.delta[a].to_f64_lossy();
            diagnostics.gamma[g] = detection.gamma[a].to_f64_lossy();
        }
        (model.assignments, detection.centers, model.k, model.spectral_dim)
    };

    let centers: Vec<usize> = local_centers.iter().map(|&a| active[a]).collect();
    for &c in &centers {
        diagnostics.is_center[c] = true;
    }
    let cold = active.len() < n;
    let mut assignments = vec![k_active; n];
    for (a, &g) in active.iter().enumerate() {
        assignments[g] = local_assign[a];
    }
    let model = ClusterModel {
        assignments,
        k: k_active + cold as usize,
        centers,
        spectral_dim,
        cold_cluster: cold.then_some(k_active),
    };
    Ok(ClusterRun { model, diagnostics })
}

/// Writes `node_index<TAB>cluster_id` lines.
pub fn write_assignments<W: Write>(model: &ClusterModel, mut out: W) -> std::io::Result<()> {
    for (i, c) in model.assignments.iter().enumerate() {
        writeln!(out, "{i}\t{c}")?;
    }
    Ok(())
}

/// Reads an assignment file. Node indices must be `0..n` in order and cluster
/// ids dense. Centers are not stored and come back empty.
pub fn read_assignments<R: BufRead>(input: R, origin: &str) -> Result<ClusterModel> {
    let mut assignments = Vec::new();
    for (ln, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut f = line.split('\t');
        let parse = |s: Option<&str>| -> Result<usize> {
            s.and_then(|x| x.trim().parse().ok())
                .ok_or_else(|| Error::parse(origin, ln + 1, "expected node_index<TAB>cluster_id"))
        };
        let i = parse(f.next())?;
        let c = parse(f.next())?;
        if i != assignments.len() {
            return Err(Error::parse(origin, ln + 1, format!("node index {i} out of order")));
        }
        assignments.push(c);
    }
    let k = assignments.iter().map(|&c| c + 1).max().unwrap_or(0);
    let mut used = vec![false; k];
    for &c in &assignments {
        used[c] = true;
    }
    if used.iter().any(|u| !u) {
        return Err(Error::parse(origin, 0, "cluster ids are not dense"));
    }
    Ok(ClusterModel {
        assignments,
        k,
        centers: Vec::new(),
        spectral_dim: 0,
        cold_cluster: None,
    })
}

/// CSV with header `node_index,rho,delta,gamma,is_center`.
pub fn write_diagnostics<W: Write>(d: &ClusterDiagnostics, mut out: W) -> std::io::Result<()> {
    writeln!(out, "node_index,rho,delta,gamma,is_center")?;
    for i in 0..d.rho.len() {
        writeln!(
            out,
            "{i},{},{},{},{}",
            d.rho[i], d.delta[i], d.gamma[i], d.is_center[i] as u8
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rows_are_cold() {
        let mut pts: Vec<Vec<f64>> = (0..12).map(|i| vec![1.0 + (i % 4) as f64 * 0.01, (i / 4) as f64 * 10.0 + 1.0]).collect();
        pts[3] = vec![0.0, 0.0];
        let run = cluster_points(&pts, &ClusterParams::default(), 0).unwrap();
        let m = &run.model;
        let cold = m.cold_cluster.unwrap();
        assert_eq!(m.assignments[3], cold);
        assert_eq!(cold, m.k - 1);
        assert!(m.assignments.iter().enumerate().all(|(i, &c)| (i == 3) == (c == cold)));
        assert_eq!(run.diagnostics.rho[3], 0);
    }

    #[test]
    fn all_cold_or_tiny_inputs() {
        let pts = vec![vec![0.0f64; 3]; 4];
        let m = cluster_points(&pts, &ClusterParams::default(), 0).unwrap().model;
        assert_eq!(m.k, 1);
        assert_eq!(m.assignments, vec![0; 4]);

        let pts = vec![vec![1.0f64], vec![0.0]];
        let m = cluster_points(&pts, &ClusterParams::default(), 0).unwrap().model;
        assert_eq!(m.assignments, vec![0, 1]);
        assert_eq!(m.k, 2);
    }

    #[test]
    fn identical_active_rows_form_one_cluster() {
        let pts = vec![vec![1.0f64, 2.0]; 6];
        let m = cluster_points(&pts, &ClusterParams::default(), 0).unwrap().model;
        assert_eq!(m.k, 1);
    }

    #[test]
    fn assignment_file_round_trips() {
        let model = ClusterModel {
            assignments: vec![1, 0, 1, 2],
            k: 3,
            centers: vec![],
            spectral_dim: 0,
            cold_cluster: None,
        };
        let mut buf = Vec::new();
        write_assignments(&model, &mut buf).unwrap();
        let back = read_assignments(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, model);
        assert!(read_assignments("0\t0\n1\t2\n".as_bytes(), "mem").is_err());
    }

    #[test]
    fn diagnostics_csv_has_header() {
        let d = ClusterDiagnostics {
            rho: vec![1, 2],
            delta: vec![0.5, 1.0],
            gamma: vec![0.5, 2.0],
            is_center: vec![false, true],
        };
        let mut buf = Vec::new();
        write_diagnostics(&d, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "node_index,rho,delta,gamma,is_center\n0,1,0.5,0.5,0\n1,2,1,2,1\n"
        );
    }
}
