//! Density-gated nearest-neighbor similarity.

use rayon::prelude::*;

use super::density::{nearest_neighbors, DensityProfile};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct DnnSimilarity<T> {
    /// Off-diagonal nonzeros per row, sorted by column. Symmetric.
    rows: Vec<Vec<(u32, T)>>,
    pub sigma: Vec<T>,
    pub theta: f64,
    pub neighbors: usize,
}

impl<T: Scalar> DnnSimilarity<T> {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(u32, T)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if i == j {
            return T::one();
        }
        match self.rows[i].binary_search_by_key(&(j as u32), |e| e.0) {
            Ok(k) => self.rows[i][k].1,
            Err(_) => T::zero(),
        }
    }

    /// Weighted degree excluding the unit diagonal.
    pub fn degree(&self, i: usize) -> T {
        self.rows[i].iter().map(|e| e.1).sum()
    }

    pub fn n_nonzero(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Builds from explicit symmetric off-diagonal rows.
    pub fn from_rows(mut rows: Vec<Vec<(u32, T)>>) -> Self {
        for r in &mut rows {
            r.sort_by_key(|e| e.0);
        }
        let n = rows.len();
        DnnSimilarity {
            rows,
            sigma: vec![T::one(); n],
            theta: f64::INFINITY,
            neighbors: n.saturating_sub(1),
        }
    }
}

/// Default density gate: half the standard deviation of ρ.
pub fn default_theta(profile: &DensityProfile) -> f64 {
    0.5 * profile.std_dev()
}

/// Default initial neighbor count.
pub fn default_neighbors(p: usize) -> usize {
    p.max(7)
}

/// Builds S from the `k` nearest neighbors of every point, keeping only
/// neighbors closer than the nearest neighbor whose density differs by more
/// than `theta`. `k` is clamped to `n - 1`.
pub fn dnn_similarity<T: Scalar>(
    points: &[Vec<T>],
    profile: &DensityProfile,
    theta: f64,
    k: usize,
) -> Result<DnnSimilarity<T>> {
    let n = points.len();
    if n < 2 || profile.len() != n {
        return Err(Error::DegenerateDataset(format!(
            "similarity needs at least 2 points with a matching profile (points {n}, profile {})",
            profile.len()
        )));
    }
    let k = k.clamp(1, n - 1);
    let rho = &profile.rho;
    let kept: Vec<Vec<(T, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let nn = nearest_neighbors(points, i, k);
            let gate = nn
                .iter()
                .filter(|&&(_, j)| (rho[i] as f64 - rho[j] as f64).abs() > theta)
                .map(|x| x.0)
                .fold(T::infinity(), T::min);
            nn.into_iter().filter(|x| x.0 < gate).collect()
        })
        .collect();

    let mut sigma: Vec<T> = kept
        .iter()
        .map(|t| {
            if t.is_empty() {
                T::zero()
            } else {
                t.iter().map(|x| x.0).sum::<T>() / T::of_usize(t.len())
            }
        })
        .collect();
    let floor = sigma
        .iter()
        .copied()
        .filter(|&s| s > T::zero())
        .fold(T::infinity(), T::min);
    if !floor.is_finite() {
        return Err(Error::DegenerateDataset(
            "all points coincide with their similarity neighbors".into(),
        ));
    }
    for s in &mut sigma {
        if *s <= T::zero() {
            *s = floor;
        }
    }

    let two = T::of(2.0);
    let mut rows: Vec<Vec<(u32, T)>> = vec![Vec::new(); n];
    for (i, t) in kept.iter().enumerate() {
        for &(d, j) in t {
            let s = sigma[i].max(sigma[j]);
            let v = (-(d * d) / (two * s * s)).exp();
            rows[i].push((j as u32, v));
            rows[j].push((i as u32, v));
        }
    }
    for r in &mut rows {
        r.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.partial_cmp(&a.1).unwrap()));
        // the kernel value is symmetric, so a duplicate means both directions kept it
        r.dedup_by_key(|e| e.0);
    }
    Ok(DnnSimilarity {
        rows,
        sigma,
        theta,
        neighbors: k,
    })
}

#[cfg(test)]
mod tests {
    use super::super::density::compute_density;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn no_gate_full_neighborhood_is_dense() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64 * 0.1]).collect();
        let prof = compute_density(&pts, 2).unwrap();
        let s = dnn_similarity(&pts, &prof, f64::INFINITY, 5).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!(s.get(i, j) > 0.0);
            }
        }
    }

    #[test]
    fn all_duplicates_is_degenerate() {
        let pts = vec![vec![1.0f64, 1.0]; 4];
        let prof = compute_density(&pts, 1).unwrap();
        assert!(matches!(
            dnn_similarity(&pts, &prof, 0.0, 3),
            Err(Error::DegenerateDataset(_))
        ));
    }

    #[test]
    fn duplicate_sigma_is_floored() {
        let pts = vec![vec![0.0f64], vec![0.0], vec![3.0], vec![4.0]];
        let prof = compute_density(&pts, 1).unwrap();
        let s = dnn_similarity(&pts, &prof, f64::INFINITY, 1).unwrap();
        assert!(s.sigma.iter().all(|&x| x > 0.0));
        assert_eq!(s.get(0, 1), 1.0);
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(
            raw in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3..30),
            p in 1usize..4,
            k in 1usize..10,
            theta in 0.0f64..3.0,
        ) {
            let pts: Vec<Vec<f64>> = raw.iter().map(|&(a, b)| vec![a, b]).collect();
            let prof = compute_density(&pts, p).unwrap();
            if let Ok(s) = dnn_similarity(&pts, &prof, theta, k) {
                for i in 0..pts.len() {
                    prop_assert_eq!(s.get(i, i), 1.0);
                    for j in 0..pts.len() {
                        let v = s.get(i, j);
                        prop_assert!((0.0..=1.0).contains(&v));
                        prop_assert_eq!(v, s.get(j, i));
                    }
                }
            }
        }
    }
}
