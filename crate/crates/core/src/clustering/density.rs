//! Neighbor-count density over Euclidean distances.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{squared_distance, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    /// Number of points whose distance from `i` falls among the `p` smallest
    /// distances from `i`, ties at the cut included.
    pub rho: Vec<usize>,
    pub neighbor_budget: usize,
}

impl DensityProfile {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn max(&self) -> usize {
        self.rho.iter().copied().max().unwrap_or(0)
    }

    /// Population standard deviation of ρ.
    pub fn std_dev(&self) -> f64 {
        let n = self.rho.len() as f64;
        if n == 0.0 {
            return 0.0;
        }
        let mean = self.rho.iter().sum::<usize>() as f64 / n;
        (self.rho.iter().map(|&r| (r as f64 - mean).powi(2)).sum::<f64>() / n).sqrt()
    }
}

/// Default neighbor budget: 2% of the point count, rounded up.
pub fn default_neighbor_budget(n: usize) -> usize {
    ((n as f64 * 0.02).ceil() as usize).max(1)
}

pub(crate) fn distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    squared_distance(a, b).sqrt()
}

/// Distances from `i` to every other point, as `(distance, j)`.
pub(crate) fn distances_from<T: Scalar>(points: &[Vec<T>], i: usize) -> Vec<(T, usize)> {
    points
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, q)| (distance(&points[i], q), j))
        .collect()
}

fn by_distance<T: Scalar>(a: &(T, usize), b: &(T, usize)) -> std::cmp::Ordering {
    a.0.partial_cmp(&b.0)
        .unwrap_or(std::cmp::Ordering::Equal)
        .then(a.1.cmp(&b.1))
}

/// The `k` nearest other points of `i`, nearest first, ties by index.
pub(crate) fn nearest_neighbors<T: Scalar>(points: &[Vec<T>], i: usize, k: usize) -> Vec<(T, usize)> {
    let mut d = distances_from(points, i);
    let k = k.min(d.len());
    if k < d.len() && k > 0 {
        d.select_nth_unstable_by(k - 1, by_distance);
    }
    d.truncate(k);
    d.sort_by(by_distance);
    d
}

/// `p` is clamped to `n - 1`.
pub fn compute_density<T: Scalar>(points: &[Vec<T>], p: usize) -> Result<DensityProfile> {
    let n = points.len();
    if n < 2 {
        return Err(Error::DegenerateDataset(format!("density needs at least 2 points, got {n}")));
    }
    if p == 0 {
        return Err(Error::Config("neighbor budget must be at least 1".into()));
    }
    let p = p.min(n - 1);
    let rho = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<T> = distances_from(points, i).into_iter().map(|x| x.0).collect();
            let (_, cut, _) = d.select_nth_unstable_by(p - 1, |a, b| {
                a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal)
            });
            let cut = *cut;
            d.iter().filter(|&&x| x <= cut).count()
        })
        .collect();
    Ok(DensityProfile {
        rho,
        neighbor_budget: p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equidistant_triangle_counts_ties() {
        // unit basis vectors are exactly equidistant
        let pts = vec![vec![1.0f64, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert_eq!(compute_density(&pts, 1).unwrap().rho, vec![2, 2, 2]);
    }

    #[test]
    fn counting_bound_holds() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.random(), rng.random()]).collect();
        let prof = compute_density(&pts, 2).unwrap();
        assert!(prof.rho.iter().sum::<usize>() >= 200);
        assert!(prof.rho.iter().all(|&r| r >= 2));
    }

    #[test]
    fn rejects_single_point() {
        assert!(matches!(
            compute_density(&[vec![1.0f64]], 1),
            Err(Error::DegenerateDataset(_))
        ));
    }

    #[test]
    fn duplicates_inflate_density() {
        let pts = vec![vec![0.0f64], vec![0.0], vec![0.0], vec![5.0]];
        let r = compute_density(&pts, 1).unwrap().rho;
        assert_eq!(r, vec![2, 2, 2, 3]);
    }

    #[test]
    fn default_budget_rounds_up() {
        assert_eq!(default_neighbor_budget(1682), 34);
        assert_eq!(default_neighbor_budget(10), 1);
        assert_eq!(default_neighbor_budget(943), 19);
    }

    #[test]
    fn nearest_neighbors_sorted() {
        let pts: Vec<Vec<f64>> = [0.0, 3.0, 1.0, 1.0, 7.0].iter().map(|&x| vec![x]).collect();
        let nn = nearest_neighbors(&pts, 0, 3);
        assert_eq!(nn.iter().map(|x| x.1).collect::<Vec<_>>(), vec![2, 3, 1]);
    }
}
