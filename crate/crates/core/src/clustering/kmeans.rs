//! Lloyd's k-means with optional explicit initial centroids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{squared_distance, Scalar};

#[derive(Debug, Clone, Copy)]
pub struct KMeansOptions {
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            max_iter: 300,
            tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult<T> {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<T>>,
    pub inertia: T,
    pub iterations: usize,
    /// Inertia after each assignment step.
    pub history: Vec<T>,
}

fn nearest<T: Scalar>(p: &[T], centroids: &[Vec<T>]) -> (usize, T) {
    let mut best = (0, T::infinity());
    for (c, mu) in centroids.iter().enumerate() {
        let d = squared_distance(p, mu);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding.
fn plus_plus<T: Scalar>(points: &[Vec<T>], k: usize, seed: u64) -> Vec<Vec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]).to_f64_lossy())
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = d2.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        } else {
            rng.random_range(0..points.len())
        };
        centroids.push(points[pick].clone());
        for (p, d) in points.iter().zip(d2.iter_mut()) {
            *d = d.min(squared_distance(p, &centroids[centroids.len() - 1]).to_f64_lossy());
        }
    }
    centroids
}

/// Clusters `points` into `k` groups. With `init` the given centroids are used
/// verbatim; otherwise k-means++ seeding from `opts.seed`.
pub fn kmeans<T: Scalar>(
    points: &[Vec<T>],
    k: usize,
    init: Option<&[Vec<T>]>,
    opts: &KMeansOptions,
) -> Result<KMeansResult<T>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let mut centroids = match init {
        Some(c) => {
            if c.len() != k {
                return Err(Error::InvalidK { k: c.len(), n });
            }
            c.to_vec()
        }
        None => plus_plus(points, k, opts.seed),
    };
    let dim = points[0].len();
    let tol2 = T::of(opts.tol * opts.tol);
    let mut assignments = vec![0usize; n];
    let mut dists = vec![T::zero(); n];
    let mut history = Vec::new();
    let mut iterations = 0;

    loop {
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            assignments[i] = c;
            dists[i] = d;
        }
        history.push(dists.iter().copied().sum());
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let mut sums = vec![vec![T::zero(); dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignments) {
            counts[c] += 1;
            for (s, &x) in sums[c].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut taken = vec![false; n];
        let mut shift = T::zero();
        for c in 0..k {
            let new = if counts[c] == 0 {
                // reseed with the point currently worst served
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .max_by(|&a, &b| dists[a].partial_cmp(&dists[b]).unwrap().then(b.cmp(&a)))
                    .unwrap_or(0);
                taken[far] = true;
                dists[far] = T::zero();
                points[far].clone()
            } else {
                let inv = T::one() / T::of_usize(counts[c]);
                sums[c].iter().map(|&s| s * inv).collect()
            };
            shift = shift.max(squared_distance(&new, &centroids[c]));
            centroids[c] = new;
        }
        if shift <= tol2 {
            for (i, p) in points.iter().enumerate() {
                let (c, d) = nearest(p, &centroids);
                assignments[i] = c;
                dists[i] = d;
            }
            history.push(dists.iter().copied().sum());
            break;
        }
    }
    Ok(KMeansResult {
        inertia: *history.last().unwrap(),
        assignments,
        centroids,
        iterations,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_dimensional_pairs() {
        let pts: Vec<Vec<f64>> = [1.0, 2.0, 100.0, 101.0].iter().map(|&x| vec![x]).collect();
        let r = kmeans(&pts, 2, None, &KMeansOptions::default()).unwrap();
        assert_eq!(r.assignments[0], r.assignments[1]);
        assert_eq!(r.assignments[2], r.assignments[3]);
        assert_ne!(r.assignments[0], r.assignments[2]);
        let mut cs: Vec<f64> = r.centroids.iter().map(|c| c[0]).collect();
        cs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(cs, vec![1.5, 100.5]);
    }

    #[test]
    fn rejects_bad_k() {
        let pts = vec![vec![0.0f64], vec![1.0]];
        assert!(matches!(
            kmeans(&pts, 3, None, &KMeansOptions::default()),
            Err(Error::InvalidK { k: 3, n: 2 })
        ));
        assert!(kmeans(&pts, 0, None, &KMeansOptions::default()).is_err());
    }

    #[test]
    fn explicit_init_is_respected() {
        let pts: Vec<Vec<f64>> = [0.0, 0.1, 5.0, 5.1].iter().map(|&x| vec![x]).collect();
        let init = vec![vec![5.0], vec![0.0]];
        let r = kmeans(&pts, 2, Some(&init), &KMeansOptions::default()).unwrap();
        assert_eq!(r.assignments, vec![1, 1, 0, 0]);
    }

    proptest! {
        #[test]
        fn inertia_never_increases(
            raw in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40),
            k in 1usize..4,
            seed in 0u64..100,
        ) {
            let pts: Vec<Vec<f64>> = raw.iter().map(|&(a, b)| vec![a, b]).collect();
            let k = k.min(pts.len());
            let r = kmeans(&pts, k, None, &KMeansOptions { seed, ..Default::default() }).unwrap();
            for w in r.history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9);
            }
            prop_assert!(r.assignments.iter().all(|&c| c < k));
        }
    }
}
