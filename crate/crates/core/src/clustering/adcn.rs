//! Automatic cluster-center detection from density and separation.

use rayon::prelude::*;

use super::density::{distance, DensityProfile};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct CenterDetection<T> {
    pub delta: Vec<T>,
    pub gamma: Vec<T>,
    pub mu: T,
    pub omega: T,
    /// Ordered by descending γ, ties by index.
    pub centers: Vec<usize>,
}

impl<T: Scalar> CenterDetection<T> {
    pub fn is_center(&self, i: usize) -> bool {
        self.centers.contains(&i)
    }
}

/// Centers are points whose γ exceeds the mean by more than five standard
/// deviations.
pub fn detect_centers<T: Scalar>(profile: &DensityProfile, points: &[Vec<T>]) -> CenterDetection<T> {
    detect_centers_with(profile, points, 5.0)
}

pub fn detect_centers_with<T: Scalar>(
    profile: &DensityProfile,
    points: &[Vec<T>],
    n_sigma: f64,
) -> CenterDetection<T> {
    let n = points.len();
    let rho = &profile.rho;
    let top = profile.max();
    let first_top = rho.iter().position(|&r| r == top);

    let mut delta: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| {
            if Some(i) == first_top {
                return T::zero();
            }
            let eligible = |j: usize| {
                if rho[i] == top {
                    j < i && rho[j] == top
                } else {
                    rho[j] > rho[i]
                }
            };
            (0..n)
                .filter(|&j| eligible(j))
                .map(|j| distance(&points[i], &points[j]))
                .fold(T::infinity(), T::min)
        })
        .collect();
    if let Some(f) = first_top {
        delta[f] = delta.iter().copied().fold(T::zero(), T::max);
    }

    let gamma: Vec<T> = rho.iter().zip(&delta).map(|(&r, &d)| T::of_usize(r) * d).collect();
    let nf = T::of_usize(n.max(1));
    let mu = gamma.iter().copied().sum::<T>() / nf;
    let omega = (gamma.iter().map(|&g| (g - mu) * (g - mu)).sum::<T>() / nf).sqrt();
    let cut = mu + T::of(n_sigma) * omega;

    let mut centers: Vec<usize> = (0..n).filter(|&i| gamma[i] > cut).collect();
    if centers.is_empty() && n > 0 {
        // nothing stands out: take every point tied at the top γ, or just the
        // first point when all γ vanish (coincident data)
        let top = gamma.iter().copied().fold(T::zero(), T::max);
        if top > T::zero() {
            centers.extend((0..n).filter(|&i| gamma[i] == top));
        } else {
            centers.push(0);
        }
    }
    centers.sort_by(|&a, &b| gamma[b].partial_cmp(&gamma[a]).unwrap().then(a.cmp(&b)));
    CenterDetection {
        delta,
        gamma,
        mu,
        omega,
        centers,
    }
}
