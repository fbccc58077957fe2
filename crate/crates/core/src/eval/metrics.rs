//! Top-N accuracy metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recommend::TopNList;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub hr: f64,
    pub arhr: f64,
    /// Users with at least one test item.
    pub users: usize,
}

impl Metrics {
    pub fn values(&self) -> [f64; 4] {
        [self.precision, self.recall, self.hr, self.arhr]
    }

    pub const NAMES: [&'static str; 4] = ["precision", "recall", "hr", "arhr"];

    /// Element-wise mean; `users` is the rounded mean.
    pub fn mean(all: &[Metrics]) -> Metrics {
        let n = all.len().max(1) as f64;
        let s = |f: fn(&Metrics) -> f64| all.iter().map(f).sum::<f64>() / n;
        Metrics {
            precision: s(|m| m.precision),
            recall: s(|m| m.recall),
            hr: s(|m| m.hr),
            arhr: s(|m| m.arhr),
            users: (all.iter().map(|m| m.users).sum::<usize>() as f64 / n).round() as usize,
        }
    }
}

/// Scores the first `n` entries of every list against `test[u]`, averaging
/// over users with test items. Hits count once per distinct item; ARHR sums
/// the reciprocal rank of every hit.
pub fn score<T: Scalar>(topn: &TopNList<T>, test: &[Vec<u32>], n: usize) -> Result<Metrics> {
    let mut m = Metrics::default();
    for (u, t) in test.iter().enumerate() {
        if t.is_empty() {
            continue;
        }
        m.users += 1;
        let mut hits = 0usize;
        let mut rr = 0.0;
        let mut counted: Vec<u32> = Vec::new();
        if let Some(list) = topn.lists.get(u) {
            for (rank, &(i, _)) in list.iter().take(n).enumerate() {
                if t.binary_search(&i).is_ok() && !counted.contains(&i) {
                    counted.push(i);
                    hits += 1;
                    rr += 1.0 / (rank + 1) as f64;
                }
            }
        }
        m.precision += hits as f64 / n as f64;
        m.recall += hits as f64 / t.len() as f64;
        m.hr += (hits > 0) as u8 as f64;
        m.arhr += rr;
    }
    if m.users == 0 {
        return Err(Error::EmptyTestSet);
    }
    let d = m.users as f64;
    m.precision /= d;
    m.recall /= d;
    m.hr /= d;
    m.arhr /= d;
    Ok(m)
}
