//! Per-fold and mean results for the clustered and unclustered models.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::Metrics;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffResult {
    pub n: usize,
    pub original: Vec<Metrics>,
    pub clustered: Vec<Metrics>,
}

impl CutoffResult {
    pub fn original_mean(&self) -> Metrics {
        Metrics::mean(&self.original)
    }

    pub fn clustered_mean(&self) -> Metrics {
        Metrics::mean(&self.clustered)
    }

    /// Relative change of the clustered mean over the original mean, per
    /// metric. A zero baseline yields infinity (or 0 when both are zero).
    pub fn improvement(&self) -> [f64; 4] {
        let o = self.original_mean().values();
        let c = self.clustered_mean().values();
        let mut out = [0.0; 4];
        for k in 0..4 {
            out[k] = if o[k] == 0.0 {
                if c[k] == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (c[k] - o[k]) / o[k]
            };
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub base: String,
    pub folds: usize,
    pub seed: u64,
    /// The cutoff reported first in summaries.
    pub primary_n: usize,
    pub cutoffs: Vec<CutoffResult>,
}

impl MetricsReport {
    pub fn cutoff(&self, n: usize) -> Option<&CutoffResult> {
        self.cutoffs.iter().find(|c| c.n == n)
    }

    pub fn primary(&self) -> &CutoffResult {
        self.cutoff(self.primary_n).unwrap_or(&self.cutoffs[0])
    }

    /// Rows `model,n,fold,precision,recall,hr,arhr`; fold is an index or
    /// `mean`, and `improvement` rows hold relative changes.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("model,n,fold,precision,recall,hr,arhr\n");
        let row = |s: &mut String, model: &str, n: usize, fold: &str, v: [f64; 4]| {
            let _ = writeln!(s, "{model},{n},{fold},{},{},{},{}", v[0], v[1], v[2], v[3]);
        };
        for c in &self.cutoffs {
            for (name, per) in [("original", &c.original), ("clustered", &c.clustered)] {
                for (f, m) in per.iter().enumerate() {
                    row(&mut s, name, c.n, &f.to_string(), m.values());
                }
                row(&mut s, name, c.n, "mean", Metrics::mean(per).values());
            }
            row(&mut s, "improvement", c.n, "mean", c.improvement());
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "base: {}  folds: {}  seed: {}", self.base, self.folds, self.seed);
        let _ = writeln!(
            s,
            "{:>4}  {:<11}{:>11}{:>11}{:>11}{:>11}",
            "N", "model", "precision", "recall", "hr", "arhr"
        );
        for c in &self.cutoffs {
            let rows = [
                ("original", c.original_mean().values(), false),
                ("clustered", c.clustered_mean().values(), false),
                ("change", c.improvement(), true),
            ];
            for (name, v, pct) in rows {
                let _ = write!(s, "{:>4}  {:<11}", c.n, name);
                for x in v {
                    if pct {
                        let _ = write!(s, "{:>10.2}%", 100.0 * x);
                    } else {
                        let _ = write!(s, "{:>11.4}", x);
                    }
                }
                s.push('\n');
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(p: f64) -> Metrics {
        Metrics {
            precision: p,
            recall: 2.0 * p,
            hr: 0.5,
            arhr: 0.0,
            users: 3,
        }
    }

    fn report() -> MetricsReport {
        MetricsReport {
            base: "ubcf".into(),
            folds: 2,
            seed: 1,
            primary_n: 10,
            cutoffs: vec![CutoffResult {
                n: 10,
                original: vec![m(0.1), m(0.3)],
                clustered: vec![m(0.2), m(0.4)],
            }],
        }
    }

    #[test]
    fn improvement_is_relative() {
        let r = report();
        let imp = r.primary().improvement();
        assert!((imp[0] - 0.5).abs() < 1e-12);
        assert_eq!(imp[2], 0.0);
        assert_eq!(imp[3], 0.0);
    }

    #[test]
    fn outputs_render() {
        let r = report();
        let csv = r.to_csv();
        assert!(csv.starts_with("model,n,fold,precision,recall,hr,arhr\noriginal,10,0,0.1,0.2,0.5,0\n"));
        assert!(csv.contains("improvement,10,mean,"));
        let back: MetricsReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_table().contains("clustered"));
    }
}
