//! Biased second-order random walks over a weighted projection graph.
//!
//! Leaving `v` after arriving from `t`, the unnormalized probability of
//! moving to neighbor `x` is `w(v, x) * alpha`, with `alpha = 1/p` when
//! `x == t`, `1` when `x` is adjacent to `t` and `1/q` otherwise. The first
//! step from the start node is proportional to edge weight.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::alias::AliasTable;
use crate::error::{Error, Result};
use crate::graph::ProjectionGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    pub return_p: f64,
    pub in_out_q: f64,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub seed: u64,
    /// Upper bound on the number of entries across all per-edge alias
    /// tables. Above it, transitions are drawn by scanning the neighbor list.
    pub alias_budget: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            return_p: 1.0,
            in_out_q: 1.0,
            walk_length: 80,
            walks_per_node: 10,
            seed: 0,
            alias_budget: 20_000_000,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.return_p > 0.0 && self.in_out_q > 0.0) {
            return Err(Error::Config("return_p and in_out_q must be positive".into()));
        }
        if self.walk_length == 0 || self.walks_per_node == 0 {
            return Err(Error::Config("walk_length and walks_per_node must be positive".into()));
        }
        Ok(())
    }
}

/// Symmetric CSR adjacency with neighbor lists sorted by index.
#[derive(Debug, Clone)]
pub struct WalkGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
}

impl WalkGraph {
    pub fn from_projection(graph: &ProjectionGraph) -> Self {
        Self::from_edges(
            graph.n_nodes(),
            graph.edges().iter().map(|e| (e.i, e.j, e.w as f64)),
        )
    }

    pub fn from_edges<I: IntoIterator<Item = (u32, u32, f64)>>(n: usize, edges: I) -> Self {
        let mut lists: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for (a, b, w) in edges {
            lists[a as usize].push((b, w));
            lists[b as usize].push((a, w));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        for mut l in lists {
            l.sort_unstable_by_key(|e| e.0);
            for (t, w) in l {
                targets.push(t);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        WalkGraph {
            offsets,
            targets,
            weights,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.targets[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    #[inline]
    pub fn neighbor_weights(&self, v: u32) -> &[f64] {
        &self.weights[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    #[inline]
    pub fn degree(&self, v: u32) -> usize {
        self.offsets[v as usize + 1] - self.offsets[v as usize]
    }

    #[inline]
    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    /// CSR position of the directed edge `a -> b`.
    #[inline]
    fn edge_index(&self, a: u32, b: u32) -> Option<usize> {
        self.neighbors(a)
            .binary_search(&b)
            .ok()
            .map(|p| self.offsets[a as usize] + p)
    }

    /// Unnormalized transition weights out of `cur` having arrived from `prev`.
    pub fn transition_weights(&self, prev: u32, cur: u32, p: f64, q: f64) -> Vec<f64> {
        self.neighbors(cur)
            .iter()
            .zip(self.neighbor_weights(cur))
            .map(|(&x, &w)| w * bias(self, prev, x, p, q))
            .collect()
    }
}

#[inline]
fn bias(g: &WalkGraph, prev: u32, next: u32, p: f64, q: f64) -> f64 {
    if next == prev {
        1.0 / p
    } else if g.has_edge(prev, next) {
        1.0
    } else {
        1.0 / q
    }
}

enum Transitions {
    /// p = q = 1: the walk is first order.
    FirstOrder,
    /// One table per directed edge, indexed by its CSR position.
    EdgeAlias(Vec<Option<AliasTable>>),
    /// Recompute the biased weights over the neighbor list at every step.
    Scan,
}

pub struct WalkSampler<'g> {
    graph: &'g WalkGraph,
    p: f64,
    q: f64,
    node_alias: Vec<Option<AliasTable>>,
    transitions: Transitions,
}

impl<'g> WalkSampler<'g> {
    pub fn new(graph: &'g WalkGraph, p: f64, q: f64, alias_budget: usize) -> Self {
        let node_alias = (0..graph.n_nodes() as u32)
            .into_par_iter()
            .map(|v| AliasTable::new(graph.neighbor_weights(v)))
            .collect();
        let transitions = if p == 1.0 && q == 1.0 {
            Transitions::FirstOrder
        } else {
            let entries: usize = (0..graph.n_nodes() as u32)
                .map(|v| graph.degree(v) * graph.degree(v))
                .sum();
            if entries <= alias_budget {
                let tables = (0..graph.n_nodes() as u32)
                    .into_par_iter()
                    .flat_map_iter(|prev| {
                        graph.neighbors(prev).iter().map(move |&cur| {
                            AliasTable::new(&graph.transition_weights(prev, cur, p, q))
                        })
                    })
                    .collect();
                Transitions::EdgeAlias(tables)
            } else {
                log::info!("second-order alias tables need {entries} entries; scanning neighbors instead");
                Transitions::Scan
            }
        };
        WalkSampler {
            graph,
            p,
            q,
            node_alias,
            transitions,
        }
    }

    pub fn uses_edge_alias(&self) -> bool {
        matches!(self.transitions, Transitions::EdgeAlias(_))
    }

    /// First step out of `start`; `None` for isolated nodes.
    pub fn first_step<R: Rng + ?Sized>(&self, start: u32, rng: &mut R) -> Option<u32> {
        let table = self.node_alias[start as usize].as_ref()?;
        Some(self.graph.neighbors(start)[table.sample(rng)])
    }

    pub fn next_step<R: Rng + ?Sized>(&self, prev: u32, cur: u32, rng: &mut R) -> Option<u32> {
        let nbrs = self.graph.neighbors(cur);
        if nbrs.is_empty() {
            return None;
        }
        let k = match &self.transitions {
            Transitions::FirstOrder => self.node_alias[cur as usize].as_ref()?.sample(rng),
            Transitions::EdgeAlias(tables) => {
                let e = self.graph.edge_index(prev, cur)?;
                tables[e].as_ref()?.sample(rng)
            }
            Transitions::Scan => {
                let ws = self.graph.transition_weights(prev, cur, self.p, self.q);
                let total: f64 = ws.iter().sum();
                if !(total > 0.0) {
                    return None;
                }
                let mut u = rng.random::<f64>() * total;
                let mut pick = ws.len() - 1;
                for (k, w) in ws.iter().enumerate() {
                    if u < *w {
                        pick = k;
                        break;
                    }
                    u -= w;
                }
                pick
            }
        };
        Some(nbrs[k])
    }

    pub fn walk<R: Rng + ?Sized>(&self, start: u32, length: usize, rng: &mut R) -> Vec<u32> {
        let mut walk = Vec::with_capacity(length);
        walk.push(start);
        if length < 2 {
            return walk;
        }
        let Some(second) = self.first_step(start, rng) else {
            return walk;
        };
        walk.push(second);
        while walk.len() < length {
            let prev = walk[walk.len() - 2];
            let cur = walk[walk.len() - 1];
            match self.next_step(prev, cur, rng) {
                Some(x) => walk.push(x),
                None => break,
            }
        }
        walk
    }
}

/// 64-bit mix used to derive independent RNG streams from a base seed.
pub fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `walks_per_node` rounds; each round visits every non-isolated node once in
/// a seeded random order. Every walk has its own RNG stream, so the output
/// does not depend on the worker count.
pub fn generate_walks(graph: &ProjectionGraph, cfg: &WalkConfig) -> Result<Vec<Vec<u32>>> {
    cfg.validate()?;
    let wg = WalkGraph::from_projection(graph);
    Ok(generate_walks_on(&wg, cfg))
}

pub fn generate_walks_on(graph: &WalkGraph, cfg: &WalkConfig) -> Vec<Vec<u32>> {
    let sampler = WalkSampler::new(graph, cfg.return_p, cfg.in_out_q, cfg.alias_budget);
    let starts: Vec<u32> = (0..graph.n_nodes() as u32)
        .filter(|&v| graph.degree(v) > 0)
        .collect();
    let mut walks = Vec::with_capacity(starts.len() * cfg.walks_per_node);
    for round in 0..cfg.walks_per_node {
        let mut order = starts.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, round as u64, u64::MAX));
        order.shuffle(&mut rng);
        let batch: Vec<Vec<u32>> = order
            .par_iter()
            .map(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, round as u64, s as u64));
                sampler.walk(s, cfg.walk_length, &mut rng)
            })
            .collect();
        walks.extend(batch);
    }
    walks
}

pub fn write_walks<W: Write>(walks: &[Vec<u32>], mut out: W) -> std::io::Result<()> {
    for w in walks {
        let mut first = true;
        for v in w {
            if !first {
                out.write_all(b" ")?;
            }
            write!(out, "{v}")?;
            first = false;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_walks<R: BufRead>(input: R, origin: &str) -> Result<Vec<Vec<u32>>> {
    let mut walks = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        let walk = line
            .split_whitespace()
            .map(|t| {
                t.parse::<u32>()
                    .map_err(|_| Error::parse(origin, k + 1, format!("bad node index `{t}`")))
            })
            .collect::<Result<Vec<u32>>>()?;
        if !walk.is_empty() {
            walks.push(walk);
        }
    }
    Ok(walks)
}
