use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bipartite::BipartiteGraph;
use super::ids::Namespace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    User,
    Item,
}

impl Side {
    pub fn namespace(self) -> Namespace {
        match self {
            Side::User => Namespace::User,
            Side::Item => Namespace::Item,
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.namespace().fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionOptions {
    /// Multiply common-neighbor counts by common-category counts. When off,
    /// `ca` is 1 for every pair with `ck > 0` and the projection is purely
    /// interaction-based.
    pub enrichment: bool,
    /// Give pairs involving a category-less node `ca = 1` instead of 0.
    pub uncategorized_ca_floor: bool,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions {
            enrichment: true,
            uncategorized_ca_floor: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProjectionEdge {
    pub i: u32,
    pub j: u32,
    pub ck: u32,
    pub ca: u32,
    pub w: u64,
}

/// Undirected one-mode network. Edges are stored once with `i < j`, sorted.
/// The node set is `0..n`, isolated nodes included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionGraph {
    namespace: Namespace,
    n: usize,
    edges: Vec<ProjectionEdge>,
}

impl ProjectionGraph {
    pub fn new(namespace: Namespace, n: usize, mut edges: Vec<ProjectionEdge>) -> Result<Self> {
        for e in &edges {
            if e.i >= e.j || e.j as usize >= n {
                return Err(Error::Config(format!("bad projection edge ({}, {}) for n={n}", e.i, e.j)));
            }
            if e.w == 0 {
                return Err(Error::Config(format!("zero-weight edge ({}, {})", e.i, e.j)));
            }
        }
        edges.sort_unstable_by_key(|e| (e.i, e.j));
        if edges.windows(2).any(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(Error::Config("duplicate projection edge".into()));
        }
        Ok(ProjectionGraph { namespace, n, edges })
    }

    pub fn namespace(&self) -> Namespace {
        self.namespace
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[ProjectionEdge] {
        &self.edges
    }

    pub fn edge(&self, a: u32, b: u32) -> Option<&ProjectionEdge> {
        let key = (a.min(b), a.max(b));
        self.edges
            .binary_search_by_key(&key, |e| (e.i, e.j))
            .ok()
            .map(|p| &self.edges[p])
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for e in &self.edges {
            d[e.i as usize] += 1;
            d[e.j as usize] += 1;
        }
        d
    }

    /// `i<TAB>j<TAB>ck<TAB>ca<TAB>w` per edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.edges {
            writeln!(out, "{}\t{}\t{}\t{}\t{}", e.i, e.j, e.ck, e.ca, e.w)?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(namespace: Namespace, n: usize, input: R, origin: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (k, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 5 {
                return Err(Error::parse(origin, k + 1, "expected 5 tab-separated fields"));
            }
            let num = |s: &str| -> Result<u64> {
                s.parse::<u64>()
                    .map_err(|_| Error::parse(origin, k + 1, format!("bad integer `{s}`")))
            };
            let e = ProjectionEdge {
                i: num(f[0])? as u32,
                j: num(f[1])? as u32,
                ck: num(f[2])? as u32,
                ca: num(f[3])? as u32,
                w: num(f[4])?,
            };
            if e.w != e.ck as u64 * e.ca as u64 {
                return Err(Error::parse(origin, k + 1, "w must equal ck*ca"));
            }
            edges.push(e);
        }
        ProjectionGraph::new(namespace, n, edges)
    }
}

/// Per-node counter reused across rows.
struct RowCounter {
    counts: Vec<u32>,
    touched: Vec<u32>,
}

impl RowCounter {
    fn new(n: usize) -> Self {
        RowCounter {
            counts: vec![0; n],
            touched: Vec::new(),
        }
    }

    #[inline]
    fn bump(&mut self, j: u32) {
        let c = &mut self.counts[j as usize];
        if *c == 0 {
            self.touched.push(j);
        }
        *c += 1;
    }

    fn clear(&mut self) {
        for &j in &self.touched {
            self.counts[j as usize] = 0;
        }
        self.touched.clear();
    }
}

/// Counts `|N(i) ∩ N(j)|` for every `j > i` reachable through a shared neighbor.
fn count_common(
    row: &[(u32, u32)],
    through: &[Vec<(u32, u32)>],
    i: u32,
    counter: &mut RowCounter,
) {
    for &(mid, _) in row {
        let members = &through[mid as usize];
        let start = members.partition_point(|e| e.0 <= i);
        for &(j, _) in &members[start..] {
            counter.bump(j);
        }
    }
}

/// Category-enriched one-mode projection of `primary` onto `side`.
///
/// `primary` is the user-item graph; `category` is the user-category graph
/// for [`Side::User`] and the item-category graph for [`Side::Item`].
pub fn project(
    primary: &BipartiteGraph,
    category: &BipartiteGraph,
    side: Side,
    opts: &ProjectionOptions,
) -> Result<ProjectionGraph> {
    let ns = side.namespace();
    let (own, through) = match (primary.side(ns), primary.opposite(ns)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Config(format!("primary graph has no {ns} side"))),
    };
    if category.left_namespace() != ns || category.right_namespace() != Namespace::Category {
        return Err(Error::Config(format!(
            "category graph must map {ns} nodes to categories, got {}-{}",
            category.left_namespace(),
            category.right_namespace()
        )));
    }
    let n = own.len();
    if category.n_left() < n {
        return Err(Error::Config(format!(
            "category graph covers {} {ns} nodes, primary has {n}",
            category.n_left()
        )));
    }
    let cat_rows = category.side(ns).expect("checked above");
    let cat_members = category.opposite(ns).expect("checked above");

    let rows: Vec<Vec<ProjectionEdge>> = (0..n as u32)
        .into_par_iter()
        .map_init(
            || (RowCounter::new(n), RowCounter::new(n)),
            |(ck, ca), i| {
                count_common(&own[i as usize], through, i, ck);
                if opts.enrichment {
                    count_common(&cat_rows[i as usize], cat_members, i, ca);
                }
                let i_uncategorized = cat_rows[i as usize].is_empty();
                let mut out = Vec::with_capacity(ck.touched.len());
                for &j in &ck.touched {
                    let common_items = ck.counts[j as usize];
                    let common_cats = if !opts.enrichment {
                        1
                    } else {
                        let c = ca.counts[j as usize];
                        let floor = opts.uncategorized_ca_floor
                            && (i_uncategorized || cat_rows[j as usize].is_empty());
                        if c == 0 && floor {
                            1
                        } else {
                            c
                        }
                    };
                    let w = common_items as u64 * common_cats as u64;
                    if w > 0 {
                        out.push(ProjectionEdge {
                            i,
                            j,
                            ck: common_items,
                            ca: common_cats,
                            w,
                        });
                    }
                }
                out.sort_unstable_by_key(|e| e.j);
                ck.clear();
                ca.clear();
                out
            },
        )
        .collect();
    Ok(ProjectionGraph {
        namespace: ns,
        n,
        edges: rows.into_iter().flatten().collect(),
    })
}
