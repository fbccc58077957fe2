//! Sparse rating blocks and top-N lists.

use std::io::Write;

use crate::data::Interaction;
use crate::error::{Error, Result};
use crate::graph::IdMap;
use crate::scalar::{cmp_score_desc, Scalar};

/// Ratings for a subset of users and items, indexed locally. Local indices
/// follow ascending global ids, so ties broken by local index agree with
/// ties broken by global id.
#[derive(Debug, Clone)]
pub struct RatingMatrix<T> {
    users: Vec<u32>,
    items: Vec<u32>,
    rows: Vec<Vec<(u32, T)>>,
    cols: Vec<Vec<(u32, T)>>,
    implicit: bool,
}

fn lookup(ids: &[u32]) -> Vec<u32> {
    let size = ids.iter().map(|&x| x as usize + 1).max().unwrap_or(0);
    let mut out = vec![u32::MAX; size];
    for (local, &g) in ids.iter().enumerate() {
        out[g as usize] = local as u32;
    }
    out
}

impl<T: Scalar> RatingMatrix<T> {
    /// Keeps interactions whose user and item are both listed. Repeated pairs
    /// keep the last rating.
    pub fn new(interactions: &[Interaction], mut users: Vec<u32>, mut items: Vec<u32>, implicit: bool) -> Self {
        users.sort_unstable();
        users.dedup();
        items.sort_unstable();
        items.dedup();
        let ul = lookup(&users);
        let il = lookup(&items);
        let mut rows: Vec<Vec<(u32, T)>> = vec![Vec::new(); users.len()];
        for it in interactions {
            let u = ul.get(it.user as usize).copied().unwrap_or(u32::MAX);
            let i = il.get(it.item as usize).copied().unwrap_or(u32::MAX);
            if u == u32::MAX || i == u32::MAX {
                continue;
            }
            let r = if implicit { T::one() } else { T::of(it.rating) };
            rows[u as usize].push((i, r));
        }
        let mut cols: Vec<Vec<(u32, T)>> = vec![Vec::new(); items.len()];
        for (u, row) in rows.iter_mut().enumerate() {
            row.reverse();
            row.sort_by_key(|e| e.0);
            row.dedup_by_key(|e| e.0);
            for &(i, r) in row.iter() {
                cols[i as usize].push((u as u32, r));
            }
        }
        RatingMatrix {
            users,
            items,
            rows,
            cols,
            implicit,
        }
    }

    /// Every user and item in `0..n_users` and `0..n_items`.
    pub fn full(interactions: &[Interaction], n_users: usize, n_items: usize, implicit: bool) -> Self {
        Self::new(
            interactions,
            (0..n_users as u32).collect(),
            (0..n_items as u32).collect(),
            implicit,
        )
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn implicit(&self) -> bool {
        self.implicit
    }

    pub fn user_id(&self, local: usize) -> u32 {
        self.users[local]
    }

    pub fn item_id(&self, local: usize) -> u32 {
        self.items[local]
    }

    pub fn user_ids(&self) -> &[u32] {
        &self.users
    }

    pub fn item_ids(&self) -> &[u32] {
        &self.items
    }

    pub fn local_user(&self, global: u32) -> Option<usize> {
        self.users.binary_search(&global).ok()
    }

    pub fn local_item(&self, global: u32) -> Option<usize> {
        self.items.binary_search(&global).ok()
    }

    /// `(local item, rating)` sorted by item.
    pub fn row(&self, u: usize) -> &[(u32, T)] {
        &self.rows[u]
    }

    /// `(local user, rating)` sorted by user.
    pub fn col(&self, i: usize) -> &[(u32, T)] {
        &self.cols[i]
    }

    pub fn seen_mask(&self, u: usize) -> Vec<bool> {
        let mut m = vec![false; self.items.len()];
        for &(i, _) in &self.rows[u] {
            m[i as usize] = true;
        }
        m
    }

    /// Local items by descending interaction count, ties by index.
    pub fn popularity_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.items.len()).collect();
        order.sort_by(|&a, &b| self.cols[b].len().cmp(&self.cols[a].len()).then(a.cmp(&b)));
        order
    }
}

/// Sorts `(local item, score)` pairs best-first and keeps `n`.
pub(crate) fn top_n<T: Scalar>(mut scored: Vec<(usize, T)>, n: usize) -> Vec<(usize, T)> {
    scored.sort_by(|a, b| cmp_score_desc(*a, *b));
    scored.truncate(n);
    scored
}

/// Appends items from `order` not already present or excluded until `list`
/// holds `n` entries. Appended scores sit strictly below the current tail.
pub(crate) fn pad<T: Scalar>(
    list: &mut Vec<(usize, T)>,
    order: impl IntoIterator<Item = usize>,
    excluded: &[bool],
    n: usize,
) {
    if list.len() >= n {
        return;
    }
    let floor = list.last().map(|e| e.1).unwrap_or(T::zero());
    let mut present: std::collections::HashSet<usize> = list.iter().map(|e| e.0).collect();
    let mut j = 0usize;
    for i in order {
        if list.len() >= n {
            break;
        }
        if excluded[i] || !present.insert(i) {
            continue;
        }
        j += 1;
        list.push((i, floor - T::of_usize(j)));
    }
}

/// Ranked recommendations for every user, by global user index. Items are
/// global indices.
#[derive(Debug, Clone, PartialEq)]
pub struct TopNList<T> {
    pub lists: Vec<Vec<(u32, T)>>,
}

impl<T: Scalar> TopNList<T> {
    pub fn empty(n_users: usize) -> Self {
        TopNList {
            lists: vec![Vec::new(); n_users],
        }
    }

    pub fn n_users(&self) -> usize {
        self.lists.len()
    }

    /// The first `n` items of user `u`.
    pub fn items(&self, u: usize, n: usize) -> impl Iterator<Item = u32> + '_ {
        self.lists[u].iter().take(n).map(|e| e.0)
    }

    /// CSV with header `user_id,rank,item_id,score`; ranks start at 1.
    pub fn write_csv<W: Write>(&self, users: &IdMap, items: &IdMap, mut out: W) -> std::io::Result<()> {
        writeln!(out, "user_id,rank,item_id,score")?;
        for (u, list) in self.lists.iter().enumerate() {
            for (r, &(i, s)) in list.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{}",
                    users.external(u as u32),
                    r + 1,
                    items.external(i),
                    s
                )?;
            }
        }
        Ok(())
    }
}

impl TopNList<f64> {
    /// Reads the CSV written by [`TopNList::write_csv`].
    pub fn read_csv<R: std::io::BufRead>(input: R, users: &IdMap, items: &IdMap, origin: &str) -> Result<Self> {
        let mut out = TopNList::empty(users.len());
        for (ln, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            if ln == 0 || line.trim().is_empty() {
                continue;
            }
            let bad = |m: &str| Error::parse(origin, ln + 1, m.to_string());
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad("expected user_id,rank,item_id,score"));
            }
            let u = users.get(f[0]).ok_or_else(|| bad("unknown user"))?;
            let i = items.get(f[2]).ok_or_else(|| bad("unknown item"))?;
            let rank: usize = f[1].parse().map_err(|_| bad("bad rank"))?;
            let score: f64 = f[3].parse().map_err(|_| bad("bad score"))?;
            let list = &mut out.lists[u as usize];
            if rank != list.len() + 1 {
                return Err(bad("ranks must be consecutive per user"));
            }
            list.push((i, score));
        }
        Ok(out)
    }
}
