//! Canonical interaction and category tables with dense ids.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{IdMap, Namespace};

/// One row of an interaction file before id densification.
#[derive(Debug, Clone, PartialEq)]
pub struct RawInteraction {
    pub user: String,
    pub item: String,
    pub rating: Option<f64>,
    pub timestamp: Option<i64>,
    /// 1-based source line, for error reporting.
    pub line: usize,
}

impl RawInteraction {
    pub fn new(user: impl Into<String>, item: impl Into<String>) -> Self {
        RawInteraction {
            user: user.into(),
            item: item.into(),
            rating: None,
            timestamp: None,
            line: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interaction {
    pub user: u32,
    pub item: u32,
    pub rating: f64,
    pub timestamp: Option<i64>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub users: IdMap,
    pub items: IdMap,
    pub categories: IdMap,
    pub interactions: Vec<Interaction>,
    /// Distinct (item, category) memberships, sorted.
    pub item_categories: Vec<(u32, u32)>,
    /// True when no record carried a rating; every rating is then 1.
    pub implicit: bool,
}

impl Dataset {
    /// Densifies ids in order of first appearance. Category rows naming items
    /// with no interaction are dropped.
    pub fn from_raw(
        records: &[RawInteraction],
        item_categories: &[(String, String)],
        origin: &str,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::DatasetEmpty);
        }
        let mut users = IdMap::new(Namespace::User);
        let mut items = IdMap::new(Namespace::Item);
        let mut categories = IdMap::new(Namespace::Category);
        let implicit = records.iter().all(|r| r.rating.is_none());
        let mut interactions = Vec::with_capacity(records.len());
        for r in records {
            if r.user.is_empty() || r.item.is_empty() {
                return Err(Error::parse(origin, r.line, "empty user or item id"));
            }
            let rating = if implicit { 1.0 } else { r.rating.unwrap_or(1.0) };
            if !rating.is_finite() || rating < 0.0 {
                return Err(Error::parse(origin, r.line, format!("bad rating {rating}")));
            }
            interactions.push(Interaction {
                user: users.intern(&r.user),
                item: items.intern(&r.item),
                rating,
                timestamp: r.timestamp,
            });
        }
        let mut memberships = Vec::with_capacity(item_categories.len());
        for (item, cat) in item_categories {
            if let Some(i) = items.get(item) {
                memberships.push((i, categories.intern(cat)));
            }
        }
        memberships.sort_unstable();
        memberships.dedup();
        Ok(Dataset {
            users,
            items,
            categories,
            interactions,
            item_categories: memberships,
            implicit,
        })
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    /// Same tables restricted to a subset of interactions (a training fold).
    pub fn with_interactions(&self, interactions: Vec<Interaction>) -> Dataset {
        Dataset {
            users: self.users.clone(),
            items: self.items.clone(),
            categories: self.categories.clone(),
            interactions,
            item_categories: self.item_categories.clone(),
            implicit: self.implicit,
        }
    }

    /// Content digest over ids, interactions and memberships.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (label, map) in [("u", &self.users), ("i", &self.items), ("c", &self.categories)] {
            h.update(label.as_bytes());
            for (_, ext) in map.iter() {
                h.update(ext.as_bytes());
                h.update([0u8]);
            }
        }
        h.update(b"x");
        for it in &self.interactions {
            h.update(it.user.to_le_bytes());
            h.update(it.item.to_le_bytes());
            h.update(it.rating.to_bits().to_le_bytes());
            h.update(it.timestamp.unwrap_or(i64::MIN).to_le_bytes());
        }
        h.update(b"m");
        for (i, c) in &self.item_categories {
            h.update(i.to_le_bytes());
            h.update(c.to_le_bytes());
        }
        h.update([self.implicit as u8]);
        hex::encode(h.finalize())
    }
}
