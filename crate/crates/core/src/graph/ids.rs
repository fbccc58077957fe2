use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Namespace {
    User,
    Item,
    Category,
}

impl fmt::Display for Namespace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Namespace::User => "user",
            Namespace::Item => "item",
            Namespace::Category => "category",
        })
    }
}

/// A node of one of the three node sets, addressed by its dense index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub namespace: Namespace,
    pub index: u32,
}

impl NodeId {
    pub fn new(namespace: Namespace, index: u32) -> Self {
        NodeId { namespace, index }
    }
}

/// Bijection between external ids and dense 0-based indices, assigned in
/// order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdMap {
    namespace: Namespace,
    externals: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl IdMap {
    pub fn new(namespace: Namespace) -> Self {
        IdMap {
            namespace,
            externals: Vec::new(),
            lookup: HashMap::new(),
        }
    }

    pub fn namespace(&self) -> Namespace {
        self.namespace
    }

    pub fn intern(&mut self, external: &str) -> u32 {
        if let Some(&idx) = self.lookup.get(external) {
            return idx;
        }
        let idx = u32::try_from(self.externals.len()).expect("more than u32::MAX ids");
        self.externals.push(external.to_owned());
        self.lookup.insert(external.to_owned(), idx);
        idx
    }

    pub fn get(&self, external: &str) -> Option<u32> {
        self.lookup.get(external).copied()
    }

    pub fn external(&self, index: u32) -> &str {
        &self.externals[index as usize]
    }

    pub fn len(&self) -> usize {
        self.externals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.externals.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> {
        self.externals
            .iter()
            .enumerate()
            .map(|(i, s)| (i as u32, s.as_str()))
    }

    /// `internal_index<TAB>external_id` per line.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, ext) in self.iter() {
            writeln!(out, "{i}\t{ext}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(namespace: Namespace, input: R, origin: &str) -> Result<Self> {
        let mut map = IdMap::new(namespace);
        for (n, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            if line.is_empty() {
                continue;
            }
            let (idx, ext) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, n + 1, "expected `index<TAB>external_id`"))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::parse(origin, n + 1, format!("bad index `{idx}`")))?;
            if idx != map.len() {
                return Err(Error::parse(origin, n + 1, "indices must be dense and ordered"));
            }
            if map.get(ext).is_some() {
                return Err(Error::parse(origin, n + 1, format!("duplicate id `{ext}`")));
            }
            map.intern(ext);
        }
        Ok(map)
    }
}
