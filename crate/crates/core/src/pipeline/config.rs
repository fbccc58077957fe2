//! TOML pipeline configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clustering::ClusterParams;
use crate::embedding::{TrainConfig, WalkConfig};
use crate::error::{Error, Result};
use crate::graph::ProjectionOptions;
use crate::recommend::BaseRecommender;

/// A column picked by 0-based position or by header name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Column {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    /// A directory holding `u.data` and `u.item`.
    Movielens,
    /// Delimited interaction file plus an optional item-category file.
    Delimited,
}

/// Expected entity counts; ingest fails when any stated count differs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Manifest {
    pub users: Option<usize>,
    pub items: Option<usize>,
    pub interactions: Option<usize>,
    pub categories: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub format: DataFormat,
    /// MovieLens directory.
    pub path: Option<PathBuf>,
    pub interactions: Option<PathBuf>,
    pub categories: Option<PathBuf>,
    pub delimiter: String,
    pub header: bool,
    pub user_column: Column,
    pub item_column: Column,
    pub rating_column: Option<Column>,
    pub timestamp_column: Option<Column>,
    pub category_item_column: Column,
    pub category_column: Column,
    pub expect: Manifest,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            format: DataFormat::Movielens,
            path: None,
            interactions: None,
            categories: None,
            delimiter: ",".into(),
            header: true,
            user_column: Column::Index(0),
            item_column: Column::Index(1),
            rating_column: None,
            timestamp_column: None,
            category_item_column: Column::Index(0),
            category_column: Column::Index(1),
            expect: Manifest::default(),
        }
    }
}

impl DataConfig {
    pub fn delimiter_byte(&self) -> Result<u8> {
        match self.delimiter.as_str() {
            "\\t" | "tab" => Ok(b'\t'),
            d if d.len() == 1 => Ok(d.as_bytes()[0]),
            d => Err(Error::Config(format!("delimiter must be one byte, got {d:?}"))),
        }
    }
}

/// Walk settings; the seed is derived per fold and side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkSection {
    pub return_p: f64,
    pub in_out_q: f64,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub alias_budget: usize,
}

impl Default for WalkSection {
    fn default() -> Self {
        let w = WalkConfig::default();
        WalkSection {
            return_p: w.return_p,
            in_out_q: w.in_out_q,
            walk_length: w.walk_length,
            walks_per_node: w.walks_per_node,
            alias_budget: w.alias_budget,
        }
    }
}

impl WalkSection {
    pub fn to_config(&self, seed: u64) -> WalkConfig {
        WalkConfig {
            return_p: self.return_p,
            in_out_q: self.in_out_q,
            walk_length: self.walk_length,
            walks_per_node: self.walks_per_node,
            seed,
            alias_budget: self.alias_budget,
        }
    }
}

/// Skip-gram settings; seed and worker count come from the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub dim: usize,
    pub window: usize,
    pub negatives_per_positive: usize,
    pub epochs: usize,
    pub initial_learning_rate: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            dim: t.dim,
            window: t.window,
            negatives_per_positive: t.negatives_per_positive,
            epochs: t.epochs,
            initial_learning_rate: t.initial_learning_rate,
        }
    }
}

impl TrainSection {
    pub fn to_config(&self, seed: u64, threads: usize) -> TrainConfig {
        TrainConfig {
            dim: self.dim,
            window: self.window,
            negatives_per_positive: self.negatives_per_positive,
            epochs: self.epochs,
            initial_learning_rate: self.initial_learning_rate,
            seed,
            threads,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecommendSection {
    pub base: BaseRecommender,
}

impl Default for RecommendSection {
    fn default() -> Self {
        RecommendSection {
            base: BaseRecommender::ubcf(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub folds: usize,
    /// List lengths to score; recommendations are produced at the largest.
    pub cutoffs: Vec<usize>,
    /// Cutoff shown first in summaries.
    pub top_n: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            folds: 5,
            cutoffs: vec![5, 10, 20],
            top_n: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Worker threads; 0 uses every core. One thread is bitwise reproducible.
    pub threads: usize,
    pub cache_dir: Option<PathBuf>,
    pub data: DataConfig,
    pub projection: ProjectionOptions,
    pub walk: WalkSection,
    pub train: TrainSection,
    pub cluster: ClusterParams,
    pub recommend: RecommendSection,
    pub eval: EvalSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            threads: 1,
            cache_dir: None,
            data: DataConfig::default(),
            projection: ProjectionOptions::default(),
            walk: WalkSection::default(),
            train: TrainSection::default(),
            cluster: ClusterParams::default(),
            recommend: RecommendSection::default(),
            eval: EvalSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads a file; relative data and cache paths resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with_overrides(Some(path), &[])
    }

    /// Loads an optional file, then applies `dotted.key=value` overrides. A
    /// value that is not valid TOML is taken as a string. Paths in the file
    /// resolve against its directory; paths given as overrides resolve
    /// against the working directory.
    pub fn load_with_overrides(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = toml::Table::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
            resolve_paths(&mut table, p.parent().unwrap_or(Path::new(".")));
        }
        for o in overrides {
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
            let value = match format!("v = {raw}").parse::<toml::Table>() {
                Ok(mut t) => t.remove("v").expect("parsed key"),
                Err(_) => toml::Value::String(raw.to_string()),
            };
            set_dotted(&mut table, key.trim(), value)?;
        }
        let cfg: PipelineConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.walk.to_config(0).validate()?;
        self.train.to_config(0, 1).validate()?;
        self.cluster.validate()?;
        self.data.delimiter_byte()?;
        if self.eval.folds < 2 {
            return Err(Error::Config("eval.folds must be at least 2".into()));
        }
        if self.eval.cutoffs.is_empty() || self.eval.cutoffs.contains(&0) || self.eval.top_n == 0 {
            return Err(Error::Config("eval cutoffs must be positive and non-empty".into()));
        }
        Ok(())
    }

    /// Every list length that gets scored, ascending, including `top_n`.
    pub fn cutoffs(&self) -> Vec<usize> {
        let mut c = self.eval.cutoffs.clone();
        c.push(self.eval.top_n);
        c.sort_unstable();
        c.dedup();
        c
    }
}

fn resolve_paths(table: &mut toml::Table, base: &Path) {
    let fix = |v: Option<&mut toml::Value>| {
        if let Some(toml::Value::String(s)) = v {
            if Path::new(s.as_str()).is_relative() {
                *s = base.join(s.as_str()).to_string_lossy().into_owned();
            }
        }
    };
    fix(table.get_mut("cache_dir"));
    if let Some(toml::Value::Table(d)) = table.get_mut("data") {
        for k in ["path", "interactions", "categories"] {
            fix(d.get_mut(k));
        }
    }
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| Error::Config(format!("empty override key {key:?}")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?}: {p} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
