//! Stage orchestration with caching.

use log::info;

use super::cache::StageCache;
use super::config::PipelineConfig;
use crate::clustering::{
    cluster_points, read_assignments, write_assignments, write_diagnostics, ClusterModel, ClusterRun,
};
use crate::data::{Dataset, Interaction};
use crate::embedding::{generate_walks, mix_seed, train_sgns, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::eval::{score, split, CutoffResult, MetricsReport};
use crate::graph::{build_user_category, item_category_graph, project, user_item_graph, ProjectionGraph, Side};
use crate::recommend::{recommend_original, two_phase, TopNList, TwoPhaseInput};
use crate::{Embedding, Recommendations};

/// Fold index used for stage seeds when working on the full dataset.
pub const FULL_DATA: u64 = u64::MAX;

fn side_tag(side: Side) -> u64 {
    match side {
        Side::User => 0,
        Side::Item => 1,
    }
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::User => "user",
        Side::Item => "item",
    }
}

fn json<S: serde::Serialize>(x: &S) -> String {
    serde_json::to_string(x).expect("config serializes")
}

fn text<F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>>(f: F) -> String {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("artifacts are UTF-8")
}

/// Every stage output for one side of one training set.
#[derive(Debug, Clone)]
pub struct SideArtifacts {
    pub projection: ProjectionGraph,
    pub embedding: Embedding,
    pub clusters: ClusterModel,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub report: MetricsReport,
    pub cache_hits: usize,
    pub cache_misses: usize,
}

/// Runs stages against one dataset under one configuration. Each artifact is
/// keyed by a hash of its parent's key and the configuration subtree that
/// shapes it, so a change invalidates the stage and everything after it.
pub struct Pipeline<'a> {
    cfg: &'a PipelineConfig,
    dataset: &'a Dataset,
    cache: StageCache,
}

impl<'a> Pipeline<'a> {
    pub fn new(cfg: &'a PipelineConfig, dataset: &'a Dataset) -> Self {
        Pipeline {
            cfg,
            dataset,
            cache: StageCache::new(cfg.cache_dir.clone()),
        }
    }

    pub fn cache(&self) -> &StageCache {
        &self.cache
    }

    fn sgns_threads(&self) -> usize {
        match self.cfg.threads {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            t => t,
        }
    }

    /// Returns the projection and its cache key.
    pub fn projection(&self, train: &Dataset, side: Side) -> Result<(ProjectionGraph, String)> {
        let key = StageCache::key(&["project", &train.digest(), side_name(side), &json(&self.cfg.projection)]);
        let n = match side {
            Side::User => train.n_users(),
            Side::Item => train.n_items(),
        };
        if let Some(t) = self.cache.load("project", &key, "tsv") {
            let g = ProjectionGraph::read_edge_list(side.namespace(), n, t.as_bytes(), "cache")?;
            return Ok((g, key));
        }
        let ui = user_item_graph(&train.interactions, train.n_users(), train.n_items());
        let ic = item_category_graph(&train.item_categories, train.n_items(), train.n_categories());
        let g = match side {
            Side::User => {
                let uc = build_user_category(&ui, &ic)?;
                project(&ui, &uc.graph, side, &self.cfg.projection)?
            }
            Side::Item => project(&ui, &ic, side, &self.cfg.projection)?,
        };
        self.cache.store("project", &key, "tsv", &text(|b| g.write_edge_list(b)))?;
        Ok((g, key))
    }

    /// Nodes without edges, or a graph too small to train on, get zero rows.
    pub fn embedding(
        &self,
        graph: &ProjectionGraph,
        parent: &str,
        side: Side,
        fold: u64,
    ) -> Result<(Embedding, String)> {
        let walk = self.cfg.walk.to_config(mix_seed(self.cfg.seed, fold, 4 * side_tag(side)));
        let train = self
            .cfg
            .train
            .to_config(mix_seed(self.cfg.seed, fold, 4 * side_tag(side) + 1), self.sgns_threads());
        let key = StageCache::key(&["embed", parent, &json(&walk), &json(&train)]);
        if let Some(t) = self.cache.load("embed", &key, "txt") {
            return Ok((EmbeddingMatrix::read_text(side.namespace(), t.as_bytes(), "cache")?, key));
        }
        let walks = generate_walks(graph, &walk)?;
        let m = match train_sgns::<f32>(&walks, graph.n_nodes(), side.namespace(), &train) {
            Ok(m) => m,
            Err(Error::EmptyCorpus) => EmbeddingMatrix::zeros(side.namespace(), graph.n_nodes(), train.dim),
            Err(e) => return Err(e),
        };
        self.cache.store("embed", &key, "txt", &text(|b| m.write_text(b)))?;
        Ok((m, key))
    }

    fn cluster_seed(&self, side: Side, fold: u64) -> u64 {
        mix_seed(self.cfg.seed, fold, 4 * side_tag(side) + 2)
    }

    /// Clusters from scratch, keeping the per-node diagnostics.
    pub fn cluster_run(&self, emb: &Embedding, side: Side, fold: u64) -> Result<ClusterRun> {
        let points: Vec<Vec<f64>> = emb.rows().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
        cluster_points(&points, &self.cfg.cluster, self.cluster_seed(side, fold))
    }

    pub fn clusters(
        &self,
        emb: &Embedding,
        parent: &str,
        side: Side,
        fold: u64,
    ) -> Result<(ClusterModel, String)> {
        let seed = self.cluster_seed(side, fold);
        let key = StageCache::key(&["cluster", parent, &json(&self.cfg.cluster), &seed.to_string()]);
        let cold = (0..emb.n_nodes()).find(|&i| emb.is_zero_row(i));
        if let Some(t) = self.cache.load("cluster", &key, "tsv") {
            let mut m = read_assignments(t.as_bytes(), "cache")?;
            m.cold_cluster = cold.map(|i| m.assignments[i]);
            return Ok((m, key));
        }
        let run = self.cluster_run(emb, side, fold)?;
        self.cache
            .store("cluster", &key, "tsv", &text(|b| write_assignments(&run.model, b)))?;
        self.cache
            .store("cluster", &key, "diag.csv", &text(|b| write_diagnostics(&run.diagnostics, b)))?;
        Ok((run.model, key))
    }

    /// Projection, embedding and clustering for one side.
    pub fn side(&self, train: &Dataset, side: Side, fold: u64) -> Result<(SideArtifacts, String)> {
        let (projection, pk) = self.projection(train, side).map_err(|e| e.in_stage("project"))?;
        let (embedding, ek) = self
            .embedding(&projection, &pk, side, fold)
            .map_err(|e| e.in_stage("embed"))?;
        let (clusters, ck) = self
            .clusters(&embedding, &ek, side, fold)
            .map_err(|e| e.in_stage("cluster"))?;
        info!(
            "{} side: {} edges, {} clusters{}",
            side_name(side),
            projection.edges().len(),
            clusters.k,
            if clusters.cold_cluster.is_some() { " (incl. cold)" } else { "" }
        );
        Ok((
            SideArtifacts {
                projection,
                embedding,
                clusters,
            },
            ck,
        ))
    }

    fn lists(&self, stage: &str, key: &str, compute: impl FnOnce() -> TopNList<f64>) -> Result<TopNList<f64>> {
        let ds = self.dataset;
        if let Some(t) = self.cache.load(stage, key, "csv") {
            return TopNList::read_csv(t.as_bytes(), &ds.users, &ds.items, "cache");
        }
        let lists = compute();
        self.cache
            .store(stage, key, "csv", &text(|b| lists.write_csv(&ds.users, &ds.items, b)))?;
        Ok(lists)
    }

    /// Two-phase and unclustered recommendation lists of length `n`.
    pub fn recommendations(
        &self,
        train: &Dataset,
        users: &ClusterModel,
        user_key: &str,
        items: &ClusterModel,
        item_key: &str,
        n: usize,
        fold: u64,
    ) -> Result<(Recommendations, Recommendations)> {
        let base = &self.cfg.recommend.base;
        let seed = mix_seed(self.cfg.seed, fold, 9);
        let digest = train.digest();
        let rk = StageCache::key(&["recommend", user_key, item_key, &json(base), &n.to_string(), &seed.to_string()]);
        let clustered = self.lists("recommend", &rk, || {
            two_phase(
                &TwoPhaseInput {
                    train: &train.interactions,
                    n_users: train.n_users(),
                    n_items: train.n_items(),
                    implicit: train.implicit,
                    users,
                    items,
                },
                base,
                n,
                seed,
            )
        })?;
        let ok = StageCache::key(&["original", &digest, &json(base), &n.to_string(), &seed.to_string()]);
        let original = self.lists("original", &ok, || {
            recommend_original(&train.interactions, train.n_users(), train.n_items(), train.implicit, base, n, seed)
        })?;
        Ok((clustered, original))
    }

    /// Cross-validates the two-phase recommender against the unclustered
    /// base recommender.
    pub fn run(&self) -> Result<PipelineOutcome> {
        let cfg = self.cfg;
        let ds = self.dataset;
        let plan = split(&ds.interactions, cfg.eval.folds, mix_seed(cfg.seed, 0x5b17, 0)).map_err(|e| e.in_stage("split"))?;
        let cutoffs = cfg.cutoffs();
        let n_max = *cutoffs.last().expect("validated non-empty");
        let mut results: Vec<CutoffResult> = cutoffs
            .iter()
            .map(|&n| CutoffResult {
                n,
                original: Vec::new(),
                clustered: Vec::new(),
            })
            .collect();
        for fold in 0..cfg.eval.folds {
            info!("fold {}/{}", fold + 1, cfg.eval.folds);
            let train_rows: Vec<Interaction> = plan.train(&ds.interactions, fold);
            let test = plan.test_sets(&ds.interactions, fold, ds.n_users());
            let train = ds.with_interactions(train_rows);
            let (users, uk) = self.side(&train, Side::User, fold as u64)?;
            let (items, ik) = self.side(&train, Side::Item, fold as u64)?;
            let (clustered, original) = self
                .recommendations(&train, &users.clusters, &uk, &items.clusters, &ik, n_max, fold as u64)
                .map_err(|e| e.in_stage("recommend"))?;
            for r in &mut results {
                r.clustered.push(score(&clustered, &test, r.n).map_err(|e| e.in_stage("evaluate"))?);
                r.original.push(score(&original, &test, r.n).map_err(|e| e.in_stage("evaluate"))?);
            }
        }
        Ok(PipelineOutcome {
            report: MetricsReport {
                base: cfg.recommend.base.name().to_string(),
                folds: cfg.eval.folds,
                seed: cfg.seed,
                primary_n: cfg.eval.top_n,
                cutoffs: results,
            },
            cache_hits: self.cache.hits(),
            cache_misses: self.cache.misses(),
        })
    }
}

/// Runs `f` on a dedicated pool with `threads` workers (0 = all cores).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Ingest-free entry point: cross-validates `dataset` under `cfg`.
pub fn run_pipeline(cfg: &PipelineConfig, dataset: &Dataset) -> Result<PipelineOutcome> {
    cfg.validate()?;
    with_threads(cfg.threads, || Pipeline::new(cfg, dataset).run())?
}
