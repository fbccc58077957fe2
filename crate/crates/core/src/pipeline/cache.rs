//! Content-addressed store for stage artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Artifacts live at `<root>/<stage>/<key>.<ext>`. Without a root every
/// lookup misses and nothing is written.
#[derive(Debug, Default)]
pub struct StageCache {
    root: Option<PathBuf>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl StageCache {
    pub fn new(root: Option<PathBuf>) -> Self {
        StageCache {
            root,
            ..Default::default()
        }
    }

    /// Hex SHA-256 over length-prefixed parts, so part boundaries matter.
    pub fn key(parts: &[&str]) -> String {
        let mut h = Sha256::new();
        for p in parts {
            h.update((p.len() as u64).to_le_bytes());
            h.update(p.as_bytes());
        }
        hex::encode(h.finalize())
    }

    fn path(&self, stage: &str, key: &str, ext: &str) -> Option<PathBuf> {
        self.root.as_ref().map(|r| r.join(stage).join(format!("{key}.{ext}")))
    }

    pub fn load(&self, stage: &str, key: &str, ext: &str) -> Option<String> {
        let hit = self.path(stage, key, ext).and_then(|p| fs::read_to_string(p).ok());
        let counter = if hit.is_some() { &self.hits } else { &self.misses };
        counter.fetch_add(1, Ordering::Relaxed);
        hit
    }

    /// Writes through a temporary file and a rename so readers never see a
    /// partial artifact.
    pub fn store(&self, stage: &str, key: &str, ext: &str, content: &str) -> Result<()> {
        let Some(path) = self.path(stage, key, ext) else {
            return Ok(());
        };
        let dir = path.parent().expect("artifact path has a parent");
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let tmp = tmp_path(&path);
        fs::write(&tmp, content).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }
}

fn tmp_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(format!(".tmp{}", std::process::id()));
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_respect_boundaries() {
        assert_ne!(StageCache::key(&["ab", "c"]), StageCache::key(&["a", "bc"]));
        assert_eq!(StageCache::key(&["x"]), StageCache::key(&["x"]));
    }

    #[test]
    fn store_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let c = StageCache::new(Some(dir.path().to_path_buf()));
        assert_eq!(c.load("embed", "k", "txt"), None);
        c.store("embed", "k", "txt", "1 2\n").unwrap();
        assert_eq!(c.load("embed", "k", "txt").as_deref(), Some("1 2\n"));
        assert_eq!((c.hits(), c.misses()), (1, 1));
    }

    #[test]
    fn disabled_cache_never_hits() {
        let c = StageCache::new(None);
        c.store("s", "k", "txt", "x").unwrap();
        assert_eq!(c.load("s", "k", "txt"), None);
    }
}
