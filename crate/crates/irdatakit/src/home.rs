//! Resolution of the shared data directory.
//!
//! All cached content (source files, docstores, checkpoint indexes, slice
//! caches) lives under one home directory so that multiple tools share a
//! single copy of each dataset. The directory is taken from the `IRDS_HOME`
//! environment variable and defaults to `~/.ir_datasets`.

use std::path::{Path, PathBuf};

pub const HOME_ENV: &str = "IRDS_HOME";
pub const DEFAULT_DIR: &str = ".ir_datasets";

/// The resolved data home. Per-dataset content lives in a subdirectory
/// equal to the dataset ID, with `/` as the path separator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Home {
    root: PathBuf,
}

impl Home {
    /// Uses `root` directly, bypassing the environment.
    pub fn at(root: impl Into<PathBuf>) -> Home {
        Home { root: root.into() }
    }

    /// Resolves from `$IRDS_HOME`, falling back to `~/.ir_datasets`.
    pub fn from_env() -> Home {
        if let Some(dir) = std::env::var_os(HOME_ENV) {
            if !dir.is_empty() {
                return Home::at(PathBuf::from(dir));
            }
        }
        let base = std::env::var_os("HOME")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."));
        Home {
            root: base.join(DEFAULT_DIR),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Directory for one dataset, e.g. `<home>/cord19/trec-covid`.
    pub fn dataset_dir(&self, dataset_id: &str) -> PathBuf {
        let mut dir = self.root.clone();
        for segment in dataset_id.split('/') {
            dir.push(segment);
        }
        dir
    }

    /// Joins a home-relative path (always `/`-separated).
    pub fn join(&self, rel: &str) -> PathBuf {
        let mut p = self.root.clone();
        for segment in rel.split('/') {
            p.push(segment);
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_dir_splits_segments() {
        let home = Home::at("/data");
        assert_eq!(
            home.dataset_dir("cord19/trec-covid"),
            PathBuf::from("/data/cord19/trec-covid")
        );
    }
}
