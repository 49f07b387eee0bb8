//! Shared setup for the benchmarks: a fixture lake in a temporary directory.

use lake_core::fixture::{self, FixtureSpec};
use lake_core::{Lake, Result, SidecarPolicy};
use tempfile::TempDir;

/// An ingested fixture lake; the directory lives as long as the value.
pub struct BenchLake {
    pub lake: Lake,
    _dir: TempDir,
}

pub fn fixture_lake(spec: &FixtureSpec) -> Result<BenchLake> {
    let dir = tempfile::tempdir().map_err(|e| lake_core::LakeError::Io {
        path: std::env::temp_dir(),
        source: e,
    })?;
    fixture::generate(&dir.path().join("src"), spec)?;
    let mut lake = Lake::init(dir.path().join("lake"))?;
    lake.ingest(dir.path().join("src"), SidecarPolicy::Merge)?;
    Ok(BenchLake { lake, _dir: dir })
}
