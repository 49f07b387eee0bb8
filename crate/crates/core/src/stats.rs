//! On-disk size of raw data against the metadata built from it.

use std::path::Path;

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::docstore::DocStore;
use crate::error::{LakeError, Result};
use crate::lake::{CATALOG_DIR, GROUPINGS_FILE, INDEX_DIR, RAW_DIR, REFINED_DIR, SEMANTICS_DIR};
use crate::tablestore::TableStore;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataBytes {
    /// Catalog snapshot, journal and the grouping configuration.
    pub catalog: u64,
    pub refined_tables: u64,
    /// Bags of words, embeddings and the embedding model.
    pub vectors: u64,
    pub indexes: u64,
    pub semantics: u64,
}

impl MetadataBytes {
    pub fn total(&self) -> u64 {
        self.catalog + self.refined_tables + self.vectors + self.indexes + self.semantics
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LakeStats {
    pub raw_bytes: u64,
    pub metadata: MetadataBytes,
    pub metadata_bytes: u64,
    /// metadata / raw; zero for an empty lake.
    pub ratio: f64,
}

/// Sum of regular file sizes below `path` (0 if it does not exist).
pub fn dir_bytes(path: &Path) -> Result<u64> {
    if !path.exists() {
        return Ok(0);
    }
    let mut total = 0;
    for entry in WalkDir::new(path) {
        let entry = entry.map_err(|e| LakeError::invalid(format!("walking {}: {e}", path.display())))?;
        if entry.file_type().is_file() {
            total += entry
                .metadata()
                .map_err(|e| LakeError::invalid(format!("stat {}: {e}", entry.path().display())))?
                .len();
        }
    }
    Ok(total)
}

impl LakeStats {
    pub fn measure(root: &Path) -> Result<LakeStats> {
        let refined = root.join(REFINED_DIR);
        let metadata = MetadataBytes {
            catalog: dir_bytes(&root.join(CATALOG_DIR))? + dir_bytes(&root.join(GROUPINGS_FILE))?,
            refined_tables: dir_bytes(&refined.join(TableStore::SUBDIR))?,
            vectors: dir_bytes(&refined.join(DocStore::SUBDIR))?,
            indexes: dir_bytes(&root.join(INDEX_DIR))?,
            semantics: dir_bytes(&root.join(SEMANTICS_DIR))?,
        };
        let raw_bytes = dir_bytes(&root.join(RAW_DIR))?;
        let metadata_bytes = metadata.total();
        Ok(LakeStats {
            raw_bytes,
            metadata,
            metadata_bytes,
            ratio: if raw_bytes == 0 {
                0.0
            } else {
                metadata_bytes as f64 / raw_bytes as f64
            },
        })
    }
}
