//! Refined representations of textual objects under `_refined/docs/`:
//!
//! * `bow.txt` – `<id>\t<total tokens>\t<term>:<count> ...`
//! * `embeddings.txt` – `<id>\t<model id>\t<base64 little-endian f64s>`
//! * `model.json` – the embedding model the vectors were computed with.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;

use crate::catalog::ObjectId;
use crate::error::{IoContext, LakeError, Result};
use crate::textproc::{BowVector, EmbeddingModel, EmbeddingVector};

const BOW_FILE: &str = "bow.txt";
const EMBEDDING_FILE: &str = "embeddings.txt";
const MODEL_FILE: &str = "model.json";

#[derive(Debug, Default)]
pub struct DocStore {
    dir: PathBuf,
    bows: BTreeMap<ObjectId, BowVector>,
    embeddings: BTreeMap<ObjectId, EmbeddingVector>,
    model: Option<EmbeddingModel>,
}

impl DocStore {
    pub const SUBDIR: &'static str = "docs";

    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let mut store = DocStore {
            dir: dir.clone(),
            ..Default::default()
        };
        let bow_path = dir.join(BOW_FILE);
        if bow_path.exists() {
            let text = fs::read_to_string(&bow_path).at(&bow_path)?;
            for (i, line) in text.lines().enumerate() {
                let (id, bow) = parse_bow_line(line)
                    .ok_or_else(|| LakeError::corrupt(&bow_path, format!("line {}: malformed bag of words", i + 1)))?;
                store.bows.insert(id, bow);
            }
        }
        let emb_path = dir.join(EMBEDDING_FILE);
        if emb_path.exists() {
            let text = fs::read_to_string(&emb_path).at(&emb_path)?;
            for (i, line) in text.lines().enumerate() {
                let (id, emb) = parse_embedding_line(line)
                    .ok_or_else(|| LakeError::corrupt(&emb_path, format!("line {}: malformed embedding", i + 1)))?;
                store.embeddings.insert(id, emb);
            }
        }
        let model_path = dir.join(MODEL_FILE);
        if model_path.exists() {
            let text = fs::read_to_string(&model_path).at(&model_path)?;
            store.model =
                Some(serde_json::from_str(&text).map_err(|e| LakeError::corrupt(&model_path, e.to_string()))?);
        }
        Ok(store)
    }

    pub fn bow_locator(id: ObjectId) -> String {
        format!("{}/{BOW_FILE}#{id}", Self::SUBDIR)
    }

    pub fn embedding_locator(id: ObjectId) -> String {
        format!("{}/{EMBEDDING_FILE}#{id}", Self::SUBDIR)
    }

    pub fn bow(&self, id: ObjectId) -> Option<&BowVector> {
        self.bows.get(&id)
    }

    pub fn bows(&self) -> &BTreeMap<ObjectId, BowVector> {
        &self.bows
    }

    pub fn embedding(&self, id: ObjectId) -> Option<&EmbeddingVector> {
        self.embeddings.get(&id)
    }

    pub fn embeddings(&self) -> &BTreeMap<ObjectId, EmbeddingVector> {
        &self.embeddings
    }

    pub fn model(&self) -> Option<&EmbeddingModel> {
        self.model.as_ref()
    }

    pub fn put_bow(&mut self, id: ObjectId, bow: BowVector) {
        self.bows.insert(id, bow);
    }

    pub fn put_embedding(&mut self, id: ObjectId, emb: EmbeddingVector) {
        self.embeddings.insert(id, emb);
    }

    pub fn set_model(&mut self, model: EmbeddingModel) {
        self.model = Some(model);
    }

    /// Rewrites all three files.
    pub fn save(&self) -> Result<()> {
        fs::create_dir_all(&self.dir).at(&self.dir)?;
        let mut bow = String::new();
        for (id, b) in &self.bows {
            let _ = write!(bow, "{}\t{}\t", id.0, b.total_tokens);
            for (i, (t, c)) in b.counts.iter().enumerate() {
                if i > 0 {
                    bow.push(' ');
                }
                let _ = write!(bow, "{t}:{c}");
            }
            bow.push('\n');
        }
        write_atomic(&self.dir.join(BOW_FILE), &bow)?;

        let mut emb = String::new();
        for (id, e) in &self.embeddings {
            let bytes: Vec<u8> = e.values.iter().flat_map(|v| v.to_le_bytes()).collect();
            let _ = writeln!(emb, "{}\t{}\t{}", id.0, e.model_id, STANDARD.encode(bytes));
        }
        write_atomic(&self.dir.join(EMBEDDING_FILE), &emb)?;

        if let Some(m) = &self.model {
            write_atomic(&self.dir.join(MODEL_FILE), &serde_json::to_string(m)?)?;
        }
        Ok(())
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).at(&tmp)?;
    fs::rename(&tmp, path).at(path)
}

fn parse_bow_line(line: &str) -> Option<(ObjectId, BowVector)> {
    let mut parts = line.splitn(3, '\t');
    let id = ObjectId(parts.next()?.parse().ok()?);
    let total_tokens = parts.next()?.parse().ok()?;
    let mut counts = BTreeMap::new();
    for pair in parts.next()?.split(' ').filter(|p| !p.is_empty()) {
        let (t, c) = pair.rsplit_once(':')?;
        counts.insert(t.to_string(), c.parse().ok()?);
    }
    Some((id, BowVector { counts, total_tokens }))
}

fn parse_embedding_line(line: &str) -> Option<(ObjectId, EmbeddingVector)> {
    let mut parts = line.splitn(3, '\t');
    let id = ObjectId(parts.next()?.parse().ok()?);
    let model_id = parts.next()?.to_string();
    let bytes = STANDARD.decode(parts.next()?).ok()?;
    if bytes.len() % 8 != 0 {
        return None;
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Some((id, EmbeddingVector { model_id, values }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = DocStore::open(dir.path()).unwrap();
        let mut counts = BTreeMap::new();
        counts.insert("data".to_string(), 3);
        counts.insert("lake".to_string(), 1);
        s.put_bow(
            ObjectId(4),
            BowVector {
                counts,
                total_tokens: 7,
            },
        );
        s.put_bow(ObjectId(5), BowVector::default());
        s.put_embedding(
            ObjectId(4),
            EmbeddingVector {
                model_id: "m".into(),
                values: vec![0.1, -2.5e-300, f64::MIN_POSITIVE],
            },
        );
        s.save().unwrap();
        let t = DocStore::open(dir.path()).unwrap();
        assert_eq!(t.bows(), s.bows());
        assert_eq!(t.embeddings(), s.embeddings());
        assert!(t.model().is_none());
    }
}
