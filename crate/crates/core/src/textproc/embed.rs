//! Dense document embeddings: tf-idf weighted signed random projection.
//!
//! Each term maps to a pseudo-random sign vector in `{-1, +1}^d` derived from
//! a seeded hash of the term. A document vector is the tf·idf weighted sum of
//! its terms' sign vectors, L2-normalized.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{cosine, BowVector};
use crate::catalog::{ObjectId, SimilarityEdge};
use crate::error::{LakeError, Result};

pub const DEFAULT_DIMS: usize = 64;
pub const DEFAULT_SIMILARITY_K: usize = 10;

/// A document embedding. The zero vector stands for an empty document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub model_id: String,
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn dims(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Anything that turns a bag of words into a fixed-width vector. The hashed
/// projection below is the built-in backend; a trained model can implement
/// this trait instead.
pub trait Embedder {
    fn model_id(&self) -> &str;
    fn dims(&self) -> usize;
    fn embed(&self, bow: &BowVector) -> EmbeddingVector;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    pub model_id: String,
    pub dims: usize,
    pub seed: u64,
    /// Number of documents the idf table was computed from.
    pub doc_count: usize,
    pub idf: BTreeMap<String, f64>,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl EmbeddingModel {
    /// Idf for a term absent from the model's corpus (df = 0).
    pub fn unseen_idf(&self) -> f64 {
        (self.doc_count.max(1) as f64).ln() + 1.0
    }

    pub fn idf(&self, term: &str) -> f64 {
        self.idf.get(term).copied().unwrap_or_else(|| self.unseen_idf())
    }

    /// Writes the term's ±1 projection pattern into `out`.
    pub fn sign_vector(&self, term: &str, out: &mut [f64]) {
        let mut state = fnv1a(term.as_bytes()) ^ self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let mut bits = 0u64;
        for (i, slot) in out.iter_mut().enumerate() {
            if i % 64 == 0 {
                bits = splitmix64(&mut state);
            }
            *slot = if (bits >> (i % 64)) & 1 == 1 { 1.0 } else { -1.0 };
        }
    }
}

impl Embedder for EmbeddingModel {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn dims(&self) -> usize {
        self.dims
    }

    fn embed(&self, bow: &BowVector) -> EmbeddingVector {
        embed(bow, self)
    }
}

/// Computes idf = ln(N / (1 + df)) + 1 over the corpus and fixes the
/// projection by `seed`.
pub fn build_embedding_model(corpus: &[&BowVector], dims: usize, seed: u64) -> Result<EmbeddingModel> {
    if corpus.is_empty() {
        return Err(LakeError::precondition("embedding model needs a non-empty corpus"));
    }
    if dims == 0 {
        return Err(LakeError::invalid("embedding dimension must be positive"));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for bow in corpus {
        for term in bow.counts.keys() {
            *df.entry(term.as_str()).or_default() += 1;
        }
    }
    let n = corpus.len() as f64;
    let idf: BTreeMap<String, f64> = df
        .into_iter()
        .map(|(t, d)| (t.to_string(), (n / (1.0 + d as f64)).ln() + 1.0))
        .collect();

    let mut hasher = Sha256::new();
    hasher.update(format!("hash-projection|{dims}|{seed}|{}", corpus.len()));
    for (t, v) in &idf {
        hasher.update(t.as_bytes());
        hasher.update(v.to_bits().to_le_bytes());
    }
    let model_id = format!("hp-{}", &hex::encode(hasher.finalize())[..16]);

    Ok(EmbeddingModel {
        model_id,
        dims,
        seed,
        doc_count: corpus.len(),
        idf,
    })
}

/// Raw-count tf times idf, summed over sign vectors, then L2-normalized.
pub fn embed(bow: &BowVector, model: &EmbeddingModel) -> EmbeddingVector {
    let mut acc = vec![0.0; model.dims];
    let mut signs = vec![0.0; model.dims];
    for (term, count) in &bow.counts {
        let w = f64::from(*count) * model.idf(term);
        model.sign_vector(term, &mut signs);
        for (a, s) in acc.iter_mut().zip(&signs) {
            *a += w * s;
        }
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for a in &mut acc {
            *a /= norm;
        }
    }
    EmbeddingVector {
        model_id: model.model_id.clone(),
        values: acc,
    }
}

/// For every document, directed edges to its `k` nearest neighbours by
/// cosine (self excluded). Ties are broken by ascending object id.
pub fn build_similarity_links(
    embeddings: &BTreeMap<ObjectId, EmbeddingVector>,
    k: usize,
) -> Result<Vec<SimilarityEdge>> {
    let mut model_ids = embeddings.values().map(|e| e.model_id.as_str());
    if let Some(first) = model_ids.next() {
        if let Some(other) = model_ids.find(|m| *m != first) {
            return Err(LakeError::precondition(format!(
                "embeddings come from different models ({first} vs {other})"
            )));
        }
    }
    let items: Vec<(ObjectId, &EmbeddingVector)> = embeddings.iter().map(|(id, e)| (*id, e)).collect();
    let per_source: Vec<Result<Vec<SimilarityEdge>>> = items
        .par_iter()
        .map(|(src, emb)| {
            let mut scored = Vec::with_capacity(items.len().saturating_sub(1));
            for (dst, other) in &items {
                if dst == src {
                    continue;
                }
                scored.push((*dst, cosine(&emb.values, &other.values)?));
            }
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            Ok(scored
                .into_iter()
                .take(k)
                .enumerate()
                .map(|(i, (dst, weight))| SimilarityEdge {
                    src: *src,
                    dst,
                    weight,
                    rank: i as u32 + 1,
                })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for edges in per_source {
        out.extend(edges?);
    }
    Ok(out)
}
