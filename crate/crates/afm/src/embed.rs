//! Message and query embeddings plus cosine similarity.
//!
//! The local backend is a dependency-free hashing embedder: lowercase
//! alphanumeric tokens are FNV-1a hashed into buckets and the bucket counts
//! are L2-normalized. Plain (unsigned) counts keep similarities nonnegative
//! for overlapping vocabularies.

use std::sync::Arc;

use crate::error::{AfmError, Result};
use crate::gateway::Gateway;
use crate::model::Message;

pub trait Embedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>>;
    fn dimension(&self) -> usize;
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
/// Fixed seed mixed into the FNV offset basis; changing it changes every
/// bucket assignment, so it is a constant, not a config knob.
const HASH_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

fn fnv1a_seeded(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET ^ HASH_SEED;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Lowercased maximal alphanumeric runs (Unicode).
pub fn lex_tokens(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            tokens.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

/// Deterministic, platform-independent local embedder.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dimension: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder { dimension: 256 }
    }
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        HashingEmbedder { dimension }
    }
}

impl Embedder for HashingEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let mut v = vec![0.0f64; self.dimension];
        for token in lex_tokens(text) {
            let bucket = (fnv1a_seeded(token.as_bytes()) % self.dimension as u64) as usize;
            v[bucket] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x /= norm;
            }
        }
        Ok(v)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }
}

/// Remote embedding backend over an OpenAI-compatible endpoint.
pub struct RemoteEmbedder {
    gateway: Arc<dyn Gateway>,
    model: String,
    dimension: usize,
}

impl RemoteEmbedder {
    pub fn new(gateway: Arc<dyn Gateway>, model: impl Into<String>, dimension: usize) -> Self {
        RemoteEmbedder {
            gateway,
            model: model.into(),
            dimension,
        }
    }
}

impl Embedder for RemoteEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let mut vecs = self.gateway.embed(&[text.to_string()], &self.model)?;
        Ok(vecs.remove(0))
    }

    fn dimension(&self) -> usize {
        self.dimension
    }
}

/// Standard cosine; zero-norm inputs map to 0 by convention.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(AfmError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

/// Returns the cached embedding, computing and storing it on first use.
/// Backend errors surface to the caller and leave the cache unchanged.
pub fn embedding_of<'m>(message: &'m mut Message, embedder: &dyn Embedder) -> Result<&'m [f64]> {
    if message.embedding.is_none() {
        let v = embedder.embed(&message.text)?;
        message.embedding = Some(v);
    }
    Ok(message.embedding.as_deref().expect("just cached"))
}
