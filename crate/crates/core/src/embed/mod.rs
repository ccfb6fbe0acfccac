//! Sentence and skill-descriptor embeddings behind a pluggable provider,
//! plus cosine similarity.
//!
//! The pretrained model the scores were designed around is not part of this
//! repository; it lives behind a wire protocol (HTTP or stdio), a file
//! cache, or the deterministic test provider. All vectors are widened to
//! f64 on ingest and validated finite with nonzero norm, so everything
//! downstream is a pure function of (texts -> vectors).
//!
//! Texts are normalized (lowercased, whitespace-collapsed) before hashing,
//! both for the test provider's seed and for cache-file keys.

mod providers;

pub use providers::{
    build_provider, write_cache_file, CacheProvider, HttpProvider, StdioProvider, TestProvider,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("provider unavailable (batch {batch_index}): {message}")]
    ProviderUnavailable { batch_index: usize, message: String },
    #[error("dimension mismatch (batch {batch_index}): expected {expected}, got {got}")]
    DimensionMismatch {
        batch_index: usize,
        expected: usize,
        got: usize,
    },
    #[error("provider timed out after {seconds}s (batch {batch_index})")]
    Timeout { batch_index: usize, seconds: f64 },
    #[error("vector contains a non-finite entry (batch {batch_index})")]
    NonFinite { batch_index: usize },
    #[error("zero-norm vector (batch {batch_index})")]
    ZeroNormVector { batch_index: usize },
    #[error("cosine dimension mismatch: {0} vs {1}")]
    CosineDimensionMismatch(usize, usize),
    #[error("cosine of a zero-norm vector")]
    CosineZeroNorm,
    #[error("bad provider config: {0}")]
    BadConfig(String),
}

/// Fixed-length vector of finite 64-bit reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    /// Validates finiteness; zero vectors are allowed here and rejected at
    /// the batch boundary where the failing batch index is known.
    pub fn new(values: Vec<f64>) -> Result<Self, String> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err("non-finite entry".into());
        }
        Ok(EmbeddingVector { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Cosine similarity dot(a,b)/(|a||b|). Symmetric, in [-1, 1] up to
/// rounding of order 1e-12 for unit-scale inputs.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::CosineDimensionMismatch(a.dim(), b.dim()));
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.values.iter().zip(&b.values) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(EmbedError::CosineZeroNorm);
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

/// Provider kinds; see [`build_provider`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Http,
    Stdio,
    Cache,
    Test,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    /// Endpoint URL (http), command path (stdio), or cache file path.
    #[serde(default)]
    pub endpoint_or_path: String,
    pub dim: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: f64,
    /// Seed for the deterministic test provider.
    #[serde(default)]
    pub seed: u64,
}

fn default_batch_size() -> usize {
    64
}

fn default_timeout_secs() -> f64 {
    30.0
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            kind: ProviderKind::Test,
            endpoint_or_path: String::new(),
            dim: 768,
            batch_size: default_batch_size(),
            timeout_secs: default_timeout_secs(),
            seed: 0,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dim < 1 {
            return Err(EmbedError::BadConfig("dim must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(EmbedError::BadConfig("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// An embedding backend. Implementations must be deterministic within a
/// session: the same text yields the same vector.
pub trait EmbeddingProvider: Send + Sync {
    fn dim(&self) -> usize;
    /// Stable identifier used for cache keys and manifests.
    fn provider_id(&self) -> String;
    /// Embeds one batch; `batch_index` is only used to annotate errors.
    fn embed_raw(&self, texts: &[String], batch_index: usize) -> Result<Vec<Vec<f64>>, EmbedError>;
}

/// Embeds `texts` in `batch_size` chunks through `provider`, validating
/// shape, finiteness, and nonzero norm. Output order matches input order,
/// so chunking (or issuing chunks concurrently and reassembling by index)
/// never changes the result.
pub fn embed_batch(
    texts: &[String],
    provider: &dyn EmbeddingProvider,
    batch_size: usize,
) -> Result<Vec<EmbeddingVector>, EmbedError> {
    let batch_size = batch_size.max(1);
    let mut out = Vec::with_capacity(texts.len());
    for (batch_index, chunk) in texts.chunks(batch_size).enumerate() {
        let raw = provider.embed_raw(chunk, batch_index)?;
        if raw.len() != chunk.len() {
            return Err(EmbedError::ProviderUnavailable {
                batch_index,
                message: format!("provider returned {} vectors for {} texts", raw.len(), chunk.len()),
            });
        }
        for values in raw {
            if values.len() != provider.dim() {
                return Err(EmbedError::DimensionMismatch {
                    batch_index,
                    expected: provider.dim(),
                    got: values.len(),
                });
            }
            let vector = EmbeddingVector::new(values)
                .map_err(|_| EmbedError::NonFinite { batch_index })?;
            if vector.l2_norm() == 0.0 {
                return Err(EmbedError::ZeroNormVector { batch_index });
            }
            out.push(vector);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(values: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn cosine_identity_antipodal_orthogonal() {
        let a = v(&[0.3, -0.4, 0.5]);
        let neg: Vec<f64> = a.values().iter().map(|x| -x).collect();
        assert!((cosine(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine(&a, &v(&neg)).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(cosine(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(
            cosine(&v(&[1.0]), &v(&[1.0, 2.0])),
            Err(EmbedError::CosineDimensionMismatch(1, 2))
        ));
        assert!(matches!(
            cosine(&v(&[0.0, 0.0]), &v(&[1.0, 2.0])),
            Err(EmbedError::CosineZeroNorm)
        ));
    }

    #[test]
    fn cosine_scale_invariance() {
        let a = v(&[0.2, 0.9, -0.1, 0.4]);
        let b = v(&[-0.5, 0.3, 0.8, 0.1]);
        let scaled: Vec<f64> = a.values().iter().map(|x| x * 37.5).collect();
        let base = cosine(&a, &b).unwrap();
        let after = cosine(&v(&scaled), &b).unwrap();
        assert!((base - after).abs() < 1e-12);
    }

    #[test]
    fn non_finite_vectors_rejected() {
        assert!(EmbeddingVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(EmbeddingVector::new(vec![f64::INFINITY]).is_err());
    }
}
