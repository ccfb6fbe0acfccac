//! The four embedding backends: deterministic test provider, exact-match
//! file cache, HTTP bridge, and stdio bridge.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EmbedError, EmbeddingProvider, EmbeddingVector, ProviderConfig, ProviderKind};
use crate::hashing::sha256_hex;
use crate::textnorm;

/// Builds the provider named by the config.
pub fn build_provider(cfg: &ProviderConfig) -> Result<Box<dyn EmbeddingProvider>, EmbedError> {
    cfg.validate()?;
    match cfg.kind {
        ProviderKind::Test => Ok(Box::new(TestProvider::new(cfg.dim, cfg.seed)?)),
        ProviderKind::Cache => Ok(Box::new(CacheProvider::load(
            Path::new(&cfg.endpoint_or_path),
            cfg.dim,
        )?)),
        ProviderKind::Http => Ok(Box::new(HttpProvider::new(
            cfg.endpoint_or_path.clone(),
            cfg.dim,
            cfg.timeout_secs,
        )?)),
        ProviderKind::Stdio => Ok(Box::new(StdioProvider::spawn(
            Path::new(&cfg.endpoint_or_path),
            cfg.dim,
            cfg.timeout_secs,
        )?)),
    }
}

/// Deterministic stand-in for a real sentence-embedding model: seeds a
/// ChaCha stream with SHA-256(seed, normalized text), draws `dim` standard
/// normals, and L2-normalizes. Identical texts give bit-identical vectors;
/// distinct texts are near-orthogonal in expectation for large `dim`.
pub struct TestProvider {
    dim: usize,
    seed: u64,
}

impl TestProvider {
    pub fn new(dim: usize, seed: u64) -> Result<Self, EmbedError> {
        if dim < 2 {
            return Err(EmbedError::BadConfig(
                "test provider requires dim >= 2".into(),
            ));
        }
        Ok(TestProvider { dim, seed })
    }

    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let normalized = textnorm::normalize(text);
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(normalized.as_bytes());
        let digest: [u8; 32] = hasher.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(digest);
        let mut values: Vec<f64> = (0..self.dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut values {
                *v /= norm;
            }
        } else {
            values[0] = 1.0;
        }
        values
    }
}

impl EmbeddingProvider for TestProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn provider_id(&self) -> String {
        format!("test:dim={}:seed={}", self.dim, self.seed)
    }

    fn embed_raw(&self, texts: &[String], _batch_index: usize) -> Result<Vec<Vec<f64>>, EmbedError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// Cache file key: SHA-256 of the normalized text, hex-encoded.
pub fn cache_key(text: &str) -> String {
    sha256_hex(textnorm::normalize(text).as_bytes())
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    vector: Vec<f64>,
}

/// Exact-match file cache: JSONL lines `{"key": sha256-hex, "vector": [..]}`.
pub struct CacheProvider {
    map: HashMap<String, Vec<f64>>,
    dim: usize,
    path: PathBuf,
}

impl CacheProvider {
    pub fn load(path: &Path, dim: usize) -> Result<Self, EmbedError> {
        let file = std::fs::File::open(path).map_err(|e| EmbedError::ProviderUnavailable {
            batch_index: 0,
            message: format!("cannot open cache file {}: {e}", path.display()),
        })?;
        let mut map = HashMap::new();
        for (line_no, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| EmbedError::ProviderUnavailable {
                batch_index: 0,
                message: format!("cache read error at line {}: {e}", line_no + 1),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: CacheLine =
                serde_json::from_str(&line).map_err(|e| EmbedError::ProviderUnavailable {
                    batch_index: 0,
                    message: format!("cache parse error at line {}: {e}", line_no + 1),
                })?;
            if parsed.vector.len() != dim {
                return Err(EmbedError::DimensionMismatch {
                    batch_index: 0,
                    expected: dim,
                    got: parsed.vector.len(),
                });
            }
            map.insert(parsed.key, parsed.vector);
        }
        Ok(CacheProvider {
            map,
            dim,
            path: path.to_path_buf(),
        })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl EmbeddingProvider for CacheProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn provider_id(&self) -> String {
        format!("cache:{}:dim={}", self.path.display(), self.dim)
    }

    fn embed_raw(&self, texts: &[String], batch_index: usize) -> Result<Vec<Vec<f64>>, EmbedError> {
        texts
            .iter()
            .map(|t| {
                let key = cache_key(t);
                self.map
                    .get(&key)
                    .cloned()
                    .ok_or_else(|| EmbedError::ProviderUnavailable {
                        batch_index,
                        message: format!("cache miss for key {key}"),
                    })
            })
            .collect()
    }
}

/// Writes a cache file from (text, vector) pairs, sorted by key so the
/// output is reproducible.
pub fn write_cache_file<'a, I>(path: &Path, entries: I) -> std::io::Result<()>
where
    I: IntoIterator<Item = (&'a str, &'a EmbeddingVector)>,
{
    let mut lines: Vec<(String, &EmbeddingVector)> = entries
        .into_iter()
        .map(|(text, vec)| (cache_key(text), vec))
        .collect();
    lines.sort_by(|a, b| a.0.cmp(&b.0));
    lines.dedup_by(|a, b| a.0 == b.0);
    let mut out = String::new();
    for (key, vec) in lines {
        let line = serde_json::to_string(&CacheLine {
            key,
            vector: vec.values().to_vec(),
        })
        .expect("cache line serializes");
        out.push_str(&line);
        out.push('\n');
    }
    std::fs::write(path, out)
}

#[derive(Serialize)]
struct HttpRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct HttpResponse {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

/// Bridge to an external embedding service: POST {endpoint}/embed with
/// `{"texts": [...]}`; expects 200 and `{"dim": N, "vectors": [[...]]}`.
pub struct HttpProvider {
    endpoint: String,
    dim: usize,
    timeout_secs: f64,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(endpoint: String, dim: usize, timeout_secs: f64) -> Result<Self, EmbedError> {
        if endpoint.is_empty() {
            return Err(EmbedError::BadConfig("http provider needs an endpoint".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(timeout_secs))
            .build()
            .map_err(|e| EmbedError::BadConfig(format!("http client: {e}")))?;
        Ok(HttpProvider {
            endpoint,
            dim,
            timeout_secs,
            client,
        })
    }
}

impl EmbeddingProvider for HttpProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn provider_id(&self) -> String {
        format!("http:{}:dim={}", self.endpoint, self.dim)
    }

    fn embed_raw(&self, texts: &[String], batch_index: usize) -> Result<Vec<Vec<f64>>, EmbedError> {
        let url = format!("{}/embed", self.endpoint.trim_end_matches('/'));
        let response = self
            .client
            .post(&url)
            .json(&HttpRequest { texts })
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    EmbedError::Timeout {
                        batch_index,
                        seconds: self.timeout_secs,
                    }
                } else {
                    EmbedError::ProviderUnavailable {
                        batch_index,
                        message: format!("POST {url}: {e}"),
                    }
                }
            })?;
        if !response.status().is_success() {
            return Err(EmbedError::ProviderUnavailable {
                batch_index,
                message: format!("POST {url}: status {}", response.status()),
            });
        }
        let body: HttpResponse = response.json().map_err(|e| EmbedError::ProviderUnavailable {
            batch_index,
            message: format!("bad response body: {e}"),
        })?;
        if body.dim != self.dim {
            return Err(EmbedError::DimensionMismatch {
                batch_index,
                expected: self.dim,
                got: body.dim,
            });
        }
        Ok(body.vectors)
    }
}

#[derive(Serialize)]
struct StdioRequest<'a> {
    id: u64,
    texts: &'a [String],
}

#[derive(Deserialize)]
struct StdioResponse {
    id: u64,
    vectors: Vec<Vec<f64>>,
}

struct StdioInner {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
}

/// Bridge to a child process speaking one JSON object per line:
/// request `{"id":k,"texts":[...]}`, response `{"id":k,"vectors":[[...]]}`.
pub struct StdioProvider {
    inner: Mutex<StdioInner>,
    command: String,
    dim: usize,
    timeout_secs: f64,
}

impl StdioProvider {
    pub fn spawn(command: &Path, dim: usize, timeout_secs: f64) -> Result<Self, EmbedError> {
        Self::spawn_with_args(command, &[], dim, timeout_secs)
    }

    pub fn spawn_with_args(
        command: &Path,
        args: &[String],
        dim: usize,
        timeout_secs: f64,
    ) -> Result<Self, EmbedError> {
        let mut child = Command::new(command)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| EmbedError::ProviderUnavailable {
                batch_index: 0,
                message: format!("cannot spawn {}: {e}", command.display()),
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(StdioProvider {
            inner: Mutex::new(StdioInner {
                child,
                stdin,
                lines: rx,
                next_id: 0,
            }),
            command: command.display().to_string(),
            dim,
            timeout_secs,
        })
    }
}

impl Drop for StdioProvider {
    fn drop(&mut self) {
        if let Ok(mut inner) = self.inner.lock() {
            let _ = inner.child.kill();
            let _ = inner.child.wait();
        }
    }
}

impl EmbeddingProvider for StdioProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn provider_id(&self) -> String {
        format!("stdio:{}:dim={}", self.command, self.dim)
    }

    fn embed_raw(&self, texts: &[String], batch_index: usize) -> Result<Vec<Vec<f64>>, EmbedError> {
        let mut inner = self.inner.lock().expect("stdio provider lock");
        let id = inner.next_id;
        inner.next_id += 1;
        let request = serde_json::to_string(&StdioRequest { id, texts }).expect("request serializes");
        writeln!(inner.stdin, "{request}").map_err(|e| EmbedError::ProviderUnavailable {
            batch_index,
            message: format!("write to provider: {e}"),
        })?;
        inner.stdin.flush().map_err(|e| EmbedError::ProviderUnavailable {
            batch_index,
            message: format!("flush to provider: {e}"),
        })?;
        let line = match inner
            .lines
            .recv_timeout(Duration::from_secs_f64(self.timeout_secs))
        {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => {
                return Err(EmbedError::ProviderUnavailable {
                    batch_index,
                    message: format!("read from provider: {e}"),
                })
            }
            Err(RecvTimeoutError::Timeout) => {
                return Err(EmbedError::Timeout {
                    batch_index,
                    seconds: self.timeout_secs,
                })
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(EmbedError::ProviderUnavailable {
                    batch_index,
                    message: "provider closed its stdout".into(),
                })
            }
        };
        let response: StdioResponse =
            serde_json::from_str(&line).map_err(|e| EmbedError::ProviderUnavailable {
                batch_index,
                message: format!("bad response line: {e}"),
            })?;
        if response.id != id {
            return Err(EmbedError::ProviderUnavailable {
                batch_index,
                message: format!("response id {} does not match request id {id}", response.id),
            });
        }
        Ok(response.vectors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{cosine, embed_batch};

    #[test]
    fn test_provider_is_deterministic() {
        let p = TestProvider::new(16, 7).unwrap();
        let a = embed_batch(&["a".into(), "a".into()], &p, 8).unwrap();
        assert_eq!(a[0], a[1]);
        let again = embed_batch(&["a".into()], &p, 8).unwrap();
        assert_eq!(a[0], again[0]);
        assert_eq!(a[0].dim(), 16);
    }

    #[test]
    fn test_provider_normalizes_to_unit_length() {
        let p = TestProvider::new(768, 0).unwrap();
        let v = embed_batch(&["Analyze data".into()], &p, 8).unwrap();
        assert!((v[0].l2_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn test_provider_respects_seed_and_text() {
        let p0 = TestProvider::new(8, 0).unwrap();
        let p1 = TestProvider::new(8, 1).unwrap();
        assert_ne!(p0.embed_one("x"), p1.embed_one("x"));
        assert_ne!(p0.embed_one("x"), p0.embed_one("y"));
        // Normalization-equivalent texts agree.
        assert_eq!(p0.embed_one("Office  Hours"), p0.embed_one("office hours"));
    }

    #[test]
    fn distinct_texts_near_orthogonal_at_dim_768() {
        let p = TestProvider::new(768, 3).unwrap();
        let a = EmbeddingVector::new(p.embed_one("first sample text about networks")).unwrap();
        let b = EmbeddingVector::new(p.embed_one("second sample text about cooking")).unwrap();
        assert!(cosine(&a, &b).unwrap().abs() < 0.2);
    }

    #[test]
    fn cache_provider_round_trip_and_miss() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let p = TestProvider::new(4, 0).unwrap();
        let texts = ["alpha".to_string(), "beta".to_string()];
        let vectors = embed_batch(&texts, &p, 8).unwrap();
        write_cache_file(
            &path,
            texts.iter().map(String::as_str).zip(vectors.iter()),
        )
        .unwrap();

        let cache = CacheProvider::load(&path, 4).unwrap();
        assert_eq!(cache.len(), 2);
        let out = embed_batch(&texts, &cache, 8).unwrap();
        assert_eq!(out, vectors);

        let missing = "gamma".to_string();
        let err = embed_batch(std::slice::from_ref(&missing), &cache, 8).unwrap_err();
        match err {
            EmbedError::ProviderUnavailable { message, .. } => {
                assert!(message.contains(&cache_key("gamma")));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn batch_error_carries_batch_index() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let p = TestProvider::new(4, 0).unwrap();
        let known = ["a".to_string(), "b".to_string()];
        let vectors = embed_batch(&known, &p, 8).unwrap();
        write_cache_file(&path, known.iter().map(String::as_str).zip(vectors.iter())).unwrap();
        let cache = CacheProvider::load(&path, 4).unwrap();

        // Batch size 2: ["a","b"] is batch 0, ["missing"] is batch 1.
        let texts = vec!["a".to_string(), "b".to_string(), "missing".to_string()];
        match embed_batch(&texts, &cache, 2).unwrap_err() {
            EmbedError::ProviderUnavailable { batch_index, .. } => assert_eq!(batch_index, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
