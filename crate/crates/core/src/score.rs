//! Skill scoring: max-pooled cosine similarity between a syllabus's kept
//! sentences and every descriptor of a skill taxonomy.
//!
//! For each skill the score is the maximum similarity over all sentences —
//! the score of the most similar sentence. Negative similarities are kept
//! verbatim; clamping is a consumer decision. A syllabus with no kept
//! sentences gets an all-zero vector flagged `empty_content`.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{cosine, embed_batch, EmbedError, EmbeddingProvider, EmbeddingVector};
use crate::textprep::Sentence;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("cannot read taxonomy {path}: {message}")]
    BadTaxonomyFile { path: String, message: String },
    #[error("duplicate skill id {0}")]
    DuplicateSkillId(String),
    #[error("taxonomy is empty")]
    EmptyTaxonomy,
    #[error("provider error scoring syllabus {syllabus_id}: {source}")]
    Provider {
        syllabus_id: String,
        #[source]
        source: EmbedError,
    },
    #[error("vectors mix taxonomy kinds or sizes")]
    MixedTaxonomy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaxonomyKind {
    Dwa,
    Task,
    Ability,
}

impl TaxonomyKind {
    /// Size of the full reference taxonomy for this kind; mini-taxonomies
    /// are allowed with a warning.
    pub fn expected_size(self) -> usize {
        match self {
            TaxonomyKind::Dwa => 2070,
            TaxonomyKind::Task => 17992,
            TaxonomyKind::Ability => 52,
        }
    }

    pub fn csv_columns(self) -> (&'static str, &'static str) {
        match self {
            TaxonomyKind::Dwa => ("dwa_id", "dwa_title"),
            TaxonomyKind::Task => ("task_id", "task_statement"),
            TaxonomyKind::Ability => ("ability_id", "ability_name"),
        }
    }
}

impl std::fmt::Display for TaxonomyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TaxonomyKind::Dwa => write!(f, "dwa"),
            TaxonomyKind::Task => write!(f, "task"),
            TaxonomyKind::Ability => write!(f, "ability"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillEntry {
    pub skill_id: String,
    pub text: String,
}

/// Ordered list of skill descriptors; vector index i corresponds to
/// entries[i] for every vector scored against this taxonomy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillTaxonomy {
    pub kind: TaxonomyKind,
    entries: Vec<SkillEntry>,
}

impl SkillTaxonomy {
    pub fn new(kind: TaxonomyKind, entries: Vec<SkillEntry>) -> Result<Self, ScoreError> {
        if entries.is_empty() {
            return Err(ScoreError::EmptyTaxonomy);
        }
        let mut seen = HashSet::new();
        for e in &entries {
            if e.skill_id.trim().is_empty() || e.text.trim().is_empty() {
                return Err(ScoreError::BadTaxonomyFile {
                    path: String::new(),
                    message: "empty skill_id or text".into(),
                });
            }
            if !seen.insert(e.skill_id.clone()) {
                return Err(ScoreError::DuplicateSkillId(e.skill_id.clone()));
            }
        }
        Ok(SkillTaxonomy { kind, entries })
    }

    pub fn entries(&self) -> &[SkillEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn skill_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.skill_id.as_str())
    }

    /// `Some((actual, expected))` when the size differs from the full
    /// reference taxonomy; callers surface this as a warning, not an error.
    pub fn size_warning(&self) -> Option<(usize, usize)> {
        let expected = self.kind.expected_size();
        (self.entries.len() != expected).then_some((self.entries.len(), expected))
    }

    /// Fingerprint of (kind, ordered skill ids); used to verify feature
    /// alignment between trained models and incoming vectors.
    pub fn fingerprint(&self) -> String {
        let mut joined = format!("{}\n", self.kind);
        for e in &self.entries {
            joined.push_str(&e.skill_id);
            joined.push('\n');
        }
        crate::hashing::sha256_hex(joined.as_bytes())
    }
}

/// Loads a two-column taxonomy CSV (id, text) in file order.
pub fn load_taxonomy(path: &Path, kind: TaxonomyKind) -> Result<SkillTaxonomy, ScoreError> {
    if !path.exists() {
        return Err(ScoreError::FileNotFound(path.display().to_string()));
    }
    let (id_col, text_col) = kind.csv_columns();
    let mut reader = csv::Reader::from_path(path).map_err(|e| ScoreError::BadTaxonomyFile {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| ScoreError::BadTaxonomyFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?
        .clone();
    let id_idx = headers.iter().position(|h| h == id_col);
    let text_idx = headers.iter().position(|h| h == text_col);
    let (id_idx, text_idx) = match (id_idx, text_idx) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(ScoreError::BadTaxonomyFile {
                path: path.display().to_string(),
                message: format!("expected columns {id_col:?} and {text_col:?}"),
            })
        }
    };
    let mut entries = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| ScoreError::BadTaxonomyFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        entries.push(SkillEntry {
            skill_id: row.get(id_idx).unwrap_or("").trim().to_string(),
            text: row.get(text_idx).unwrap_or("").trim().to_string(),
        });
    }
    SkillTaxonomy::new(kind, entries)
}

/// Per-syllabus (or aggregated) score per skill, aligned with the taxonomy
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillVector {
    pub syllabus_id: String,
    pub taxonomy_kind: TaxonomyKind,
    pub scores: Vec<f64>,
    pub empty_content: bool,
}

impl SkillVector {
    pub fn zeros(syllabus_id: &str, kind: TaxonomyKind, len: usize) -> Self {
        SkillVector {
            syllabus_id: syllabus_id.to_string(),
            taxonomy_kind: kind,
            scores: vec![0.0; len],
            empty_content: true,
        }
    }
}

/// Embeds the taxonomy once and scores syllabi against it. Sentence
/// embeddings are streamed batch by batch, never all resident.
pub struct SkillScorer<'a> {
    taxonomy: &'a SkillTaxonomy,
    provider: &'a dyn EmbeddingProvider,
    batch_size: usize,
    skill_embeddings: Vec<EmbeddingVector>,
}

impl<'a> SkillScorer<'a> {
    pub fn new(
        taxonomy: &'a SkillTaxonomy,
        provider: &'a dyn EmbeddingProvider,
        batch_size: usize,
    ) -> Result<Self, ScoreError> {
        let texts: Vec<String> = taxonomy.entries.iter().map(|e| e.text.clone()).collect();
        let skill_embeddings =
            embed_batch(&texts, provider, batch_size).map_err(|source| ScoreError::Provider {
                syllabus_id: format!("<taxonomy:{}>", taxonomy.kind),
                source,
            })?;
        Ok(SkillScorer {
            taxonomy,
            provider,
            batch_size,
            skill_embeddings,
        })
    }

    pub fn taxonomy(&self) -> &SkillTaxonomy {
        self.taxonomy
    }

    /// Max-pools cosine similarity over the kept sentences. The reduction
    /// is a true max (commutative and associative), so chunking across
    /// batches or threads cannot change the result.
    pub fn score(&self, syllabus_id: &str, sentences: &[Sentence]) -> Result<SkillVector, ScoreError> {
        if sentences.is_empty() {
            return Ok(SkillVector::zeros(
                syllabus_id,
                self.taxonomy.kind,
                self.taxonomy.len(),
            ));
        }
        let mut scores = vec![f64::NEG_INFINITY; self.taxonomy.len()];
        for chunk in sentences.chunks(self.batch_size) {
            let texts: Vec<String> = chunk.iter().map(|s| s.text.clone()).collect();
            let embeddings = embed_batch(&texts, self.provider, self.batch_size).map_err(
                |source| ScoreError::Provider {
                    syllabus_id: syllabus_id.to_string(),
                    source,
                },
            )?;
            let update: Result<Vec<f64>, EmbedError> = scores
                .par_iter()
                .enumerate()
                .map(|(skill_idx, current)| {
                    let mut best = *current;
                    for emb in &embeddings {
                        best = best.max(cosine(emb, &self.skill_embeddings[skill_idx])?);
                    }
                    Ok(best)
                })
                .collect();
            scores = update.map_err(|source| ScoreError::Provider {
                syllabus_id: syllabus_id.to_string(),
                source,
            })?;
        }
        Ok(SkillVector {
            syllabus_id: syllabus_id.to_string(),
            taxonomy_kind: self.taxonomy.kind,
            scores,
            empty_content: false,
        })
    }
}

/// One-shot convenience over [`SkillScorer`].
pub fn score_syllabus(
    syllabus_id: &str,
    kept_sentences: &[Sentence],
    taxonomy: &SkillTaxonomy,
    provider: &dyn EmbeddingProvider,
    batch_size: usize,
) -> Result<SkillVector, ScoreError> {
    SkillScorer::new(taxonomy, provider, batch_size)?.score(syllabus_id, kept_sentences)
}

/// Per-skill fraction of syllabi with a negative score, sorted descending
/// (ties by skill id).
pub fn negative_value_report(
    vectors: &[SkillVector],
    taxonomy: &SkillTaxonomy,
) -> Result<Vec<(String, f64)>, ScoreError> {
    let mut counts = vec![0u64; taxonomy.len()];
    for v in vectors {
        if v.taxonomy_kind != taxonomy.kind || v.scores.len() != taxonomy.len() {
            return Err(ScoreError::MixedTaxonomy);
        }
        for (c, s) in counts.iter_mut().zip(&v.scores) {
            if *s < 0.0 {
                *c += 1;
            }
        }
    }
    let n = vectors.len();
    let mut report: Vec<(String, f64)> = taxonomy
        .entries
        .iter()
        .zip(&counts)
        .map(|(e, &c)| {
            let fraction = if n > 0 { c as f64 / n as f64 } else { 0.0 };
            (e.skill_id.clone(), fraction)
        })
        .collect();
    report.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| a.0.cmp(&b.0))
    });
    Ok(report)
}

/// Serializes vectors as JSONL, one [`SkillVector`] per line.
pub fn write_vectors_jsonl(path: &Path, vectors: &[SkillVector]) -> std::io::Result<()> {
    let mut out = String::new();
    for v in vectors {
        out.push_str(&serde_json::to_string(v).expect("vector serializes"));
        out.push('\n');
    }
    std::fs::write(path, out)
}

pub fn read_vectors_jsonl(path: &Path) -> Result<Vec<SkillVector>, String> {
    let content = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    content
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
        .collect()
}

/// Stable index of skill id to vector position, used by consumers that
/// join scores with taxonomy metadata.
pub fn skill_index(taxonomy: &SkillTaxonomy) -> BTreeMap<String, usize> {
    taxonomy
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.skill_id.clone(), i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::TestProvider;

    fn sentence(id: &str, index: usize, text: &str) -> Sentence {
        Sentence {
            syllabus_id: id.into(),
            index,
            text: text.into(),
            normalized: crate::textnorm::normalize(text),
        }
    }

    fn mini_taxonomy() -> SkillTaxonomy {
        SkillTaxonomy::new(
            TaxonomyKind::Dwa,
            vec![
                SkillEntry {
                    skill_id: "d1".into(),
                    text: "develop scientific or mathematical models".into(),
                },
                SkillEntry {
                    skill_id: "d2".into(),
                    text: "prepare financial documents".into(),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn identical_text_scores_one() {
        let taxonomy = mini_taxonomy();
        let provider = TestProvider::new(32, 0).unwrap();
        let sentences = vec![sentence("s1", 0, "develop scientific or mathematical models")];
        let v = score_syllabus("s1", &sentences, &taxonomy, &provider, 16).unwrap();
        assert!((v.scores[0] - 1.0).abs() < 1e-12);
        assert!(!v.empty_content);
    }

    #[test]
    fn empty_content_yields_zero_vector() {
        let taxonomy = mini_taxonomy();
        let provider = TestProvider::new(32, 0).unwrap();
        let v = score_syllabus("s1", &[], &taxonomy, &provider, 16).unwrap();
        assert!(v.empty_content);
        assert!(v.scores.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn matches_brute_force_on_three_by_two() {
        let taxonomy = mini_taxonomy();
        let provider = TestProvider::new(24, 9).unwrap();
        let sentences = vec![
            sentence("s", 0, "students analyze network models"),
            sentence("s", 1, "teams prepare budget documents"),
            sentence("s", 2, "we compare empirical outcomes"),
        ];
        let v = score_syllabus("s", &sentences, &taxonomy, &provider, 2).unwrap();

        // Brute-force oracle over the full 3x2 similarity matrix.
        let texts: Vec<String> = sentences.iter().map(|s| s.text.clone()).collect();
        let sent_emb = embed_batch(&texts, &provider, 16).unwrap();
        let skill_texts: Vec<String> =
            taxonomy.entries().iter().map(|e| e.text.clone()).collect();
        let skill_emb = embed_batch(&skill_texts, &provider, 16).unwrap();
        for (j, se) in skill_emb.iter().enumerate() {
            let expected = sent_emb
                .iter()
                .map(|e| cosine(e, se).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(v.scores[j], expected, "skill {j}");
        }
    }

    #[test]
    fn adding_a_sentence_never_decreases_scores() {
        let taxonomy = mini_taxonomy();
        let provider = TestProvider::new(16, 4).unwrap();
        let base = vec![sentence("s", 0, "analyze statistical models weekly")];
        let mut more = base.clone();
        more.push(sentence("s", 1, "draft resource budgets quarterly"));
        let v1 = score_syllabus("s", &base, &taxonomy, &provider, 16).unwrap();
        let v2 = score_syllabus("s", &more, &taxonomy, &provider, 16).unwrap();
        for (a, b) in v1.scores.iter().zip(&v2.scores) {
            assert!(b >= a);
        }
    }

    #[test]
    fn sentence_order_does_not_matter() {
        let taxonomy = mini_taxonomy();
        let provider = TestProvider::new(16, 4).unwrap();
        let fwd = vec![
            sentence("s", 0, "analyze statistical models weekly"),
            sentence("s", 1, "draft resource budgets quarterly"),
            sentence("s", 2, "evaluate design tradeoffs together"),
        ];
        let mut rev = fwd.clone();
        rev.reverse();
        let v1 = score_syllabus("s", &fwd, &taxonomy, &provider, 2).unwrap();
        let v2 = score_syllabus("s", &rev, &taxonomy, &provider, 2).unwrap();
        assert_eq!(v1.scores, v2.scores);
    }

    #[test]
    fn taxonomy_rejects_duplicates_and_empty() {
        let dup = SkillTaxonomy::new(
            TaxonomyKind::Dwa,
            vec![
                SkillEntry {
                    skill_id: "d1".into(),
                    text: "a b".into(),
                },
                SkillEntry {
                    skill_id: "d1".into(),
                    text: "c d".into(),
                },
            ],
        );
        assert!(matches!(dup, Err(ScoreError::DuplicateSkillId(_))));
        assert!(matches!(
            SkillTaxonomy::new(TaxonomyKind::Dwa, vec![]),
            Err(ScoreError::EmptyTaxonomy)
        ));
    }

    #[test]
    fn load_taxonomy_from_csv_warns_on_size() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dwa.csv");
        std::fs::write(&path, "dwa_id,dwa_title\nd1,Analyze data\nd2,Write reports\nd3,Review plans\n")
            .unwrap();
        let taxonomy = load_taxonomy(&path, TaxonomyKind::Dwa).unwrap();
        assert_eq!(taxonomy.len(), 3);
        assert_eq!(taxonomy.size_warning(), Some((3, 2070)));
        assert_eq!(
            taxonomy.entries()[0],
            SkillEntry {
                skill_id: "d1".into(),
                text: "Analyze data".into()
            }
        );

        let dup_path = dir.path().join("dup.csv");
        std::fs::write(&dup_path, "dwa_id,dwa_title\nd1,Analyze data\nd1,Write reports\n").unwrap();
        assert!(matches!(
            load_taxonomy(&dup_path, TaxonomyKind::Dwa),
            Err(ScoreError::DuplicateSkillId(_))
        ));
    }

    #[test]
    fn negative_report_counts_fractions() {
        let taxonomy = mini_taxonomy();
        let mut vectors = Vec::new();
        for i in 0..4 {
            vectors.push(SkillVector {
                syllabus_id: format!("s{i}"),
                taxonomy_kind: TaxonomyKind::Dwa,
                scores: vec![if i == 0 { -0.2 } else { 0.3 }, 0.1],
                empty_content: false,
            });
        }
        let report = negative_value_report(&vectors, &taxonomy).unwrap();
        assert_eq!(report[0], ("d1".to_string(), 0.25));
        assert_eq!(report[1], ("d2".to_string(), 0.0));
    }

    #[test]
    fn negative_report_rejects_mixed_kinds() {
        let taxonomy = mini_taxonomy();
        let vectors = vec![SkillVector {
            syllabus_id: "s".into(),
            taxonomy_kind: TaxonomyKind::Task,
            scores: vec![0.0, 0.0],
            empty_content: false,
        }];
        assert!(matches!(
            negative_value_report(&vectors, &taxonomy),
            Err(ScoreError::MixedTaxonomy)
        ));
    }
}
