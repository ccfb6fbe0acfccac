//! Loading, validating, and summarizing syllabus corpora and the phrase
//! lists used by the sentence filter.
//!
//! The canonical corpus format is JSONL (one record per line, keys matching
//! [`SyllabusRecord`] field names, absent fields omitted or null); CSV with
//! the same header names is accepted as a convenience. Malformed rows are
//! collected into a [`LoadReport`] rather than silently dropped, and a load
//! fails only when the malformed fraction exceeds the configured tolerance.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textnorm;

/// Bucket used in per-key counts when a record lacks the grouping key.
pub const MISSING_BUCKET: &str = "(missing)";

/// The nine CCIHE control-by-level sector categories plus "Not Classified".
pub const SECTORS: [&str; 10] = [
    "Public, 4-year or above",
    "Public, 2-year",
    "Public, less than 2-year",
    "Private not-for-profit, 4-year or above",
    "Private not-for-profit, 2-year",
    "Private not-for-profit, less than 2-year",
    "Private for-profit, 4-year or above",
    "Private for-profit, 2-year",
    "Private for-profit, less than 2-year",
    "Not Classified",
];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("I/O error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(
        "too many malformed rows in {path}: {n_malformed}/{n_rows} exceeds tolerance {tolerance}"
    )]
    TooManyMalformed {
        path: String,
        n_rows: usize,
        n_malformed: usize,
        tolerance: f64,
    },
    #[error("phrase list {0} is empty after removing comments and blanks")]
    EmptyList(String),
}

/// One syllabus: raw text plus institutional metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyllabusRecord {
    pub syllabus_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    pub institution_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub city: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sector: Option<String>,
}

impl SyllabusRecord {
    /// Shape checks for a single record; uniqueness is checked by the loader.
    pub fn validate(&self) -> Result<(), String> {
        if self.syllabus_id.trim().is_empty() {
            return Err("syllabus_id is empty".into());
        }
        if self.text.trim().is_empty() {
            return Err("text is empty after trimming".into());
        }
        if let Some(year) = self.year {
            if !(1900..=2100).contains(&year) {
                return Err(format!("year {year} outside 1900..=2100"));
            }
        }
        if let Some(code) = &self.field_code {
            validate_field_code(code)?;
        }
        if let Some(sector) = &self.sector {
            if !SECTORS.contains(&sector.as_str()) {
                return Err(format!("unknown sector {sector:?}"));
            }
        }
        Ok(())
    }
}

/// One or more CIP codes joined by "/"; each token must have 2-, 4-, or
/// 6-digit shape ("45", "45.09", "45.0902").
fn validate_field_code(code: &str) -> Result<(), String> {
    if code.is_empty() {
        return Err("field_code is empty".into());
    }
    if !code.chars().all(|c| c.is_ascii_digit() || c == '.' || c == '/') {
        return Err(format!("field_code {code:?} has characters outside digits/dots/slashes"));
    }
    for token in code.split('/') {
        let digits: Vec<&str> = token.split('.').collect();
        let ok = match digits.as_slice() {
            [a] => a.len() == 2 && a.chars().all(|c| c.is_ascii_digit()),
            [a, b] => {
                a.len() == 2
                    && (b.len() == 2 || b.len() == 4)
                    && a.chars().all(|c| c.is_ascii_digit())
                    && b.chars().all(|c| c.is_ascii_digit())
            }
            _ => false,
        };
        if !ok {
            return Err(format!("field_code token {token:?} is not a 2-, 4-, or 6-digit CIP code"));
        }
    }
    Ok(())
}

/// Corpus file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

/// A row that failed validation or deserialization. `line_no` is 1-based
/// (for CSV it counts data rows, excluding the header).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MalformedRow {
    pub line_no: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LoadReport {
    pub n_rows: usize,
    pub n_ok: usize,
    pub errors: Vec<MalformedRow>,
}

/// Options for [`load_corpus`]. The default tolerance of 0.0 makes any
/// malformed row fail the load.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub max_malformed_fraction: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            max_malformed_fraction: 0.0,
        }
    }
}

/// Reads a corpus in file order. Duplicate `syllabus_id`s are malformed
/// (first occurrence wins). Fails with `TooManyMalformed` when the error
/// fraction exceeds `opts.max_malformed_fraction`.
pub fn load_corpus(
    path: &Path,
    format: CorpusFormat,
    opts: &LoadOptions,
) -> Result<(Vec<SyllabusRecord>, LoadReport), CorpusError> {
    if !path.exists() {
        return Err(CorpusError::FileNotFound(path.display().to_string()));
    }
    let rows: Vec<(usize, Result<SyllabusRecord, String>)> = match format {
        CorpusFormat::Jsonl => read_jsonl(path)?,
        CorpusFormat::Csv => read_csv(path)?,
    };

    let mut records = Vec::new();
    let mut report = LoadReport::default();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for (line_no, row) in rows {
        report.n_rows += 1;
        let checked = row.and_then(|rec| {
            rec.validate()?;
            if !seen_ids.insert(rec.syllabus_id.clone()) {
                return Err(format!("duplicate syllabus_id {:?}", rec.syllabus_id));
            }
            Ok(rec)
        });
        match checked {
            Ok(rec) => {
                report.n_ok += 1;
                records.push(rec);
            }
            Err(reason) => report.errors.push(MalformedRow { line_no, reason }),
        }
    }

    if report.n_rows > 0 {
        let fraction = report.errors.len() as f64 / report.n_rows as f64;
        if fraction > opts.max_malformed_fraction {
            return Err(CorpusError::TooManyMalformed {
                path: path.display().to_string(),
                n_rows: report.n_rows,
                n_malformed: report.errors.len(),
                tolerance: opts.max_malformed_fraction,
            });
        }
    }
    Ok((records, report))
}

fn read_jsonl(path: &Path) -> Result<Vec<(usize, Result<SyllabusRecord, String>)>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<SyllabusRecord>(&line).map_err(|e| e.to_string());
        rows.push((idx + 1, parsed));
    }
    Ok(rows)
}

fn read_csv(path: &Path) -> Result<Vec<(usize, Result<SyllabusRecord, String>)>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let mut rows = Vec::new();
    for (idx, row) in reader.deserialize::<SyllabusRecord>().enumerate() {
        rows.push((idx + 1, row.map_err(|e| e.to_string())));
    }
    Ok(rows)
}

/// Five-number-lite summary of sentence counts, filled after segmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceCountSummary {
    pub mean: f64,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
}

impl SentenceCountSummary {
    pub fn from_counts(counts: &[usize]) -> Option<Self> {
        if counts.is_empty() {
            return None;
        }
        let mut v: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Some(SentenceCountSummary {
            mean: crate::numeric::pairwise_mean(&v),
            median: crate::numeric::percentile_sorted(&v, 50.0),
            p25: crate::numeric::percentile_sorted(&v, 25.0),
            p75: crate::numeric::percentile_sorted(&v, 75.0),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_syllabi: u64,
    pub per_fos: BTreeMap<String, u64>,
    pub per_year: BTreeMap<String, u64>,
    pub per_state: BTreeMap<String, u64>,
    pub per_sector: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_count_summary: Option<SentenceCountSummary>,
}

/// Counts records per FOS/year/state/sector; records missing a key are
/// counted under [`MISSING_BUCKET`].
pub fn corpus_stats<'a>(records: impl IntoIterator<Item = &'a SyllabusRecord>) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for rec in records {
        stats.n_syllabi += 1;
        bump(&mut stats.per_fos, rec.field_name.as_deref());
        bump(&mut stats.per_year, rec.year.map(|y| y.to_string()).as_deref());
        bump(&mut stats.per_state, rec.state.as_deref());
        bump(&mut stats.per_sector, rec.sector.as_deref());
    }
    stats
}

fn bump(map: &mut BTreeMap<String, u64>, key: Option<&str>) {
    let key = match key {
        Some(k) if !k.is_empty() => k,
        _ => MISSING_BUCKET,
    };
    *map.entry(key.to_string()).or_insert(0) += 1;
}

/// Ordered, deduplicated, lowercased phrases with collapsed whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseList {
    phrases: Vec<String>,
}

impl PhraseList {
    /// Normalizes and deduplicates, preserving first occurrence. Unlike
    /// [`PhraseList::load`], an empty result is allowed here so callers can
    /// build lists programmatically; consumers that require a non-empty
    /// list check at use time.
    pub fn new<I, S>(phrases: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for raw in phrases {
            let norm = textnorm::normalize(raw.as_ref());
            if norm.is_empty() {
                continue;
            }
            if seen.insert(norm.clone()) {
                out.push(norm);
            }
        }
        PhraseList { phrases: out }
    }

    /// Loads one phrase per line; blank lines and '#' comments are ignored.
    /// Errors with `EmptyList` if nothing remains.
    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        if !path.exists() {
            return Err(CorpusError::FileNotFound(path.display().to_string()));
        }
        let content = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let list = Self::from_text(&content);
        if list.is_empty() {
            return Err(CorpusError::EmptyList(path.display().to_string()));
        }
        Ok(list)
    }

    pub fn from_text(content: &str) -> Self {
        Self::new(
            content
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    /// One phrase per line; loading this output reproduces the list.
    pub fn to_text(&self) -> String {
        let mut s = self.phrases.join("\n");
        s.push('\n');
        s
    }
}
