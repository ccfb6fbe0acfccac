//! Averaging syllabus skill vectors into institution-FOS-year records and
//! the duplicate analysis over quantized vectors.
//!
//! Means use pairwise summation over contributions sorted by syllabus_id,
//! so aggregation is bitwise reproducible and permutation-invariant in
//! input order. Duplicates are detected but never removed: the published
//! aggregates include them, and the report just measures their prevalence.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SyllabusRecord;
use crate::hashing::stable_record_id;
use crate::numeric::pairwise_sum;
use crate::score::SkillVector;
use crate::textnorm;

#[derive(Debug, Error)]
pub enum AggregateError {
    #[error("vectors mix taxonomy kinds or lengths")]
    MixedTaxonomy,
}

/// Metadata carried alongside a vector into aggregation; the raw text is
/// deliberately absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyllabusMeta {
    pub syllabus_id: String,
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

impl From<&SyllabusRecord> for SyllabusMeta {
    fn from(r: &SyllabusRecord) -> Self {
        SyllabusMeta {
            syllabus_id: r.syllabus_id.clone(),
            year: r.year,
            institution_name: r.institution_name.clone(),
            unit_id: r.unit_id.clone(),
            city: r.city.clone(),
            state: r.state.clone(),
            field_name: r.field_name.clone(),
            field_code: r.field_code.clone(),
            sector: r.sector.clone(),
        }
    }
}

/// The (institution, field, year) grouping key of a syllabus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroupKey {
    pub unit: String,
    pub field: String,
    pub year: i32,
    /// True when `unit` fell back to the normalized institution name.
    pub name_fallback: bool,
}

impl GroupKey {
    pub fn record_id(&self) -> String {
        stable_record_id(&self.unit, &self.field, self.year)
    }
}

impl SyllabusMeta {
    /// Institution grouping key: unit_id when present, otherwise the
    /// normalized institution name (reported as a fallback warning).
    fn unit_key(&self) -> Option<(String, bool)> {
        if let Some(unit) = self.unit_id.as_deref().filter(|u| !u.trim().is_empty()) {
            return Some((unit.trim().to_string(), false));
        }
        let name = textnorm::normalize(&self.institution_name);
        (!name.is_empty()).then_some((name, true))
    }

    /// Field grouping key: field_code when present, otherwise field_name.
    fn field_key(&self) -> Option<String> {
        self.field_code
            .as_deref()
            .filter(|c| !c.trim().is_empty())
            .or(self.field_name.as_deref().filter(|n| !n.trim().is_empty()))
            .map(|s| s.trim().to_string())
    }

    /// Full grouping key, or None when year, institution, or field is
    /// missing.
    pub fn group_key(&self) -> Option<GroupKey> {
        let year = self.year?;
        let (unit, name_fallback) = self.unit_key()?;
        let field = self.field_key()?;
        Some(GroupKey {
            unit,
            field,
            year,
            name_fallback,
        })
    }
}

/// One (institution, field, year) aggregate: metadata plus the mean skill
/// vector over its syllabi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub record_id: String,
    pub year: i32,
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
    pub n_syllabi: u64,
    pub mean_scores: Vec<f64>,
}

/// A vector that could not be grouped; reported, never silently dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateException {
    pub syllabus_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct AggregateOutput {
    pub records: Vec<AggregateRecord>,
    pub exceptions: Vec<AggregateException>,
    pub warnings: Vec<String>,
}

fn check_same_taxonomy(items: &[(SkillVector, SyllabusMeta)]) -> Result<(), AggregateError> {
    if let Some(((first, _), rest)) = items.split_first() {
        for (v, _) in rest {
            if v.taxonomy_kind != first.taxonomy_kind || v.scores.len() != first.scores.len() {
                return Err(AggregateError::MixedTaxonomy);
            }
        }
    }
    Ok(())
}

/// Groups by (unit, field, year) and averages. Records come out sorted by
/// record key; exceptions keep input order.
pub fn aggregate(items: &[(SkillVector, SyllabusMeta)]) -> Result<AggregateOutput, AggregateError> {
    check_same_taxonomy(items)?;
    let mut out = AggregateOutput::default();
    let mut groups: BTreeMap<(String, String, i32), Vec<&(SkillVector, SyllabusMeta)>> =
        BTreeMap::new();
    let mut name_fallbacks = 0usize;

    for item in items {
        let (_, meta) = item;
        let Some(year) = meta.year else {
            out.exceptions.push(AggregateException {
                syllabus_id: meta.syllabus_id.clone(),
                reason: "missing year".into(),
            });
            continue;
        };
        let Some((unit_key, fallback)) = meta.unit_key() else {
            out.exceptions.push(AggregateException {
                syllabus_id: meta.syllabus_id.clone(),
                reason: "missing unit_id and institution_name".into(),
            });
            continue;
        };
        let Some(field_key) = meta.field_key() else {
            out.exceptions.push(AggregateException {
                syllabus_id: meta.syllabus_id.clone(),
                reason: "missing field_code and field_name".into(),
            });
            continue;
        };
        if fallback {
            name_fallbacks += 1;
        }
        groups.entry((unit_key, field_key, year)).or_default().push(item);
    }
    if name_fallbacks > 0 {
        out.warnings.push(format!(
            "{name_fallbacks} syllabi grouped by normalized institution_name because unit_id is absent"
        ));
    }

    for ((unit_key, field_key, year), mut members) in groups {
        members.sort_by(|a, b| a.0.syllabus_id.cmp(&b.0.syllabus_id));
        let n = members.len();
        let n_skills = members[0].0.scores.len();
        let mut mean_scores = Vec::with_capacity(n_skills);
        let mut column = Vec::with_capacity(n);
        for s in 0..n_skills {
            column.clear();
            column.extend(members.iter().map(|(v, _)| v.scores[s]));
            mean_scores.push(pairwise_sum(&column) / n as f64);
        }
        let meta = &members[0].1;
        out.records.push(AggregateRecord {
            record_id: stable_record_id(&unit_key, &field_key, year),
            year,
            institution_name: meta.institution_name.clone(),
            unit_id: meta.unit_id.clone(),
            city: meta.city.clone(),
            state: meta.state.clone(),
            field_name: meta.field_name.clone(),
            field_code: meta.field_code.clone(),
            sector: meta.sector.clone(),
            n_syllabi: n as u64,
            mean_scores,
        });
    }
    Ok(out)
}

/// Per-FOS duplicate counts at one grouping granularity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FosDuplicates {
    pub n_syllabi: u64,
    pub total: u64,
    pub within_year: u64,
    pub across_years: u64,
}

/// Duplicate prevalence measured on quantized skill vectors: total at the
/// (institution, FOS) level, within-year at (institution, FOS, year), and
/// across-years as their difference.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DuplicateReport {
    pub quantization_decimals: u32,
    pub n_total: u64,
    pub total_duplicates: u64,
    pub within_year_duplicates: u64,
    pub across_year_duplicates: u64,
    pub per_fos: BTreeMap<String, FosDuplicates>,
}

fn quantize(scores: &[f64], decimals: u32) -> Vec<i64> {
    let scale = 10f64.powi(decimals as i32);
    scores.iter().map(|&s| (s * scale).round() as i64).collect()
}

/// Counts duplicates among vectors that carry a full (unit, field, year)
/// key; vectors missing keys are skipped here (aggregation already reports
/// them as exceptions).
pub fn dedup_report(
    items: &[(SkillVector, SyllabusMeta)],
    quantization_decimals: u32,
) -> Result<DuplicateReport, AggregateError> {
    check_same_taxonomy(items)?;
    let mut report = DuplicateReport {
        quantization_decimals,
        ..DuplicateReport::default()
    };
    // (unit, fos) -> year -> quantized vectors
    let mut groups: BTreeMap<(String, String), BTreeMap<i32, Vec<Vec<i64>>>> = BTreeMap::new();
    let mut fos_of_group: BTreeMap<(String, String), String> = BTreeMap::new();
    for (vector, meta) in items {
        let (Some(year), Some((unit_key, _)), Some(field_key)) =
            (meta.year, meta.unit_key(), meta.field_key())
        else {
            continue;
        };
        let fos_label = meta
            .field_name
            .clone()
            .unwrap_or_else(|| field_key.clone());
        let key = (unit_key, field_key);
        fos_of_group.entry(key.clone()).or_insert(fos_label);
        groups
            .entry(key)
            .or_default()
            .entry(year)
            .or_default()
            .push(quantize(&vector.scores, quantization_decimals));
    }

    for (key, by_year) in &groups {
        let fos = fos_of_group[key].clone();
        let entry = report.per_fos.entry(fos).or_default();
        let mut all: HashSet<&[i64]> = HashSet::new();
        let mut n_group = 0u64;
        let mut within = 0u64;
        for vectors in by_year.values() {
            let distinct: HashSet<&[i64]> = vectors.iter().map(Vec::as_slice).collect();
            within += (vectors.len() - distinct.len()) as u64;
            n_group += vectors.len() as u64;
            all.extend(vectors.iter().map(Vec::as_slice));
        }
        let total = n_group - all.len() as u64;
        entry.n_syllabi += n_group;
        entry.total += total;
        entry.within_year += within;
        entry.across_years += total - within;
        report.n_total += n_group;
        report.total_duplicates += total;
        report.within_year_duplicates += within;
    }
    report.across_year_duplicates = report.total_duplicates - report.within_year_duplicates;
    Ok(report)
}
