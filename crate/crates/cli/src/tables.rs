//! Readers and writers for the published CSV tables. Floats are written
//! with Rust's shortest-roundtrip formatting, so write-read-write cycles
//! are byte-stable.

use std::collections::BTreeMap;
use std::path::Path;

use syllabus_skills::aggregate::AggregateRecord;

use crate::errors::{config_err, data_err, Result};

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn opt(s: &Option<String>) -> &str {
    s.as_deref().unwrap_or("")
}

fn non_empty(s: &str) -> Option<String> {
    (!s.is_empty()).then(|| s.to_string())
}

pub fn write_institution_fos_year(path: &Path, records: &[AggregateRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| data_err(e))?;
    w.write_record([
        "record_id",
        "year",
        "institution_name",
        "unit_id",
        "city",
        "state",
        "field_name",
        "field_code",
        "sector",
        "n_syllabi",
    ])
    .map_err(|e| data_err(e))?;
    for r in records {
        w.write_record([
            r.record_id.as_str(),
            &r.year.to_string(),
            r.institution_name.as_str(),
            opt(&r.unit_id),
            opt(&r.city),
            opt(&r.state),
            opt(&r.field_name),
            opt(&r.field_code),
            opt(&r.sector),
            &r.n_syllabi.to_string(),
        ])
        .map_err(|e| data_err(e))?;
    }
    w.flush()?;
    Ok(())
}

/// Wide scores table: record_id column followed by one column per skill.
pub fn write_scores_table(
    path: &Path,
    records: &[AggregateRecord],
    skill_ids: &[String],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| data_err(e))?;
    let mut header = vec!["record_id".to_string()];
    header.extend(skill_ids.iter().cloned());
    w.write_record(&header).map_err(|e| data_err(e))?;
    for r in records {
        let mut row = vec![r.record_id.clone()];
        row.extend(r.mean_scores.iter().map(|&v| fmt_f64(v)));
        w.write_record(&row).map_err(|e| data_err(e))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads institution_fos_year.csv joined with a scores table back into
/// aggregate records (mean_scores ordered by the scores table header).
pub fn read_aggregates(
    meta_path: &Path,
    scores_path: &Path,
) -> Result<(Vec<AggregateRecord>, Vec<String>)> {
    let mut meta_reader = csv::Reader::from_path(meta_path)
        .map_err(|e| config_err(format!("{}: {e}", meta_path.display())))?;
    let mut metas: BTreeMap<String, AggregateRecord> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for row in meta_reader.records() {
        let row = row.map_err(|e| data_err(e))?;
        let get = |i: usize| row.get(i).unwrap_or("").to_string();
        let record = AggregateRecord {
            record_id: get(0),
            year: get(1).parse().map_err(|e| data_err(format!("bad year: {e}")))?,
            institution_name: get(2),
            unit_id: non_empty(&get(3)),
            city: non_empty(&get(4)),
            state: non_empty(&get(5)),
            field_name: non_empty(&get(6)),
            field_code: non_empty(&get(7)),
            sector: non_empty(&get(8)),
            n_syllabi: get(9)
                .parse()
                .map_err(|e| data_err(format!("bad n_syllabi: {e}")))?,
            mean_scores: Vec::new(),
        };
        order.push(record.record_id.clone());
        metas.insert(record.record_id.clone(), record);
    }

    let mut scores_reader = csv::Reader::from_path(scores_path)
        .map_err(|e| config_err(format!("{}: {e}", scores_path.display())))?;
    let headers = scores_reader.headers().map_err(|e| data_err(e))?.clone();
    let skill_ids: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    for row in scores_reader.records() {
        let row = row.map_err(|e| data_err(e))?;
        let record_id = row.get(0).unwrap_or("");
        let scores: std::result::Result<Vec<f64>, _> =
            row.iter().skip(1).map(str::parse::<f64>).collect();
        let scores = scores.map_err(|e| data_err(format!("bad score for {record_id}: {e}")))?;
        match metas.get_mut(record_id) {
            Some(meta) => meta.mean_scores = scores,
            None => {
                return Err(data_err(format!(
                    "scores table row {record_id} missing from {}",
                    meta_path.display()
                )))
            }
        }
    }
    let records: Vec<AggregateRecord> = order
        .into_iter()
        .map(|id| metas.remove(&id).expect("ordered ids came from the map"))
        .collect();
    for r in &records {
        if r.mean_scores.len() != skill_ids.len() {
            return Err(data_err(format!(
                "record {} has no scores row in {}",
                r.record_id,
                scores_path.display()
            )));
        }
    }
    Ok((records, skill_ids))
}

/// Labeled matrix with a leading label column; used for fos_matrix.csv,
/// rca.csv, similarity.csv, and kl_grid.csv.
pub fn write_labeled_matrix(
    path: &Path,
    corner: &str,
    column_labels: &[String],
    row_labels: &[String],
    rows: impl Iterator<Item = Vec<f64>>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| data_err(e))?;
    let mut header = vec![corner.to_string()];
    header.extend(column_labels.iter().cloned());
    w.write_record(&header).map_err(|e| data_err(e))?;
    for (label, row) in row_labels.iter().zip(rows) {
        let mut out = vec![label.clone()];
        out.extend(row.iter().map(|&v| fmt_f64(v)));
        w.write_record(&out).map_err(|e| data_err(e))?;
    }
    w.flush()?;
    Ok(())
}

pub struct LabeledMatrix {
    pub row_labels: Vec<String>,
    pub column_labels: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_labeled_matrix(path: &Path) -> Result<LabeledMatrix> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(|e| data_err(e))?.clone();
    let column_labels: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut row_labels = Vec::new();
    let mut rows = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| data_err(e))?;
        row_labels.push(row.get(0).unwrap_or("").to_string());
        let values: std::result::Result<Vec<f64>, _> =
            row.iter().skip(1).map(str::parse::<f64>).collect();
        rows.push(values.map_err(|e| data_err(format!("bad matrix value: {e}")))?);
    }
    Ok(LabeledMatrix {
        row_labels,
        column_labels,
        rows,
    })
}

/// Salary table: (field_name, median_annual_earnings_usd).
pub fn read_salary_table(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(|e| data_err(e))?.clone();
    let field_idx = headers
        .iter()
        .position(|h| h == "field_name")
        .ok_or_else(|| data_err(format!("{}: missing column \"field_name\"", path.display())))?;
    let earnings_idx = headers
        .iter()
        .position(|h| h == "median_annual_earnings_usd")
        .ok_or_else(|| {
            data_err(format!(
                "{}: missing column \"median_annual_earnings_usd\"",
                path.display()
            ))
        })?;
    let mut map = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| data_err(e))?;
        let field = row.get(field_idx).unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        let earnings: f64 = row
            .get(earnings_idx)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|e| data_err(format!("bad earnings for {field}: {e}")))?;
        map.insert(field.to_string(), earnings);
    }
    Ok(map)
}

/// Employment weights: (soc_code, employment).
pub fn read_employment_weights(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(|e| data_err(e))?.clone();
    let soc_idx = headers
        .iter()
        .position(|h| h == "soc_code")
        .ok_or_else(|| data_err(format!("{}: missing column \"soc_code\"", path.display())))?;
    let emp_idx = headers
        .iter()
        .position(|h| h == "employment")
        .ok_or_else(|| data_err(format!("{}: missing column \"employment\"", path.display())))?;
    let mut map = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| data_err(e))?;
        let soc = row.get(soc_idx).unwrap_or("").trim();
        if soc.is_empty() {
            continue;
        }
        let employment: f64 = row
            .get(emp_idx)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|e| data_err(format!("bad employment for {soc}: {e}")))?;
        map.insert(soc.to_string(), employment);
    }
    Ok(map)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut json = serde_json::to_string_pretty(value).expect("artifact serializes");
    json.push('\n');
    std::fs::write(path, json)?;
    Ok(())
}
