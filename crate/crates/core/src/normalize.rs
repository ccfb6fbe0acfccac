//! RCA normalization, frequent-skill masking, top-k listings, and the
//! skill-distinctiveness-versus-salary regression.
//!
//! The FOS-by-skill matrix clamps negative raw scores to zero on ingest
//! (shares must be nonnegative); the unclamped values stay available
//! upstream for consumers with different policies.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::aggregate::AggregateRecord;
use crate::numeric::{pairwise_mean, pairwise_sum, percentile_sorted, Matrix};

#[derive(Debug, Error)]
pub enum NormalizeError {
    #[error("FOS {0} has zero row sum; RCA shares are undefined")]
    ZeroRowSum(String),
    #[error("unknown FOS {0}")]
    UnknownFos(String),
    #[error("need at least 3 joined (FOS, salary) points, got {0}")]
    TooFewPoints(usize),
    #[error("percentile must lie strictly between 0 and 100, got {0}")]
    BadPercentile(f64),
    #[error("top_n {top_n} exceeds the number of skills {n_skills}")]
    BadTopN { top_n: usize, n_skills: usize },
}

/// FOS-by-skill matrix of mean scores: rows are fields of study, columns
/// are skills, entries clamped nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct FosSkillMatrix {
    pub fos_list: Vec<String>,
    pub skill_list: Vec<String>,
    pub values: Matrix,
}

/// Same axes as the source matrix; entries are revealed-comparative-
/// advantage quotients.
#[derive(Debug, Clone, PartialEq)]
pub struct RcaMatrix {
    pub fos_list: Vec<String>,
    pub skill_list: Vec<String>,
    pub values: Matrix,
}

impl FosSkillMatrix {
    /// Builds from raw rows, clamping negatives to zero. Row order follows
    /// `fos_list`; duplicate FOS names are the caller's bug.
    pub fn new(fos_list: Vec<String>, skill_list: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        let mut values = Matrix::from_rows(rows);
        for i in 0..values.n_rows() {
            for v in values.row_mut(i) {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        FosSkillMatrix {
            fos_list,
            skill_list,
            values,
        }
    }

    /// Mean skill profile per FOS, averaged over that FOS's aggregate
    /// records (unweighted). FOS label is field_name, falling back to
    /// field_code. Rows come out sorted by FOS label.
    pub fn from_aggregates(records: &[AggregateRecord], skill_list: Vec<String>) -> Self {
        let mut by_fos: BTreeMap<String, Vec<&AggregateRecord>> = BTreeMap::new();
        for r in records {
            let label = r
                .field_name
                .clone()
                .or_else(|| r.field_code.clone())
                .unwrap_or_else(|| "(missing)".to_string());
            by_fos.entry(label).or_default().push(r);
        }
        let mut fos_list = Vec::with_capacity(by_fos.len());
        let mut rows = Vec::with_capacity(by_fos.len());
        for (label, mut members) in by_fos {
            members.sort_by(|a, b| a.record_id.cmp(&b.record_id));
            let n_skills = skill_list.len();
            let mut row = Vec::with_capacity(n_skills);
            let mut column = Vec::with_capacity(members.len());
            for s in 0..n_skills {
                column.clear();
                column.extend(members.iter().map(|r| r.mean_scores[s]));
                row.push(pairwise_mean(&column));
            }
            fos_list.push(label);
            rows.push(row);
        }
        Self::new(fos_list, skill_list, rows)
    }

    pub fn fos_row(&self, fos: &str) -> Result<&[f64], NormalizeError> {
        let idx = self
            .fos_list
            .iter()
            .position(|f| f == fos)
            .ok_or_else(|| NormalizeError::UnknownFos(fos.to_string()))?;
        Ok(self.values.row(idx))
    }
}

/// Revealed comparative advantage: the share of skill `s` in FOS `m`'s
/// profile relative to `s`'s share of the whole matrix. Skills with zero
/// global sum get RCA 0 everywhere.
pub fn rca(matrix: &FosSkillMatrix) -> Result<RcaMatrix, NormalizeError> {
    let n_fos = matrix.values.n_rows();
    let n_skills = matrix.values.n_cols();
    let mut row_sums = Vec::with_capacity(n_fos);
    for (i, fos) in matrix.fos_list.iter().enumerate() {
        let sum = pairwise_sum(matrix.values.row(i));
        if sum <= 0.0 {
            return Err(NormalizeError::ZeroRowSum(fos.clone()));
        }
        row_sums.push(sum);
    }
    let col_sums: Vec<f64> = (0..n_skills)
        .map(|j| pairwise_sum(&matrix.values.column(j)))
        .collect();
    let grand_total = pairwise_sum(&row_sums);

    let mut out = Matrix::zeros(n_fos, n_skills);
    for i in 0..n_fos {
        for j in 0..n_skills {
            let value = if col_sums[j] > 0.0 {
                (matrix.values.get(i, j) / row_sums[i]) / (col_sums[j] / grand_total)
            } else {
                0.0
            };
            out.set(i, j, value);
        }
    }
    Ok(RcaMatrix {
        fos_list: matrix.fos_list.clone(),
        skill_list: matrix.skill_list.clone(),
        values: out,
    })
}

impl RcaMatrix {
    pub fn fos_row(&self, fos: &str) -> Result<&[f64], NormalizeError> {
        let idx = self
            .fos_list
            .iter()
            .position(|f| f == fos)
            .ok_or_else(|| NormalizeError::UnknownFos(fos.to_string()))?;
        Ok(self.values.row(idx))
    }
}

/// Skills to hide from top-k listings because they rank highly everywhere:
/// a skill is masked iff it appears in the top `top_n` (by raw value) of at
/// least `threshold` of the FOS rows. Ties rank by skill id.
pub fn mask_frequent(
    matrix: &FosSkillMatrix,
    top_n: usize,
    threshold: f64,
) -> Result<BTreeSet<String>, NormalizeError> {
    let n_skills = matrix.skill_list.len();
    if top_n > n_skills {
        return Err(NormalizeError::BadTopN { top_n, n_skills });
    }
    let n_fos = matrix.fos_list.len();
    let mut appearances = vec![0usize; n_skills];
    for i in 0..n_fos {
        let row = matrix.values.row(i);
        let mut order: Vec<usize> = (0..n_skills).collect();
        order.sort_by(|&a, &b| {
            row[b]
                .partial_cmp(&row[a])
                .unwrap()
                .then_with(|| matrix.skill_list[a].cmp(&matrix.skill_list[b]))
        });
        for &j in order.iter().take(top_n) {
            appearances[j] += 1;
        }
    }
    let mut mask = BTreeSet::new();
    for (j, &count) in appearances.iter().enumerate() {
        if n_fos > 0 && count as f64 / n_fos as f64 >= threshold {
            mask.insert(matrix.skill_list[j].clone());
        }
    }
    Ok(mask)
}

/// Skills of one FOS ranked descending (ties by skill id), truncated to k,
/// with masked skills excluded.
fn rank_row(
    skill_list: &[String],
    row: &[f64],
    k: usize,
    mask: Option<&BTreeSet<String>>,
) -> Vec<(String, f64)> {
    let mut order: Vec<usize> = (0..skill_list.len())
        .filter(|&j| mask.is_none_or(|m| !m.contains(&skill_list[j])))
        .collect();
    order.sort_by(|&a, &b| {
        row[b]
            .partial_cmp(&row[a])
            .unwrap()
            .then_with(|| skill_list[a].cmp(&skill_list[b]))
    });
    order
        .into_iter()
        .take(k)
        .map(|j| (skill_list[j].clone(), row[j]))
        .collect()
}

pub fn top_k_mean(
    matrix: &FosSkillMatrix,
    fos: &str,
    k: usize,
    mask: Option<&BTreeSet<String>>,
) -> Result<Vec<(String, f64)>, NormalizeError> {
    Ok(rank_row(&matrix.skill_list, matrix.fos_row(fos)?, k, mask))
}

pub fn top_k_rca(
    matrix: &RcaMatrix,
    fos: &str,
    k: usize,
    mask: Option<&BTreeSet<String>>,
) -> Result<Vec<(String, f64)>, NormalizeError> {
    Ok(rank_row(&matrix.skill_list, matrix.fos_row(fos)?, k, mask))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub p_value: f64,
    pub n: usize,
    pub percentile: f64,
}

/// OLS of salary on per-FOS skill distinctiveness, where distinctiveness is
/// the p-th percentile of the FOS's RCA values. The p-value is a two-sided
/// t-test on the slope.
pub fn distinctiveness_regression(
    rca: &RcaMatrix,
    percentile: f64,
    salary: &BTreeMap<String, f64>,
) -> Result<RegressionResult, NormalizeError> {
    if !(0.0 < percentile && percentile < 100.0) {
        return Err(NormalizeError::BadPercentile(percentile));
    }
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, fos) in rca.fos_list.iter().enumerate() {
        if let Some(&earnings) = salary.get(fos) {
            let mut row = rca.values.row(i).to_vec();
            row.sort_by(|a, b| a.partial_cmp(b).unwrap());
            points.push((percentile_sorted(&row, percentile), earnings));
        }
    }
    let n = points.len();
    if n < 3 {
        return Err(NormalizeError::TooFewPoints(n));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let x_mean = pairwise_mean(&xs);
    let y_mean = pairwise_mean(&ys);
    let sxx: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let syy: f64 = ys.iter().map(|y| (y - y_mean) * (y - y_mean)).sum();

    // Degenerate x (all FOS equally distinctive): report a flat fit.
    if sxx == 0.0 {
        return Ok(RegressionResult {
            slope: 0.0,
            intercept: y_mean,
            r_squared: 0.0,
            p_value: 1.0,
            n,
            percentile,
        });
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 0.0 };
    let p_value = if sse <= 0.0 {
        // Zero residuals: either an exact relationship (t diverges) or a
        // constant target with nothing to test.
        if slope == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        let sigma2 = sse / (n - 2) as f64;
        let se = (sigma2 / sxx).sqrt();
        let t = slope / se;
        let dist = StudentsT::new(0.0, 1.0, (n - 2) as f64).expect("valid dof");
        2.0 * (1.0 - dist.cdf(t.abs()))
    };
    Ok(RegressionResult {
        slope,
        intercept,
        r_squared,
        p_value,
        n,
        percentile,
    })
}
