//! Pairwise Spearman rank correlation between FOS skill profiles.

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::normalize::FosSkillMatrix;

/// Symmetric FOS-by-FOS similarity with unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub method: String,
    /// One entry per constant row, whose correlations were recorded as 0.
    pub warnings: Vec<String>,
}

impl SimilarityMatrix {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }
}

/// Average ranks (1-based), with ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share the average 1-based rank.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return None;
    }
    Some(cov / (var_a.sqrt() * var_b.sqrt()))
}

/// Spearman rho between every pair of FOS rows (rank, then Pearson on the
/// average ranks). A constant row has undefined rho: its off-diagonal
/// entries are recorded as 0 with a warning; the diagonal stays 1.
pub fn spearman_similarity(matrix: &FosSkillMatrix) -> Result<SimilarityMatrix, AnalyticsError> {
    let n_skills = matrix.skill_list.len();
    if n_skills < 2 {
        return Err(AnalyticsError::TooFewSkills(n_skills));
    }
    let n = matrix.fos_list.len();
    let ranks: Vec<Vec<f64>> = (0..n).map(|i| average_ranks(matrix.values.row(i))).collect();
    let constant: Vec<bool> = (0..n)
        .map(|i| {
            let row = matrix.values.row(i);
            row.iter().all(|&v| v == row[0])
        })
        .collect();
    let mut values = vec![vec![0.0; n]; n];
    let mut warnings = Vec::new();
    for (i, is_const) in constant.iter().enumerate() {
        values[i][i] = 1.0;
        if *is_const {
            warnings.push(format!(
                "FOS {} has a constant skill profile; its correlations are recorded as 0",
                matrix.fos_list[i]
            ));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let rho = if constant[i] || constant[j] {
                0.0
            } else {
                pearson(&ranks[i], &ranks[j]).unwrap_or(0.0)
            };
            values[i][j] = rho;
            values[j][i] = rho;
        }
    }
    Ok(SimilarityMatrix {
        labels: matrix.fos_list.clone(),
        values,
        method: "spearman".into(),
        warnings,
    })
}

impl SimilarityMatrix {
    /// Builds a similarity matrix from precomputed values; callers are
    /// responsible for symmetry and the unit diagonal.
    pub fn from_values(labels: Vec<String>, values: Vec<Vec<f64>>) -> SimilarityMatrix {
        SimilarityMatrix {
            labels,
            values,
            method: "spearman".into(),
            warnings: Vec::new(),
        }
    }
}
