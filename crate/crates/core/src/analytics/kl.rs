//! KL divergence between taught-skill distributions and employment-
//! weighted labor-market skill profiles.
//!
//! Distributions are built by clamping negatives to zero, adding a small
//! epsilon to every cell (KL is infinite on disjoint supports otherwise),
//! and normalizing to sum 1.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::ability::OccupationDwaTable;
use crate::numeric::{pairwise_mean, pairwise_sum};
use crate::score::SkillVector;

pub const DEFAULT_EPSILON: f64 = 1e-9;

/// A smoothed probability distribution over skills: strictly positive
/// entries summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Clamp negatives to zero, add `epsilon` everywhere, normalize.
    pub fn from_shares(raw: &[f64], epsilon: f64) -> Result<Self, AnalyticsError> {
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(AnalyticsError::BadDistribution);
        }
        let smoothed: Vec<f64> = raw.iter().map(|&v| v.max(0.0) + epsilon).collect();
        let total = pairwise_sum(&smoothed);
        if !(total > 0.0) {
            return Err(AnalyticsError::BadDistribution);
        }
        Ok(Distribution {
            probs: smoothed.into_iter().map(|v| v / total).collect(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// KL(P || Q) = sum P ln(P/Q). Nonnegative up to rounding; asymmetric.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64, AnalyticsError> {
    if p.len() != q.len() {
        return Err(AnalyticsError::LengthMismatch(p.len(), q.len()));
    }
    let terms: Vec<f64> = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Employment-weighted mean DWA profile over the occupations selected by
/// `soc_prefixes` (an occupation matches when its SOC code starts with any
/// prefix). Weights must be nonnegative; smoothed and normalized.
pub fn labor_profile(
    dwa: &OccupationDwaTable,
    employment: &BTreeMap<String, f64>,
    soc_prefixes: &[String],
    epsilon: f64,
) -> Result<Distribution, AnalyticsError> {
    if soc_prefixes.is_empty() {
        return Err(AnalyticsError::EmptyFilter);
    }
    for (soc, &w) in employment {
        if w < 0.0 {
            return Err(AnalyticsError::NegativeWeight(soc.clone()));
        }
    }
    let n_skills = dwa.dwa_ids.len();
    let mut mix = vec![0.0; n_skills];
    let mut total_weight = 0.0;
    for (i, soc) in dwa.soc_codes.iter().enumerate() {
        if !soc_prefixes.iter().any(|p| soc.starts_with(p.as_str())) {
            continue;
        }
        let Some(&weight) = employment.get(soc) else {
            continue;
        };
        if weight == 0.0 {
            continue;
        }
        total_weight += weight;
        for (slot, &v) in mix.iter_mut().zip(dwa.values.row(i)) {
            *slot += weight * v;
        }
    }
    if total_weight == 0.0 {
        return Err(AnalyticsError::ZeroWeight);
    }
    Distribution::from_shares(&mix, epsilon)
}

/// Mean skill vector over one period's syllabi (sorted by syllabus_id for
/// reproducibility), clamped and normalized into a distribution.
pub fn period_distribution(
    vectors: &[&SkillVector],
    epsilon: f64,
) -> Result<Distribution, AnalyticsError> {
    if vectors.is_empty() {
        return Err(AnalyticsError::BadDistribution);
    }
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    order.sort_by(|&a, &b| vectors[a].syllabus_id.cmp(&vectors[b].syllabus_id));
    let n_skills = vectors[0].scores.len();
    let mut mean = Vec::with_capacity(n_skills);
    let mut column = Vec::with_capacity(vectors.len());
    for s in 0..n_skills {
        column.clear();
        column.extend(order.iter().map(|&i| vectors[i].scores[s]));
        mean.push(pairwise_mean(&column));
    }
    Distribution::from_shares(&mean, epsilon)
}

/// Pairwise KL grid over labeled distributions: values[i][j] = KL(i || j).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlGrid {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

/// Full grid over syllabus-period distributions followed by labor-period
/// distributions, in the given order.
pub fn period_kl_matrix(
    syllabus_periods: &[(String, Distribution)],
    labor_periods: &[(String, Distribution)],
) -> Result<KlGrid, AnalyticsError> {
    let all: Vec<(&String, &Distribution)> = syllabus_periods
        .iter()
        .map(|(l, d)| (l, d))
        .chain(labor_periods.iter().map(|(l, d)| (l, d)))
        .collect();
    let mut values = Vec::with_capacity(all.len());
    for (_, p) in &all {
        let mut row = Vec::with_capacity(all.len());
        for (_, q) in &all {
            row.push(kl_divergence(p, q)?);
        }
        values.push(row);
    }
    Ok(KlGrid {
        labels: all.into_iter().map(|(l, _)| l.clone()).collect(),
        values,
    })
}
