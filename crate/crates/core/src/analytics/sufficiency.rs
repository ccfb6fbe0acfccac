//! Subset-size sufficiency analysis: how far the mean profile of k
//! randomly sampled syllabi sits from the full-group mean, with an elbow
//! detector for the resulting curve.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::AnalyticsError;
use crate::numeric::{derive_seed, pairwise_mean, pairwise_sum};

const STREAM_TRIAL: u64 = 0x5AFE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    Manhattan,
    Euclidean,
}

impl DistanceMetric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            DistanceMetric::Manhattan => {
                a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
            }
            DistanceMetric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

impl std::fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DistanceMetric::Manhattan => write!(f, "manhattan"),
            DistanceMetric::Euclidean => write!(f, "euclidean"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyPoint {
    pub k: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// For each subset size k in 1..n-1: sample k vectors without replacement
/// (`trials` times, seeds derived from `seed`, k, and the trial index),
/// average them, and measure the distance to the full-group mean. Reports
/// the per-k mean with a 95% Student-t confidence interval over trials.
pub fn sufficiency_curve(
    vectors: &[Vec<f64>],
    trials: usize,
    metric: DistanceMetric,
    seed: u64,
) -> Result<Vec<SufficiencyPoint>, AnalyticsError> {
    let n = vectors.len();
    if n < 2 {
        return Err(AnalyticsError::GroupTooSmall(n));
    }
    let dim = vectors[0].len();
    let full_mean = mean_of(vectors, &(0..n).collect::<Vec<_>>(), dim);

    let points: Vec<SufficiencyPoint> = (1..n)
        .into_par_iter()
        .map(|k| {
            let distances: Vec<f64> = (0..trials)
                .map(|trial| {
                    let trial_seed =
                        derive_seed(seed, &[STREAM_TRIAL, k as u64, trial as u64]);
                    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
                    let mut picked =
                        rand::seq::index::sample(&mut rng, n, k).into_vec();
                    picked.sort_unstable();
                    let sample_mean = mean_of(vectors, &picked, dim);
                    metric.distance(&sample_mean, &full_mean)
                })
                .collect();
            let mean = pairwise_mean(&distances);
            let (ci_low, ci_high) = confidence_interval(&distances, mean);
            SufficiencyPoint {
                k,
                mean,
                ci_low,
                ci_high,
            }
        })
        .collect();
    Ok(points)
}

fn mean_of(vectors: &[Vec<f64>], rows: &[usize], dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(dim);
    let mut column = Vec::with_capacity(rows.len());
    for d in 0..dim {
        column.clear();
        column.extend(rows.iter().map(|&r| vectors[r][d]));
        out.push(pairwise_sum(&column) / rows.len() as f64);
    }
    out
}

fn confidence_interval(samples: &[f64], mean: f64) -> (f64, f64) {
    let n = samples.len();
    if n < 2 {
        return (mean, mean);
    }
    let sq: Vec<f64> = samples.iter().map(|&d| (d - mean) * (d - mean)).collect();
    let sd = (pairwise_sum(&sq) / (n - 1) as f64).sqrt();
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("valid dof")
        .inverse_cdf(0.975);
    let half = t * sd / (n as f64).sqrt();
    (mean - half, mean + half)
}

/// Knee of a curve: the point with the maximum perpendicular distance to
/// the chord joining the first and last points; ties go to the smallest k.
pub fn elbow_detect(curve: &[(usize, f64)]) -> Result<usize, AnalyticsError> {
    if curve.len() < 3 {
        return Err(AnalyticsError::TooFewPoints(curve.len()));
    }
    if curve.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(AnalyticsError::UnsortedCurve);
    }
    let (x1, y1) = (curve[0].0 as f64, curve[0].1);
    let (xn, yn) = (curve[curve.len() - 1].0 as f64, curve[curve.len() - 1].1);
    let dx = xn - x1;
    let dy = yn - y1;
    let chord = (dx * dx + dy * dy).sqrt();
    let mut best_k = curve[1].0;
    let mut best_dist = f64::NEG_INFINITY;
    for &(k, y) in &curve[1..curve.len() - 1] {
        let x = k as f64;
        let dist = if chord == 0.0 {
            let (ex, ey) = (x - x1, y - y1);
            (ex * ex + ey * ey).sqrt()
        } else {
            (dy * x - dx * y + xn * y1 - yn * x1).abs() / chord
        };
        if dist > best_dist {
            best_dist = dist;
            best_k = k;
        }
    }
    Ok(best_k)
}
