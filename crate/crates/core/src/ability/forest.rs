//! Random-forest regression with grid search over hyperparameters and
//! seeded k-fold cross-validation.
//!
//! Bootstrap sampling is with replacement at full sample size; per-tree
//! seeds derive from the master seed and the tree index, so trees can train
//! in parallel without changing any output. Model selection uses CV; the
//! out-of-bag error is reported as a diagnostic only.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{train_tree, Hyperparams, RegressionTree};
use crate::numeric::{derive_seed, pairwise_mean, Matrix};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("need at least {folds} samples for {folds}-fold CV, got {n}")]
    TooFewSamples { n: usize, folds: usize },
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
}

// Stream tags for seed derivation, so folds, bootstraps, and feature
// subsets never share an RNG stream.
const STREAM_FOLDS: u64 = 0xF01D;
const STREAM_TREE: u64 = 0x7EEE;

/// One trained forest for one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub hyperparams: Hyperparams,
    pub trees: Vec<RegressionTree>,
}

impl Forest {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let preds: Vec<f64> = self.trees.iter().map(|t| t.predict(x)).collect();
        pairwise_mean(&preds)
    }
}

/// Bootstrap rows for tree `tree_index`: `n` draws with replacement.
pub fn bootstrap_rows(n: usize, master_seed: u64, tree_index: usize) -> Vec<usize> {
    let seed = derive_seed(master_seed, &[STREAM_TREE, tree_index as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

/// Trains `hp.n_trees` trees on bootstrap samples of the rows in `rows`
/// (indices into `x`/`y`). Trees are independent given their derived seeds.
pub fn train_forest(x: &Matrix, y: &[f64], rows: &[usize], hp: &Hyperparams, master_seed: u64) -> Forest {
    let trees: Vec<RegressionTree> = (0..hp.n_trees)
        .into_par_iter()
        .map(|tree_index| {
            let seed = derive_seed(master_seed, &[STREAM_TREE, tree_index as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let boot: Vec<usize> = (0..rows.len())
                .map(|_| rows[rng.gen_range(0..rows.len())])
                .collect();
            train_tree(x, y, &boot, hp, &mut rng)
        })
        .collect();
    Forest {
        hyperparams: hp.clone(),
        trees,
    }
}

/// Seeded permutation split into `folds` near-equal contiguous chunks.
pub fn cv_folds(n: usize, folds: usize, master_seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, &[STREAM_FOLDS]));
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        out.push(order[start..start + size].to_vec());
        start += size;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCellResult {
    pub hyperparams: Hyperparams,
    pub cv_mse: f64,
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub forest: Forest,
    pub cv_mse: f64,
    pub per_cell: Vec<GridCellResult>,
}

/// Grid search with k-fold CV: per-cell MSE is the mean over folds of the
/// held-out mean squared error; ties keep the earlier grid cell; the winner
/// is retrained on all rows.
pub fn train_forest_cv(
    x: &Matrix,
    y: &[f64],
    grid: &[Hyperparams],
    folds: usize,
    master_seed: u64,
) -> Result<CvOutcome, ForestError> {
    let n = x.n_rows();
    if grid.is_empty() {
        return Err(ForestError::EmptyGrid);
    }
    if n < folds || folds < 2 {
        return Err(ForestError::TooFewSamples { n, folds });
    }
    let fold_rows = cv_folds(n, folds, master_seed);
    let per_cell: Vec<GridCellResult> = grid
        .par_iter()
        .map(|hp| {
            let fold_mses: Vec<f64> = fold_rows
                .iter()
                .map(|held_out| {
                    let train_rows: Vec<usize> =
                        (0..n).filter(|i| !held_out.contains(i)).collect();
                    let forest = train_forest(x, y, &train_rows, hp, master_seed);
                    let errs: Vec<f64> = held_out
                        .iter()
                        .map(|&i| {
                            let e = forest.predict(x.row(i)) - y[i];
                            e * e
                        })
                        .collect();
                    pairwise_mean(&errs)
                })
                .collect();
            GridCellResult {
                hyperparams: hp.clone(),
                cv_mse: pairwise_mean(&fold_mses),
            }
        })
        .collect();

    let mut best_idx = 0;
    for (i, cell) in per_cell.iter().enumerate() {
        if cell.cv_mse < per_cell[best_idx].cv_mse {
            best_idx = i;
        }
    }
    let winner = &per_cell[best_idx];
    let all_rows: Vec<usize> = (0..n).collect();
    let forest = train_forest(x, y, &all_rows, &winner.hyperparams, master_seed);
    Ok(CvOutcome {
        forest,
        cv_mse: winner.cv_mse,
        per_cell,
    })
}

/// Out-of-bag MSE diagnostic: for each row, average the predictions of the
/// trees whose bootstrap did not contain it. Rows covered by every
/// bootstrap are skipped. Returns None when nothing is out of bag.
pub fn oob_mse(x: &Matrix, y: &[f64], forest: &Forest, master_seed: u64) -> Option<f64> {
    let n = x.n_rows();
    let mut in_bag = vec![vec![false; forest.trees.len()]; n];
    for (tree_index, flags) in (0..forest.trees.len()).map(|t| (t, bootstrap_rows(n, master_seed, t))) {
        for row in flags {
            in_bag[row][tree_index] = true;
        }
    }
    let mut errs = Vec::new();
    for i in 0..n {
        let preds: Vec<f64> = forest
            .trees
            .iter()
            .enumerate()
            .filter(|(t, _)| !in_bag[i][*t])
            .map(|(_, tree)| tree.predict(x.row(i)))
            .collect();
        if !preds.is_empty() {
            let e = pairwise_mean(&preds) - y[i];
            errs.push(e * e);
        }
    }
    (!errs.is_empty()).then(|| pairwise_mean(&errs))
}

/// The grid used when a config does not supply one: standard forest
/// defaults bracketing bias and variance.
pub fn default_grid() -> Vec<Hyperparams> {
    use super::tree::FeatureCount;
    let mut grid = Vec::new();
    for &n_trees in &[100usize, 300] {
        for &max_depth in &[Some(8usize), Some(16), None] {
            for &min_samples_leaf in &[1usize, 3] {
                for &features_per_split in &[FeatureCount::Sqrt, FeatureCount::Third] {
                    grid.push(Hyperparams {
                        n_trees,
                        max_depth,
                        min_samples_leaf,
                        features_per_split,
                    });
                }
            }
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ability::tree::FeatureCount;

    fn linear_data(n: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..4).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| 0.7 * r[1] + 0.1).collect();
        (Matrix::from_rows(rows), y)
    }

    #[test]
    fn folds_partition_all_rows() {
        let folds = cv_folds(13, 5, 42);
        assert_eq!(folds.len(), 5);
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3, 3, 2, 2]);
        let mut all: Vec<usize> = folds.into_iter().flatten().collect();
        all.sort_unstable();
        assert_eq!(all, (0..13).collect::<Vec<_>>());
    }

    #[test]
    fn folds_are_seeded() {
        assert_eq!(cv_folds(20, 5, 1), cv_folds(20, 5, 1));
        assert_ne!(cv_folds(20, 5, 1), cv_folds(20, 5, 2));
    }

    #[test]
    fn forest_learns_a_linear_target() {
        let (x, y) = linear_data(120, 3);
        let hp = Hyperparams {
            n_trees: 60,
            max_depth: None,
            min_samples_leaf: 1,
            features_per_split: FeatureCount::All,
        };
        let rows: Vec<usize> = (0..x.n_rows()).collect();
        let forest = train_forest(&x, &y, &rows, &hp, 7);
        let errs: Vec<f64> = (0..x.n_rows())
            .map(|i| {
                let e = forest.predict(x.row(i)) - y[i];
                e * e
            })
            .collect();
        assert!(pairwise_mean(&errs) < 0.002, "training MSE {}", pairwise_mean(&errs));
    }

    #[test]
    fn cv_ties_break_to_first_grid_cell() {
        let (x, y) = linear_data(30, 5);
        let hp = Hyperparams {
            n_trees: 10,
            max_depth: Some(4),
            min_samples_leaf: 1,
            features_per_split: FeatureCount::All,
        };
        // Two identical cells: identical CV MSE, first must win.
        let out = train_forest_cv(&x, &y, &[hp.clone(), hp.clone()], 5, 11).unwrap();
        assert_eq!(out.per_cell[0].cv_mse, out.per_cell[1].cv_mse);
        assert_eq!(out.forest.hyperparams, out.per_cell[0].hyperparams);
    }

    #[test]
    fn too_few_samples_rejected() {
        let (x, y) = linear_data(4, 0);
        let err = train_forest_cv(&x, &y, &default_grid(), 5, 0);
        assert!(matches!(err, Err(ForestError::TooFewSamples { n: 4, folds: 5 })));
    }

    #[test]
    fn training_is_bit_deterministic() {
        let (x, y) = linear_data(50, 9);
        let grid = vec![
            Hyperparams {
                n_trees: 20,
                max_depth: Some(6),
                min_samples_leaf: 1,
                features_per_split: FeatureCount::Sqrt,
            },
            Hyperparams {
                n_trees: 20,
                max_depth: Some(6),
                min_samples_leaf: 3,
                features_per_split: FeatureCount::Third,
            },
        ];
        let a = train_forest_cv(&x, &y, &grid, 5, 123).unwrap();
        let b = train_forest_cv(&x, &y, &grid, 5, 123).unwrap();
        assert_eq!(a.forest, b.forest);
        assert_eq!(a.cv_mse, b.cv_mse);
        assert_eq!(
            serde_json::to_string(&a.forest).unwrap(),
            serde_json::to_string(&b.forest).unwrap()
        );
    }

    #[test]
    fn bootstrap_covers_every_row_with_fifty_trees() {
        // P(row missed by all 50 bootstraps) ~ e^-50; over 20 seeds and 30
        // rows a miss would be astronomical.
        for seed in 0..20u64 {
            let n = 30;
            let mut covered = vec![false; n];
            for t in 0..50 {
                for r in bootstrap_rows(n, seed, t) {
                    covered[r] = true;
                }
            }
            assert!(covered.iter().all(|&c| c), "seed {seed} left a row uncovered");
        }
    }

    #[test]
    fn pure_noise_cv_mse_within_sanity_ceiling() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let rows: Vec<Vec<f64>> = (0..80).map(|_| (0..5).map(|_| rng.gen::<f64>()).collect()).collect();
        let y: Vec<f64> = (0..80).map(|_| rng.gen::<f64>()).collect();
        let x = Matrix::from_rows(rows);
        let var = {
            let mean = pairwise_mean(&y);
            let sq: Vec<f64> = y.iter().map(|v| (v - mean) * (v - mean)).collect();
            pairwise_mean(&sq)
        };
        let hp = Hyperparams {
            n_trees: 30,
            max_depth: Some(8),
            min_samples_leaf: 3,
            features_per_split: FeatureCount::Sqrt,
        };
        let out = train_forest_cv(&x, &y, &[hp], 5, 99).unwrap();
        assert!(out.cv_mse <= 3.0 * var, "cv {} vs var {}", out.cv_mse, var);
    }

    #[test]
    fn oob_diagnostic_is_finite() {
        let (x, y) = linear_data(60, 21);
        let rows: Vec<usize> = (0..x.n_rows()).collect();
        let hp = Hyperparams {
            n_trees: 40,
            ..Hyperparams::default()
        };
        let forest = train_forest(&x, &y, &rows, &hp, 5);
        let oob = oob_mse(&x, &y, &forest, 5).unwrap();
        assert!(oob.is_finite() && oob >= 0.0);
    }
}
