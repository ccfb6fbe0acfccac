//! Mapping DWA coverage to worker-ability scores: one random-forest
//! regressor per ability, trained on occupation profiles (DWA incidence as
//! features, ability importance as target), selected by grid search with
//! 5-fold CV.
//!
//! Ability targets are min-max scaled to [0, 1] per ability across
//! occupations before training; a constant column scales to all zeros. A
//! syllabus vector flagged `empty_content` maps to all-zero abilities.

mod forest;
mod tree;

pub use forest::{
    bootstrap_rows, cv_folds, default_grid, oob_mse, train_forest, train_forest_cv, CvOutcome,
    Forest, ForestError, GridCellResult,
};
pub use tree::{train_tree, FeatureCount, Hyperparams, RegressionTree, TreeNode};

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{derive_seed, Matrix};
use crate::score::{SkillTaxonomy, SkillVector, TaxonomyKind};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum AbilityError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("cannot read {path}: {message}")]
    BadFile { path: String, message: String },
    #[error("no occupations shared between the DWA and ability profiles")]
    EmptyJoin,
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error("skill vector is not aligned with the models: {0}")]
    TaxonomyMismatch(String),
    #[error("model file version {0} is not supported (expected {MODEL_VERSION})")]
    UnsupportedVersion(u32),
}

/// Per-occupation DWA feature matrix, columns aligned with a DWA taxonomy.
#[derive(Debug, Clone)]
pub struct OccupationDwaTable {
    pub soc_codes: Vec<String>,
    pub dwa_ids: Vec<String>,
    pub values: Matrix,
    /// DWA ids present in the file but absent from the taxonomy.
    pub unknown_dwa_ids: Vec<String>,
}

/// Per-occupation ability importance matrix (raw, unscaled).
#[derive(Debug, Clone)]
pub struct OccupationAbilityTable {
    pub soc_codes: Vec<String>,
    pub ability_ids: Vec<String>,
    pub values: Matrix,
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>, AbilityError> {
    if !path.exists() {
        return Err(AbilityError::FileNotFound(path.display().to_string()));
    }
    csv::Reader::from_path(path).map_err(|e| AbilityError::BadFile {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn bad_file(path: &Path, message: impl ToString) -> AbilityError {
    AbilityError::BadFile {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

fn header_index(
    headers: &csv::StringRecord,
    name: &str,
    path: &Path,
) -> Result<usize, AbilityError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| bad_file(path, format!("missing column {name:?}")))
}

/// Loads a long-format occupation-to-DWA file with columns
/// (soc_code, dwa_id[, value]). Without a value column every listed pair is
/// binary incidence (1.0). Feature columns follow the taxonomy order; rows
/// come out sorted by SOC code.
pub fn load_occupation_dwa(
    path: &Path,
    taxonomy: &SkillTaxonomy,
) -> Result<OccupationDwaTable, AbilityError> {
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(|e| bad_file(path, e))?.clone();
    let soc_idx = header_index(&headers, "soc_code", path)?;
    let dwa_idx = header_index(&headers, "dwa_id", path)?;
    let value_idx = headers.iter().position(|h| h == "value");

    let dwa_positions: BTreeMap<&str, usize> = taxonomy
        .entries()
        .iter()
        .enumerate()
        .map(|(i, e)| (e.skill_id.as_str(), i))
        .collect();

    let mut cells: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut unknown: Vec<String> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| bad_file(path, e))?;
        let soc = row.get(soc_idx).unwrap_or("").trim().to_string();
        let dwa = row.get(dwa_idx).unwrap_or("").trim();
        if soc.is_empty() || dwa.is_empty() {
            continue;
        }
        let value = match value_idx {
            Some(i) => row
                .get(i)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .map_err(|e| bad_file(path, format!("bad value for ({soc}, {dwa}): {e}")))?,
            None => 1.0,
        };
        match dwa_positions.get(dwa) {
            Some(&col) => {
                cells
                    .entry(soc)
                    .or_insert_with(|| vec![0.0; taxonomy.len()])[col] = value;
            }
            None => {
                if !unknown.iter().any(|u| u == dwa) {
                    unknown.push(dwa.to_string());
                }
            }
        }
    }
    let soc_codes: Vec<String> = cells.keys().cloned().collect();
    let values = Matrix::from_rows(cells.into_values().collect());
    Ok(OccupationDwaTable {
        soc_codes,
        dwa_ids: taxonomy.skill_ids().map(str::to_string).collect(),
        values,
        unknown_dwa_ids: unknown,
    })
}

/// Loads a long-format occupation-to-ability importance file with columns
/// (soc_code, ability_id, importance). Ability columns are ordered by first
/// appearance in the file; rows come out sorted by SOC code.
pub fn load_occupation_abilities(path: &Path) -> Result<OccupationAbilityTable, AbilityError> {
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(|e| bad_file(path, e))?.clone();
    let soc_idx = header_index(&headers, "soc_code", path)?;
    let ability_idx = header_index(&headers, "ability_id", path)?;
    let importance_idx = header_index(&headers, "importance", path)?;

    let mut ability_ids: Vec<String> = Vec::new();
    let mut triples: Vec<(String, usize, f64)> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| bad_file(path, e))?;
        let soc = row.get(soc_idx).unwrap_or("").trim().to_string();
        let ability = row.get(ability_idx).unwrap_or("").trim().to_string();
        if soc.is_empty() || ability.is_empty() {
            continue;
        }
        let importance = row
            .get(importance_idx)
            .unwrap_or("")
            .trim()
            .parse::<f64>()
            .map_err(|e| bad_file(path, format!("bad importance for ({soc}, {ability}): {e}")))?;
        let col = match ability_ids.iter().position(|a| a == &ability) {
            Some(i) => i,
            None => {
                ability_ids.push(ability);
                ability_ids.len() - 1
            }
        };
        triples.push((soc, col, importance));
    }
    let mut rows: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (soc, col, importance) in triples {
        let row = rows
            .entry(soc)
            .or_insert_with(|| vec![0.0; ability_ids.len()]);
        row.resize(ability_ids.len(), 0.0);
        row[col] = importance;
    }
    // Early rows may predate late-appearing ability columns.
    for row in rows.values_mut() {
        row.resize(ability_ids.len(), 0.0);
    }
    let soc_codes: Vec<String> = rows.keys().cloned().collect();
    let values = Matrix::from_rows(rows.into_values().collect());
    Ok(OccupationAbilityTable {
        soc_codes,
        ability_ids,
        values,
    })
}

/// Aligned training matrices: X rows and Y rows share one SOC-code order
/// (the sorted intersection of the two tables). Y is min-max scaled to
/// [0, 1] per ability; a constant column becomes all zeros.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub soc_codes: Vec<String>,
    pub dwa_ids: Vec<String>,
    pub ability_ids: Vec<String>,
    pub x: Matrix,
    pub y: Matrix,
    pub unmatched_dwa_socs: Vec<String>,
    pub unmatched_ability_socs: Vec<String>,
}

pub fn build_training(
    dwa: &OccupationDwaTable,
    abilities: &OccupationAbilityTable,
) -> Result<TrainingData, AbilityError> {
    let ability_rows: BTreeMap<&str, usize> = abilities
        .soc_codes
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut soc_codes = Vec::new();
    let mut x_rows = Vec::new();
    let mut y_rows = Vec::new();
    let mut unmatched_dwa_socs = Vec::new();
    for (i, soc) in dwa.soc_codes.iter().enumerate() {
        match ability_rows.get(soc.as_str()) {
            Some(&j) => {
                soc_codes.push(soc.clone());
                x_rows.push(dwa.values.row(i).to_vec());
                y_rows.push(abilities.values.row(j).to_vec());
            }
            None => unmatched_dwa_socs.push(soc.clone()),
        }
    }
    let unmatched_ability_socs: Vec<String> = abilities
        .soc_codes
        .iter()
        .filter(|s| !soc_codes.contains(s))
        .cloned()
        .collect();
    if soc_codes.is_empty() {
        return Err(AbilityError::EmptyJoin);
    }
    let x = Matrix::from_rows(x_rows);
    let mut y = Matrix::from_rows(y_rows);
    min_max_scale_columns(&mut y);
    Ok(TrainingData {
        soc_codes,
        dwa_ids: dwa.dwa_ids.clone(),
        ability_ids: abilities.ability_ids.clone(),
        x,
        y,
        unmatched_dwa_socs,
        unmatched_ability_socs,
    })
}

fn min_max_scale_columns(m: &mut Matrix) {
    for j in 0..m.n_cols() {
        let col = m.column(j);
        let (min, max) = col
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        for i in 0..m.n_rows() {
            let scaled = if max > min {
                (m.get(i, j) - min) / (max - min)
            } else {
                0.0
            };
            m.set(i, j, scaled);
        }
    }
}

/// One serialized regressor: its target ability, winning hyperparameters,
/// CV error, seed, and the fingerprint of the DWA taxonomy it was trained
/// against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub ability_id: String,
    pub hyperparams: Hyperparams,
    pub cv_mse: f64,
    pub master_seed: u64,
    pub taxonomy_fingerprint: String,
    pub n_features: usize,
    pub trees: Vec<RegressionTree>,
}

impl ForestModel {
    pub fn predict(&self, features: &[f64]) -> f64 {
        let preds: Vec<f64> = self.trees.iter().map(|t| t.predict(features)).collect();
        crate::numeric::pairwise_mean(&preds)
    }
}

/// Versioned on-disk container for the per-ability models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub version: u32,
    pub taxonomy_fingerprint: String,
    pub master_seed: u64,
    pub models: Vec<ForestModel>,
}

impl ModelBundle {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model bundle serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, AbilityError> {
        #[derive(Deserialize)]
        struct VersionProbe {
            version: u32,
        }
        let probe: VersionProbe = serde_json::from_str(json).map_err(|e| AbilityError::BadFile {
            path: "<model json>".into(),
            message: e.to_string(),
        })?;
        if probe.version != MODEL_VERSION {
            return Err(AbilityError::UnsupportedVersion(probe.version));
        }
        serde_json::from_str(json).map_err(|e| AbilityError::BadFile {
            path: "<model json>".into(),
            message: e.to_string(),
        })
    }
}

/// Trains one forest per ability column of `training.y`. Ability `i` uses
/// the derived seed hash(master_seed, i); within each forest, tree seeds
/// derive from that per-ability seed and the tree index. Abilities train
/// in parallel; results keep column order.
pub fn train_all_abilities(
    training: &TrainingData,
    grid: &[Hyperparams],
    folds: usize,
    master_seed: u64,
    taxonomy: &SkillTaxonomy,
) -> Result<ModelBundle, AbilityError> {
    let fingerprint = taxonomy.fingerprint();
    let outcomes: Result<Vec<ForestModel>, ForestError> = training
        .ability_ids
        .par_iter()
        .enumerate()
        .map(|(col, ability_id)| {
            let y = training.y.column(col);
            let ability_seed = derive_seed(master_seed, &[col as u64]);
            let outcome = train_forest_cv(&training.x, &y, grid, folds, ability_seed)?;
            Ok(ForestModel {
                ability_id: ability_id.clone(),
                hyperparams: outcome.forest.hyperparams.clone(),
                cv_mse: outcome.cv_mse,
                master_seed: ability_seed,
                taxonomy_fingerprint: fingerprint.clone(),
                n_features: training.x.n_cols(),
                trees: outcome.forest.trees,
            })
        })
        .collect();
    Ok(ModelBundle {
        version: MODEL_VERSION,
        taxonomy_fingerprint: fingerprint,
        master_seed,
        models: outcomes?,
    })
}

/// Ability scores for one syllabus, aligned with the bundle's model order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbilityVector {
    pub syllabus_id: String,
    pub scores: Vec<f64>,
    pub empty_content: bool,
}

/// Maps a DWA skill vector through the 52 regressors. An `empty_content`
/// vector maps to all zeros without touching the models.
pub fn predict_abilities(
    vector: &SkillVector,
    bundle: &ModelBundle,
) -> Result<AbilityVector, AbilityError> {
    if vector.taxonomy_kind != TaxonomyKind::Dwa {
        return Err(AbilityError::TaxonomyMismatch(format!(
            "expected a dwa vector, got {}",
            vector.taxonomy_kind
        )));
    }
    if vector.empty_content {
        return Ok(AbilityVector {
            syllabus_id: vector.syllabus_id.clone(),
            scores: vec![0.0; bundle.models.len()],
            empty_content: true,
        });
    }
    let scores: Result<Vec<f64>, AbilityError> = bundle
        .models
        .iter()
        .map(|model| {
            if model.taxonomy_fingerprint != bundle.taxonomy_fingerprint {
                return Err(AbilityError::TaxonomyMismatch(format!(
                    "model {} was trained against a different taxonomy",
                    model.ability_id
                )));
            }
            if model.n_features != vector.scores.len() {
                return Err(AbilityError::TaxonomyMismatch(format!(
                    "model {} expects {} features, vector has {}",
                    model.ability_id,
                    model.n_features,
                    vector.scores.len()
                )));
            }
            Ok(model.predict(&vector.scores))
        })
        .collect();
    Ok(AbilityVector {
        syllabus_id: vector.syllabus_id.clone(),
        scores: scores?,
        empty_content: false,
    })
}

/// Verifies that a bundle was trained against this taxonomy.
pub fn check_bundle_alignment(
    bundle: &ModelBundle,
    taxonomy: &SkillTaxonomy,
) -> Result<(), AbilityError> {
    if bundle.taxonomy_fingerprint != taxonomy.fingerprint() {
        return Err(AbilityError::TaxonomyMismatch(
            "model bundle fingerprint does not match the supplied taxonomy".into(),
        ));
    }
    Ok(())
}
