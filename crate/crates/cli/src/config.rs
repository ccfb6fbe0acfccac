//! Declarative pipeline configuration (TOML) with flag overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use syllabus_skills::ability::Hyperparams;
use syllabus_skills::analytics::DistanceMetric;
use syllabus_skills::corpus::CorpusFormat;
use syllabus_skills::embed::ProviderConfig;

use crate::errors::{config_err, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaborPeriod {
    pub label: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Paths {
    pub corpus: PathBuf,
    #[serde(default = "default_corpus_format")]
    pub corpus_format: CorpusFormat,
    pub logistics_list: PathBuf,
    pub learning_list: PathBuf,
    #[serde(default)]
    pub abbreviations: Option<PathBuf>,
    pub dwa_taxonomy: PathBuf,
    #[serde(default)]
    pub task_taxonomy: Option<PathBuf>,
    #[serde(default)]
    pub ability_taxonomy: Option<PathBuf>,
    pub occupation_dwa: PathBuf,
    pub occupation_abilities: PathBuf,
    /// One labor-side employment table per period.
    pub employment_weights: Vec<LaborPeriod>,
    pub salary_table: PathBuf,
    pub output_dir: PathBuf,
}

fn default_corpus_format() -> CorpusFormat {
    CorpusFormat::Jsonl
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Options {
    pub max_malformed_fraction: f64,
    pub prefix_match: bool,
    pub min_tokens: usize,
    pub quantization_decimals: u32,
    pub mask_top_n: usize,
    pub mask_threshold: f64,
    pub top_k: usize,
    pub kl_epsilon: f64,
    pub distinctiveness_percentile: f64,
    pub sufficiency_trials: usize,
    pub sufficiency_metrics: Vec<DistanceMetric>,
    pub louvain_min_rho: f64,
    pub occupation_filter: Vec<String>,
    /// Inclusive [start, end] year ranges for the syllabus side of the KL
    /// analysis.
    pub periods: Vec<(i32, i32)>,
    pub cv_folds: usize,
    pub forest_grid: Vec<Hyperparams>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            max_malformed_fraction: 0.0,
            prefix_match: true,
            min_tokens: 3,
            quantization_decimals: 12,
            mask_top_n: 100,
            mask_threshold: 0.5,
            top_k: 10,
            kl_epsilon: syllabus_skills::analytics::DEFAULT_EPSILON,
            distinctiveness_percentile: 90.0,
            sufficiency_trials: 10,
            sufficiency_metrics: vec![DistanceMetric::Manhattan, DistanceMetric::Euclidean],
            louvain_min_rho: 0.0,
            occupation_filter: Vec::new(),
            periods: Vec::new(),
            cv_folds: 5,
            forest_grid: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    pub paths: Paths,
    pub provider: ProviderConfig,
    #[serde(default)]
    pub options: Options,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub logistics_list: Option<PathBuf>,
    pub learning_list: Option<PathBuf>,
    pub abbrev_list: Option<PathBuf>,
    pub prefix_match: Option<bool>,
    pub seed: Option<u64>,
}

impl PipelineConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        if !path.exists() {
            return Err(config_err(format!("config file not found: {}", path.display())));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = toml::from_str(&text)
            .map_err(|e| config_err(format!("bad config {}: {e}", path.display())))?;

        // Paths in the config are relative to the config file's directory.
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.anchor_paths(base);

        if let Some(corpus) = &overrides.corpus {
            cfg.paths.corpus = corpus.clone();
        }
        if let Some(out) = &overrides.output_dir {
            cfg.paths.output_dir = out.clone();
        }
        if let Some(p) = &overrides.logistics_list {
            cfg.paths.logistics_list = p.clone();
        }
        if let Some(p) = &overrides.learning_list {
            cfg.paths.learning_list = p.clone();
        }
        if let Some(p) = &overrides.abbrev_list {
            cfg.paths.abbreviations = Some(p.clone());
        }
        if let Some(prefix) = overrides.prefix_match {
            cfg.options.prefix_match = prefix;
        }
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
        }
        if cfg.options.forest_grid.is_empty() {
            cfg.options.forest_grid = syllabus_skills::ability::default_grid();
        }
        cfg.provider.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(cfg)
    }

    fn anchor_paths(&mut self, base: &Path) {
        let anchor = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        anchor(&mut self.paths.corpus);
        anchor(&mut self.paths.logistics_list);
        anchor(&mut self.paths.learning_list);
        if let Some(p) = self.paths.abbreviations.as_mut() {
            anchor(p);
        }
        anchor(&mut self.paths.dwa_taxonomy);
        if let Some(p) = self.paths.task_taxonomy.as_mut() {
            anchor(p);
        }
        if let Some(p) = self.paths.ability_taxonomy.as_mut() {
            anchor(p);
        }
        anchor(&mut self.paths.occupation_dwa);
        anchor(&mut self.paths.occupation_abilities);
        for period in self.paths.employment_weights.iter_mut() {
            anchor(&mut period.path);
        }
        anchor(&mut self.paths.salary_table);
        anchor(&mut self.paths.output_dir);
        if self.provider.kind == syllabus_skills::ProviderKind::Cache {
            let mut p = PathBuf::from(&self.provider.endpoint_or_path);
            if !self.provider.endpoint_or_path.is_empty() && p.is_relative() {
                p = base.join(p);
                self.provider.endpoint_or_path = p.display().to_string();
            }
        }
    }

    /// Fails naming the first configured input path that does not exist.
    pub fn validate_paths(&self, required: &[(&str, &Path)]) -> Result<()> {
        for (field, path) in required {
            if !path.exists() {
                return Err(config_err(format!(
                    "configured path for {field} does not exist: {}",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    /// SHA-256 of the resolved configuration (canonical JSON form).
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        syllabus_skills::hashing::sha256_hex(json.as_bytes())
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.paths.output_dir.join(name)
    }
}
