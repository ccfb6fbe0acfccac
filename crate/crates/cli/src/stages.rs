//! Pipeline stages. Each stage reads its declared inputs from disk, writes
//! its artifacts under the output directory, and reports both path sets so
//! the driver can record a provenance manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use syllabus_skills::ability::{
    build_training, check_bundle_alignment, load_occupation_abilities, load_occupation_dwa,
    predict_abilities, train_all_abilities, ModelBundle, OccupationAbilityTable,
};
use syllabus_skills::aggregate::{aggregate, dedup_report, SyllabusMeta};
use syllabus_skills::analytics::{
    elbow_detect, graph_from_similarity, hierarchical_cluster, labor_profile, louvain,
    period_distribution, period_kl_matrix, spearman_similarity, sufficiency_curve, Distribution,
    SimilarityMatrix,
};
use syllabus_skills::corpus::{corpus_stats, load_corpus, LoadOptions, PhraseList, SyllabusRecord};
use syllabus_skills::corpus::SentenceCountSummary;
use syllabus_skills::embed::build_provider;
use syllabus_skills::hashing::sha256_hex;
use syllabus_skills::normalize::{
    distinctiveness_regression, mask_frequent, rca, top_k_mean, top_k_rca, FosSkillMatrix,
    RcaMatrix,
};
use syllabus_skills::numeric::derive_seed;
use syllabus_skills::score::{
    load_taxonomy, negative_value_report, read_vectors_jsonl, write_vectors_jsonl, SkillScorer,
    SkillVector, TaxonomyKind,
};
use syllabus_skills::textprep::{
    filter_learning, segment, FilterConfig, FilterReport, MatchMode, Sentence, SegmenterConfig,
};
use syllabus_skills::numeric::Matrix;

use crate::config::PipelineConfig;
use crate::errors::{config_err, data_err, Result};
use crate::tables;

pub struct StageResult {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

fn ensure_out(cfg: &PipelineConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.paths.output_dir)?;
    Ok(())
}

fn load_corpus_checked(cfg: &PipelineConfig) -> Result<(Vec<SyllabusRecord>, syllabus_skills::corpus::LoadReport)> {
    cfg.validate_paths(&[("paths.corpus", &cfg.paths.corpus)])?;
    let opts = LoadOptions {
        max_malformed_fraction: cfg.options.max_malformed_fraction,
    };
    Ok(load_corpus(&cfg.paths.corpus, cfg.paths.corpus_format, &opts)?)
}

pub fn ingest_stats(cfg: &PipelineConfig) -> Result<StageResult> {
    ensure_out(cfg)?;
    let (records, report) = load_corpus_checked(cfg)?;
    let stats = corpus_stats(&records);
    let stats_path = cfg.out("corpus_stats.json");
    let report_path = cfg.out("load_report.json");
    tables::write_json(&stats_path, &stats)?;
    tables::write_json(&report_path, &report)?;
    Ok(StageResult {
        inputs: vec![cfg.paths.corpus.clone()],
        outputs: vec![stats_path, report_path],
    })
}

fn segmenter_config(cfg: &PipelineConfig) -> Result<SegmenterConfig> {
    match &cfg.paths.abbreviations {
        Some(path) => {
            cfg.validate_paths(&[("paths.abbreviations", path)])?;
            let list = PhraseList::load(path)?;
            Ok(SegmenterConfig::from_phrase_list(&list))
        }
        None => Ok(SegmenterConfig::default()),
    }
}

fn filter_config(cfg: &PipelineConfig) -> FilterConfig {
    FilterConfig {
        mode: if cfg.options.prefix_match {
            MatchMode::Prefix
        } else {
            MatchMode::Exact
        },
        min_tokens: cfg.options.min_tokens,
    }
}

#[derive(Serialize)]
struct PrepReport {
    filter: FilterReport,
    n_syllabi: u64,
    n_syllabi_empty_after_filter: u64,
    raw_sentence_count_summary: Option<SentenceCountSummary>,
    kept_sentence_count_summary: Option<SentenceCountSummary>,
}

pub fn prep(cfg: &PipelineConfig) -> Result<StageResult> {
    ensure_out(cfg)?;
    cfg.validate_paths(&[
        ("paths.logistics_list", &cfg.paths.logistics_list),
        ("paths.learning_list", &cfg.paths.learning_list),
    ])?;
    let (records, _) = load_corpus_checked(cfg)?;
    let logistics = PhraseList::load(&cfg.paths.logistics_list)?;
    let learning = PhraseList::load(&cfg.paths.learning_list)?;
    let seg_cfg = segmenter_config(cfg)?;
    let fil_cfg = filter_config(cfg);

    let per_syllabus: Result<Vec<(Vec<Sentence>, FilterReport, usize)>> = records
        .par_iter()
        .map(|rec| {
            let sentences = segment(&rec.syllabus_id, &rec.text, &seg_cfg);
            let n_raw = sentences.len();
            let (kept, report) = filter_learning(sentences, &logistics, &learning, &fil_cfg)?;
            Ok((kept, report, n_raw))
        })
        .collect();
    let per_syllabus = per_syllabus?;

    let kept_path = cfg.out("kept_sentences.jsonl");
    let mut out = String::new();
    let mut total = FilterReport::default();
    let mut raw_counts = Vec::with_capacity(records.len());
    let mut kept_counts = Vec::with_capacity(records.len());
    let mut n_empty = 0u64;
    for (kept, report, n_raw) in &per_syllabus {
        total.merge(report);
        raw_counts.push(*n_raw);
        kept_counts.push(kept.len());
        if kept.is_empty() {
            n_empty += 1;
        }
        for sentence in kept {
            out.push_str(&serde_json::to_string(sentence).expect("sentence serializes"));
            out.push('\n');
        }
    }
    std::fs::write(&kept_path, out)?;

    let report_path = cfg.out("prep_report.json");
    tables::write_json(
        &report_path,
        &PrepReport {
            filter: total,
            n_syllabi: records.len() as u64,
            n_syllabi_empty_after_filter: n_empty,
            raw_sentence_count_summary: SentenceCountSummary::from_counts(&raw_counts),
            kept_sentence_count_summary: SentenceCountSummary::from_counts(&kept_counts),
        },
    )?;

    let mut inputs = vec![
        cfg.paths.corpus.clone(),
        cfg.paths.logistics_list.clone(),
        cfg.paths.learning_list.clone(),
    ];
    if let Some(p) = &cfg.paths.abbreviations {
        inputs.push(p.clone());
    }
    Ok(StageResult {
        inputs,
        outputs: vec![kept_path, report_path],
    })
}

fn read_kept_sentences(path: &Path) -> Result<BTreeMap<String, Vec<Sentence>>> {
    let content = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e} (run `prep` first)", path.display())))?;
    let mut map: BTreeMap<String, Vec<Sentence>> = BTreeMap::new();
    for line in content.lines().filter(|l| !l.trim().is_empty()) {
        let sentence: Sentence =
            serde_json::from_str(line).map_err(|e| data_err(format!("bad sentence line: {e}")))?;
        map.entry(sentence.syllabus_id.clone()).or_default().push(sentence);
    }
    Ok(map)
}

fn taxonomy_for(cfg: &PipelineConfig, kind: TaxonomyKind) -> Result<(PathBuf, syllabus_skills::SkillTaxonomy)> {
    let path = match kind {
        TaxonomyKind::Dwa => cfg.paths.dwa_taxonomy.clone(),
        TaxonomyKind::Task => cfg
            .paths
            .task_taxonomy
            .clone()
            .ok_or_else(|| config_err("paths.task_taxonomy is not configured"))?,
        TaxonomyKind::Ability => cfg
            .paths
            .ability_taxonomy
            .clone()
            .ok_or_else(|| config_err("paths.ability_taxonomy is not configured"))?,
    };
    cfg.validate_paths(&[("taxonomy", &path)])?;
    let taxonomy = load_taxonomy(&path, kind)?;
    if let Some((actual, expected)) = taxonomy.size_warning() {
        eprintln!("warning: {kind} taxonomy has {actual} entries, full reference has {expected}");
    }
    Ok((path, taxonomy))
}

pub fn vectors_file(cfg: &PipelineConfig, kind: TaxonomyKind) -> PathBuf {
    cfg.out(&format!("{kind}_vectors.jsonl"))
}

pub fn score(cfg: &PipelineConfig, kind: TaxonomyKind) -> Result<StageResult> {
    ensure_out(cfg)?;
    if kind == TaxonomyKind::Ability {
        return Err(config_err(
            "ability vectors come from apply-abilities, not direct scoring",
        ));
    }
    let (records, _) = load_corpus_checked(cfg)?;
    let kept_path = cfg.out("kept_sentences.jsonl");
    let kept = read_kept_sentences(&kept_path)?;
    let (taxonomy_path, taxonomy) = taxonomy_for(cfg, kind)?;
    let provider = build_provider(&cfg.provider)?;
    let scorer = SkillScorer::new(&taxonomy, provider.as_ref(), cfg.provider.batch_size)?;

    let empty: Vec<Sentence> = Vec::new();
    let vectors: Result<Vec<SkillVector>> = records
        .par_iter()
        .map(|rec| {
            let sentences = kept.get(&rec.syllabus_id).unwrap_or(&empty);
            Ok(scorer.score(&rec.syllabus_id, sentences)?)
        })
        .collect();
    let vectors = vectors?;

    let vectors_path = vectors_file(cfg, kind);
    write_vectors_jsonl(&vectors_path, &vectors)?;

    let report = negative_value_report(&vectors, &taxonomy)?;
    let report_path = cfg.out(&format!("{kind}_negative_report.json"));
    #[derive(Serialize)]
    struct NegativeReport {
        n_syllabi: usize,
        fractions: Vec<(String, f64)>,
    }
    tables::write_json(
        &report_path,
        &NegativeReport {
            n_syllabi: vectors.len(),
            fractions: report,
        },
    )?;

    Ok(StageResult {
        inputs: vec![cfg.paths.corpus.clone(), kept_path, taxonomy_path],
        outputs: vec![vectors_path, report_path],
    })
}

fn vectors_with_meta(
    cfg: &PipelineConfig,
    kind: TaxonomyKind,
) -> Result<(Vec<(SkillVector, SyllabusMeta)>, Vec<PathBuf>)> {
    let (records, _) = load_corpus_checked(cfg)?;
    let path = vectors_file(cfg, kind);
    if !path.exists() {
        return Err(config_err(format!(
            "{} not found (run `score`/`apply-abilities` first)",
            path.display()
        )));
    }
    let vectors = read_vectors_jsonl(&path).map_err(data_err)?;
    let meta_by_id: BTreeMap<&str, &SyllabusRecord> = records
        .iter()
        .map(|r| (r.syllabus_id.as_str(), r))
        .collect();
    let mut items = Vec::with_capacity(vectors.len());
    for vector in vectors {
        let Some(rec) = meta_by_id.get(vector.syllabus_id.as_str()) else {
            return Err(data_err(format!(
                "vector for unknown syllabus {:?}",
                vector.syllabus_id
            )));
        };
        let meta = SyllabusMeta::from(*rec);
        items.push((vector, meta));
    }
    Ok((items, vec![cfg.paths.corpus.clone(), path]))
}

pub fn scores_table_name(kind: TaxonomyKind) -> &'static str {
    match kind {
        TaxonomyKind::Dwa => "detailed_work_activities_scores.csv",
        TaxonomyKind::Task => "task_scores.csv",
        TaxonomyKind::Ability => "abilities_scores.csv",
    }
}

fn skill_ids_for(cfg: &PipelineConfig, kind: TaxonomyKind, width: usize) -> Result<Vec<String>> {
    match kind {
        TaxonomyKind::Ability => {
            // Ability columns come from the trained model bundle.
            let models_path = cfg.out("ability_models.json");
            let json = std::fs::read_to_string(&models_path).map_err(|e| {
                config_err(format!("cannot read {}: {e}", models_path.display()))
            })?;
            let bundle = ModelBundle::from_json(&json)?;
            let ids: Vec<String> = bundle.models.iter().map(|m| m.ability_id.clone()).collect();
            if ids.len() != width {
                return Err(data_err(format!(
                    "ability vectors have {width} entries but the bundle has {}",
                    ids.len()
                )));
            }
            Ok(ids)
        }
        _ => {
            let (_, taxonomy) = taxonomy_for(cfg, kind)?;
            if taxonomy.len() != width {
                return Err(data_err(format!(
                    "{kind} vectors have {width} entries but the taxonomy has {}",
                    taxonomy.len()
                )));
            }
            Ok(taxonomy.skill_ids().map(str::to_string).collect())
        }
    }
}

pub fn aggregate_stage(cfg: &PipelineConfig, kind: TaxonomyKind) -> Result<StageResult> {
    ensure_out(cfg)?;
    let (items, mut inputs) = vectors_with_meta(cfg, kind)?;
    let width = items.first().map_or(0, |(v, _)| v.scores.len());
    let skill_ids = skill_ids_for(cfg, kind, width)?;
    let out = aggregate(&items)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }

    let meta_path = cfg.out("institution_fos_year.csv");
    tables::write_institution_fos_year(&meta_path, &out.records)?;
    let scores_path = cfg.out(scores_table_name(kind));
    tables::write_scores_table(&scores_path, &out.records, &skill_ids)?;

    let exceptions_path = cfg.out(&format!("aggregate_exceptions_{kind}.jsonl"));
    let mut lines = String::new();
    for e in &out.exceptions {
        lines.push_str(&serde_json::to_string(e).expect("exception serializes"));
        lines.push('\n');
    }
    std::fs::write(&exceptions_path, lines)?;

    match kind {
        TaxonomyKind::Ability => inputs.push(cfg.out("ability_models.json")),
        TaxonomyKind::Dwa => inputs.push(cfg.paths.dwa_taxonomy.clone()),
        TaxonomyKind::Task => {
            if let Some(p) = &cfg.paths.task_taxonomy {
                inputs.push(p.clone());
            }
        }
    }
    Ok(StageResult {
        inputs,
        outputs: vec![meta_path, scores_path, exceptions_path],
    })
}

pub fn dedup(cfg: &PipelineConfig) -> Result<StageResult> {
    ensure_out(cfg)?;
    let (items, inputs) = vectors_with_meta(cfg, TaxonomyKind::Dwa)?;
    let report = dedup_report(&items, cfg.options.quantization_decimals)?;
    let path = cfg.out("duplicate_report.json");
    tables::write_json(&path, &report)?;
    Ok(StageResult {
        inputs,
        outputs: vec![path],
    })
}

/// Reorders ability columns to the ability-taxonomy order when one is
/// configured; abilities missing on either side are dropped with warnings.
fn align_abilities(
    cfg: &PipelineConfig,
    table: OccupationAbilityTable,
    warnings: &mut Vec<String>,
) -> Result<(OccupationAbilityTable, Option<PathBuf>)> {
    let Some(path) = cfg.paths.ability_taxonomy.clone() else {
        return Ok((table, None));
    };
    cfg.validate_paths(&[("paths.ability_taxonomy", &path)])?;
    let taxonomy = load_taxonomy(&path, TaxonomyKind::Ability)?;
    if let Some((actual, expected)) = taxonomy.size_warning() {
        eprintln!("warning: ability taxonomy has {actual} entries, full reference has {expected}");
    }
    let available: BTreeMap<&str, usize> = table
        .ability_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut keep_cols = Vec::new();
    let mut ability_ids = Vec::new();
    for id in taxonomy.skill_ids() {
        match available.get(id) {
            Some(&col) => {
                keep_cols.push(col);
                ability_ids.push(id.to_string());
            }
            None => warnings.push(format!(
                "ability {id} is in the taxonomy but missing from the importance file"
            )),
        }
    }
    for id in &table.ability_ids {
        if !ability_ids.contains(id) {
            warnings.push(format!(
                "ability {id} is in the importance file but not in the taxonomy; dropped"
            ));
        }
    }
    if ability_ids.is_empty() {
        return Err(data_err("no abilities shared between taxonomy and importance file"));
    }
    let rows: Vec<Vec<f64>> = (0..table.values.n_rows())
        .map(|i| keep_cols.iter().map(|&c| table.values.get(i, c)).collect())
        .collect();
    Ok((
        OccupationAbilityTable {
            soc_codes: table.soc_codes,
            ability_ids,
            values: Matrix::from_rows(rows),
        },
        Some(path),
    ))
}

pub fn train_abilities(cfg: &PipelineConfig) -> Result<StageResult> {
    ensure_out(cfg)?;
    cfg.validate_paths(&[
        ("paths.occupation_dwa", &cfg.paths.occupation_dwa),
        ("paths.occupation_abilities", &cfg.paths.occupation_abilities),
    ])?;
    let (dwa_taxonomy_path, taxonomy) = taxonomy_for(cfg, TaxonomyKind::Dwa)?;
    let occ_dwa = load_occupation_dwa(&cfg.paths.occupation_dwa, &taxonomy)?;
    let mut warnings: Vec<String> = occ_dwa
        .unknown_dwa_ids
        .iter()
        .map(|id| format!("occupation profile lists unknown DWA {id}; ignored"))
        .collect();
    let occ_abilities = load_occupation_abilities(&cfg.paths.occupation_abilities)?;
    let (occ_abilities, ability_taxonomy_path) = align_abilities(cfg, occ_abilities, &mut warnings)?;
    let training = build_training(&occ_dwa, &occ_abilities)?;
    let bundle = train_all_abilities(
        &training,
        &cfg.options.forest_grid,
        cfg.options.cv_folds,
        cfg.seed,
        &taxonomy,
    )?;

    let models_path = cfg.out("ability_models.json");
    let mut json = bundle.to_json();
    json.push('\n');
    std::fs::write(&models_path, json)?;

    #[derive(Serialize)]
    struct AbilitySummary<'a> {
        ability_id: &'a str,
        cv_mse: f64,
        hyperparams: &'a syllabus_skills::ability::Hyperparams,
    }
    #[derive(Serialize)]
    struct TrainingReport<'a> {
        n_occupations: usize,
        n_features: usize,
        unmatched_dwa_socs: &'a [String],
        unmatched_ability_socs: &'a [String],
        warnings: &'a [String],
        max_cv_mse: f64,
        abilities: Vec<AbilitySummary<'a>>,
    }
    let abilities: Vec<AbilitySummary> = bundle
        .models
        .iter()
        .map(|m| AbilitySummary {
            ability_id: &m.ability_id,
            cv_mse: m.cv_mse,
            hyperparams: &m.hyperparams,
        })
        .collect();
    let report_path = cfg.out("ability_training_report.json");
    tables::write_json(
        &report_path,
        &TrainingReport {
            n_occupations: training.soc_codes.len(),
            n_features: training.dwa_ids.len(),
            unmatched_dwa_socs: &training.unmatched_dwa_socs,
            unmatched_ability_socs: &training.unmatched_ability_socs,
            warnings: &warnings,
            max_cv_mse: bundle.models.iter().map(|m| m.cv_mse).fold(0.0, f64::max),
            abilities,
        },
    )?;

    let mut inputs = vec![
        cfg.paths.occupation_dwa.clone(),
        cfg.paths.occupation_abilities.clone(),
        dwa_taxonomy_path,
    ];
    if let Some(p) = ability_taxonomy_path {
        inputs.push(p);
    }
    Ok(StageResult {
        inputs,
        outputs: vec![models_path, report_path],
    })
}

pub fn apply_abilities(cfg: &PipelineConfig) -> Result<StageResult> {
    ensure_out(cfg)?;
    let models_path = cfg.out("ability_models.json");
    let json = std::fs::read_to_string(&models_path)
        .map_err(|e| config_err(format!("cannot read {}: {e} (run `train-abilities` first)", models_path.display())))?;
    let bundle = ModelBundle::from_json(&json)?;
    let (dwa_taxonomy_path, taxonomy) = taxonomy_for(cfg, TaxonomyKind::Dwa)?;
    check_bundle_alignment(&bundle, &taxonomy)?;

    let dwa_path = vectors_file(cfg, TaxonomyKind::Dwa);
    if !dwa_path.exists() {
        return Err(config_err(format!(
            "{} not found (run `score` first)",
            dwa_path.display()
        )));
    }
    let vectors = read_vectors_jsonl(&dwa_path).map_err(data_err)?;
    let ability_vectors: Result<Vec<SkillVector>> = vectors
        .par_iter()
        .map(|v| {
            let out = predict_abilities(v, &bundle)?;
            Ok(SkillVector {
                syllabus_id: out.syllabus_id,
                taxonomy_kind: TaxonomyKind::Ability,
                scores: out.scores,
                empty_content: out.empty_content,
            })
        })
        .collect();
    let ability_vectors = ability_vectors?;
    let out_path = vectors_file(cfg, TaxonomyKind::Ability);
    write_vectors_jsonl(&out_path, &ability_vectors)?;
    Ok(StageResult {
        inputs: vec![models_path, dwa_path, dwa_taxonomy_path],
        outputs: vec![out_path],
    })
}

pub fn rca_stage(cfg: &PipelineConfig) -> Result<StageResult> {
    ensure_out(cfg)?;
    let meta_path = cfg.out("institution_fos_year.csv");
    let scores_path = cfg.out(scores_table_name(TaxonomyKind::Dwa));
    cfg.validate_paths(&[
        ("institution_fos_year.csv", &meta_path),
        ("detailed_work_activities_scores.csv", &scores_path),
    ])?;
    let (records, skill_ids) = tables::read_aggregates(&meta_path, &scores_path)?;
    let matrix = FosSkillMatrix::from_aggregates(&records, skill_ids);

    let matrix_path = cfg.out("fos_matrix.csv");
    tables::write_labeled_matrix(
        &matrix_path,
        "fos",
        &matrix.skill_list,
        &matrix.fos_list,
        (0..matrix.fos_list.len()).map(|i| matrix.values.row(i).to_vec()),
    )?;

    let rca_matrix = rca(&matrix)?;
    let rca_path = cfg.out("rca.csv");
    tables::write_labeled_matrix(
        &rca_path,
        "fos",
        &rca_matrix.skill_list,
        &rca_matrix.fos_list,
        (0..rca_matrix.fos_list.len()).map(|i| rca_matrix.values.row(i).to_vec()),
    )?;

    Ok(StageResult {
        inputs: vec![meta_path, scores_path],
        outputs: vec![matrix_path, rca_path],
    })
}

fn read_fos_matrix(path: &Path) -> Result<FosSkillMatrix> {
    let m = tables::read_labeled_matrix(path)?;
    Ok(FosSkillMatrix::new(m.row_labels, m.column_labels, m.rows))
}

fn read_rca_matrix(path: &Path) -> Result<RcaMatrix> {
    let m = tables::read_labeled_matrix(path)?;
    Ok(RcaMatrix {
        fos_list: m.row_labels,
        skill_list: m.column_labels,
        values: Matrix::from_rows(m.rows),
    })
}

pub fn mask_stage(cfg: &PipelineConfig) -> Result<StageResult> {
    ensure_out(cfg)?;
    let matrix_path = cfg.out("fos_matrix.csv");
    cfg.validate_paths(&[("fos_matrix.csv", &matrix_path)])?;
    let matrix = read_fos_matrix(&matrix_path)?;
    let mask = mask_frequent(&matrix, cfg.options.mask_top_n, cfg.options.mask_threshold)?;
    let mask_path = cfg.out("mask.txt");
    let mut text = String::new();
    for skill in &mask {
        text.push_str(skill);
        text.push('\n');
    }
    std::fs::write(&mask_path, text)?;
    Ok(StageResult {
        inputs: vec![matrix_path],
        outputs: vec![mask_path],
    })
}

fn read_mask(path: &Path) -> Result<BTreeSet<String>> {
    let content = std::fs::read_to_string(path)?;
    Ok(content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

pub fn topk_stage(cfg: &PipelineConfig) -> Result<StageResult> {
    ensure_out(cfg)?;
    let matrix_path = cfg.out("fos_matrix.csv");
    let rca_path = cfg.out("rca.csv");
    cfg.validate_paths(&[("fos_matrix.csv", &matrix_path), ("rca.csv", &rca_path)])?;
    let matrix = read_fos_matrix(&matrix_path)?;
    let rca_matrix = read_rca_matrix(&rca_path)?;
    let mask_path = cfg.out("mask.txt");
    let mask = if mask_path.exists() {
        Some(read_mask(&mask_path)?)
    } else {
        None
    };

    let k = cfg.options.top_k;
    let out_path = cfg.out("topk.csv");
    let mut w = csv::Writer::from_path(&out_path).map_err(|e| data_err(e))?;
    w.write_record(["source", "fos", "rank", "skill_id", "value"])
        .map_err(|e| data_err(e))?;
    let mut write_rows = |source: &str, fos: &str, rows: Vec<(String, f64)>| -> Result<()> {
        for (rank, (skill_id, value)) in rows.into_iter().enumerate() {
            w.write_record([
                source,
                fos,
                &(rank + 1).to_string(),
                &skill_id,
                &format!("{value}"),
            ])
            .map_err(|e| data_err(e))?;
        }
        Ok(())
    };
    for fos in matrix.fos_list.clone() {
        write_rows("mean", &fos, top_k_mean(&matrix, &fos, k, None)?)?;
        if let Some(mask) = &mask {
            write_rows("mean_masked", &fos, top_k_mean(&matrix, &fos, k, Some(mask))?)?;
        }
        write_rows("rca", &fos, top_k_rca(&rca_matrix, &fos, k, None)?)?;
    }
    w.flush()?;
    drop(w);

    let mut inputs = vec![matrix_path, rca_path];
    if mask.is_some() {
        inputs.push(mask_path);
    }
    Ok(StageResult {
        inputs,
        outputs: vec![out_path],
    })
}

pub fn distinctiveness_stage(cfg: &PipelineConfig) -> Result<StageResult> {
    ensure_out(cfg)?;
    let rca_path = cfg.out("rca.csv");
    cfg.validate_paths(&[
        ("rca.csv", &rca_path),
        ("paths.salary_table", &cfg.paths.salary_table),
    ])?;
    let rca_matrix = read_rca_matrix(&rca_path)?;
    let salary = tables::read_salary_table(&cfg.paths.salary_table)?;
    let fit = distinctiveness_regression(&rca_matrix, cfg.options.distinctiveness_percentile, &salary)?;
    let out_path = cfg.out("distinctiveness.json");
    tables::write_json(&out_path, &fit)?;
    Ok(StageResult {
        inputs: vec![rca_path, cfg.paths.salary_table.clone()],
        outputs: vec![out_path],
    })
}

pub fn cluster_stage(cfg: &PipelineConfig) -> Result<StageResult> {
    ensure_out(cfg)?;
    let matrix_path = cfg.out("fos_matrix.csv");
    cfg.validate_paths(&[("fos_matrix.csv", &matrix_path)])?;
    let matrix = read_fos_matrix(&matrix_path)?;
    let sim = spearman_similarity(&matrix)?;
    for w in &sim.warnings {
        eprintln!("warning: {w}");
    }
    let sim_path = cfg.out("similarity.csv");
    tables::write_labeled_matrix(
        &sim_path,
        "fos",
        &sim.labels,
        &sim.labels,
        sim.values.iter().cloned(),
    )?;
    let dendrogram = hierarchical_cluster(&sim);
    let dendro_path = cfg.out("dendrogram.json");
    tables::write_json(&dendro_path, &dendrogram)?;
    Ok(StageResult {
        inputs: vec![matrix_path],
        outputs: vec![sim_path, dendro_path],
    })
}

pub fn communities_stage(cfg: &PipelineConfig) -> Result<StageResult> {
    ensure_out(cfg)?;
    let sim_path = cfg.out("similarity.csv");
    cfg.validate_paths(&[("similarity.csv", &sim_path)])?;
    let m = tables::read_labeled_matrix(&sim_path)?;
    let sim = SimilarityMatrix::from_values(m.row_labels, m.rows);
    let graph = graph_from_similarity(&sim, cfg.options.louvain_min_rho);
    let partition = louvain(&graph)?;
    #[derive(Serialize)]
    struct Communities {
        method: String,
        modularity: f64,
        n_communities: usize,
        communities: BTreeMap<String, usize>,
    }
    let communities: BTreeMap<String, usize> = sim
        .labels
        .iter()
        .cloned()
        .zip(partition.communities.iter().copied())
        .collect();
    let out_path = cfg.out("communities.json");
    tables::write_json(
        &out_path,
        &Communities {
            method: "louvain".into(),
            modularity: partition.modularity,
            n_communities: partition.n_communities(),
            communities,
        },
    )?;
    Ok(StageResult {
        inputs: vec![sim_path],
        outputs: vec![out_path],
    })
}

pub fn kl_stage(cfg: &PipelineConfig) -> Result<StageResult> {
    ensure_out(cfg)?;
    let (items, mut inputs) = vectors_with_meta(cfg, TaxonomyKind::Dwa)?;
    let (dwa_taxonomy_path, taxonomy) = taxonomy_for(cfg, TaxonomyKind::Dwa)?;
    cfg.validate_paths(&[("paths.occupation_dwa", &cfg.paths.occupation_dwa)])?;
    let occ_dwa = load_occupation_dwa(&cfg.paths.occupation_dwa, &taxonomy)?;
    let epsilon = cfg.options.kl_epsilon;

    // Syllabus side: one distribution per configured period (or one for
    // the whole corpus when no periods are configured).
    let mut syllabus_dists: Vec<(String, Distribution)> = Vec::new();
    if cfg.options.periods.is_empty() {
        let all: Vec<&SkillVector> = items.iter().map(|(v, _)| v).collect();
        syllabus_dists.push(("syllabi:all".into(), period_distribution(&all, epsilon)?));
    } else {
        for &(start, end) in &cfg.options.periods {
            let members: Vec<&SkillVector> = items
                .iter()
                .filter(|(_, meta)| meta.year.is_some_and(|y| y >= start && y <= end))
                .map(|(v, _)| v)
                .collect();
            if members.is_empty() {
                eprintln!("warning: no syllabi in period {start}-{end}; skipped");
                continue;
            }
            syllabus_dists.push((
                format!("syllabi:{start}-{end}"),
                period_distribution(&members, epsilon)?,
            ));
        }
    }

    // Labor side: one distribution per employment table.
    let mut labor_dists: Vec<(String, Distribution)> = Vec::new();
    for period in &cfg.paths.employment_weights {
        cfg.validate_paths(&[("paths.employment_weights", &period.path)])?;
        let weights = tables::read_employment_weights(&period.path)?;
        let q = labor_profile(&occ_dwa, &weights, &cfg.options.occupation_filter, epsilon)?;
        labor_dists.push((format!("labor:{}", period.label), q));
        inputs.push(period.path.clone());
    }

    let grid = period_kl_matrix(&syllabus_dists, &labor_dists)?;
    let out_path = cfg.out("kl_grid.csv");
    tables::write_labeled_matrix(
        &out_path,
        "kl",
        &grid.labels,
        &grid.labels,
        grid.values.iter().cloned(),
    )?;
    inputs.push(cfg.paths.occupation_dwa.clone());
    inputs.push(dwa_taxonomy_path);
    Ok(StageResult {
        inputs,
        outputs: vec![out_path],
    })
}

pub fn sufficiency_stage(cfg: &PipelineConfig) -> Result<StageResult> {
    ensure_out(cfg)?;
    let (items, inputs) = vectors_with_meta(cfg, TaxonomyKind::Dwa)?;
    let mut groups: BTreeMap<String, Vec<&(SkillVector, SyllabusMeta)>> = BTreeMap::new();
    for item in &items {
        if let Some(key) = item.1.group_key() {
            groups.entry(key.record_id()).or_default().push(item);
        }
    }

    let out_path = cfg.out("sufficiency.csv");
    let mut w = csv::Writer::from_path(&out_path).map_err(|e| data_err(e))?;
    w.write_record(["record_id", "n_syllabi", "metric", "k", "mean", "ci_low", "ci_high", "elbow_k"])
        .map_err(|e| data_err(e))?;
    for (record_id, mut members) in groups {
        if members.len() < 2 {
            continue;
        }
        members.sort_by(|a, b| a.0.syllabus_id.cmp(&b.0.syllabus_id));
        let vectors: Vec<Vec<f64>> = members.iter().map(|(v, _)| v.scores.clone()).collect();
        let group_seed = derive_seed(cfg.seed, &[seed_stream_of(&record_id)]);
        for metric in &cfg.options.sufficiency_metrics {
            let curve =
                sufficiency_curve(&vectors, cfg.options.sufficiency_trials, *metric, group_seed)?;
            let points: Vec<(usize, f64)> = curve.iter().map(|p| (p.k, p.mean)).collect();
            let elbow = if points.len() >= 3 {
                Some(elbow_detect(&points)?)
            } else {
                None
            };
            let elbow_text = elbow.map(|k| k.to_string()).unwrap_or_default();
            for p in &curve {
                w.write_record([
                    record_id.as_str(),
                    &members.len().to_string(),
                    &metric.to_string(),
                    &p.k.to_string(),
                    &format!("{}", p.mean),
                    &format!("{}", p.ci_low),
                    &format!("{}", p.ci_high),
                    &elbow_text,
                ])
                .map_err(|e| data_err(e))?;
            }
        }
    }
    w.flush()?;
    Ok(StageResult {
        inputs,
        outputs: vec![out_path],
    })
}

fn seed_stream_of(record_id: &str) -> u64 {
    let digest = sha256_hex(record_id.as_bytes());
    u64::from_str_radix(&digest[..16], 16).expect("hex digest")
}

/// Writes a top-level manifest binding every per-step manifest together.
pub fn write_pipeline_manifest(cfg: &PipelineConfig, steps: &[String]) -> Result<PathBuf> {
    #[derive(Serialize)]
    struct PipelineManifest {
        tool: String,
        version: String,
        config_sha256: String,
        steps: Vec<String>,
        step_manifests: BTreeMap<String, String>,
    }
    let dir = cfg.out("manifests");
    let mut step_manifests = BTreeMap::new();
    for step in steps {
        let path = dir.join(format!("{step}.json"));
        step_manifests.insert(step.clone(), syllabus_skills::hashing::sha256_file(&path)?);
    }
    let manifest = PipelineManifest {
        tool: "syllabus-skills".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: cfg.config_hash(),
        steps: steps.to_vec(),
        step_manifests,
    };
    let path = cfg.out("pipeline_manifest.json");
    tables::write_json(&path, &manifest)?;
    Ok(path)
}
