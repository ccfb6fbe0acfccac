//! Pipeline driver: subcommands over a declarative config, each writing
//! its artifacts plus a provenance manifest. Exit codes: 0 success,
//! 1 data error, 2 config error, 3 provider error.

mod config;
mod errors;
mod fixtures;
mod manifest;
mod serve;
mod stages;
mod tables;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use syllabus_skills::score::TaxonomyKind;

use config::{Overrides, PipelineConfig};
use errors::{config_err, CliError, Result};
use manifest::Manifest;
use stages::StageResult;

#[derive(Parser)]
#[command(name = "syllabus-skills", version, about = "Syllabus corpora in, skill tables and validation analytics out")]
struct Cli {
    /// Pipeline configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores). Outputs are identical for any
    /// value.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override paths.corpus.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Override paths.output_dir.
    #[arg(long = "out", global = true)]
    out: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override paths.logistics_list.
    #[arg(long = "logistics-list", global = true)]
    logistics_list: Option<PathBuf>,
    /// Override paths.learning_list.
    #[arg(long = "learning-list", global = true)]
    learning_list: Option<PathBuf>,
    /// Override paths.abbreviations.
    #[arg(long = "abbrev-list", global = true)]
    abbrev_list: Option<PathBuf>,
    /// Override options.prefix_match.
    #[arg(long = "prefix-match", global = true, value_enum)]
    prefix_match: Option<OnOff>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Dwa,
    Task,
    Ability,
}

impl From<KindArg> for TaxonomyKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Dwa => TaxonomyKind::Dwa,
            KindArg::Task => TaxonomyKind::Task,
            KindArg::Ability => TaxonomyKind::Ability,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load the corpus and write descriptive statistics.
    IngestStats,
    /// Segment syllabi and keep learning-content sentences.
    Prep,
    /// Score syllabi against a skill taxonomy.
    Score {
        #[arg(long, value_enum, default_value = "dwa")]
        kind: KindArg,
    },
    /// Average vectors into institution-field-year records.
    Aggregate {
        #[arg(long, value_enum, default_value = "dwa")]
        kind: KindArg,
    },
    /// Measure duplicate prevalence on quantized DWA vectors.
    Dedup,
    /// Train one forest regressor per ability on occupation profiles.
    TrainAbilities,
    /// Map DWA vectors to ability vectors with the trained models.
    ApplyAbilities,
    /// Build the FOS-by-skill matrix and its RCA normalization.
    Rca,
    /// Mask skills that rank highly in most fields.
    Mask,
    /// Rank top skills per field (mean, masked mean, and RCA).
    Topk,
    /// Regress salary on per-field skill distinctiveness.
    Distinctiveness,
    /// Rank-correlation similarity and hierarchical clustering of fields.
    Cluster,
    /// Louvain communities over the field similarity graph.
    Communities,
    /// KL divergence between syllabus and labor skill distributions.
    Kl,
    /// Subset-size sufficiency curves with elbow detection.
    Sufficiency,
    /// Run the whole pipeline in dependency order.
    All,
    /// Write the bundled synthetic corpus and reference tables.
    Fixtures {
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Serve the line-based provider protocol on stdin/stdout.
    ServeStdio {
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Serve the HTTP provider protocol (POST /embed).
    ServeHttp {
        #[arg(long, default_value = "127.0.0.1:0")]
        addr: String,
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
        }
    }
    if let Err(e) = dispatch(&cli) {
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| config_err("--config is required for this subcommand"))?;
    let overrides = Overrides {
        corpus: cli.corpus.clone(),
        output_dir: cli.out.clone(),
        logistics_list: cli.logistics_list.clone(),
        learning_list: cli.learning_list.clone(),
        abbrev_list: cli.abbrev_list.clone(),
        prefix_match: cli.prefix_match.map(|p| matches!(p, OnOff::On)),
        seed: cli.seed,
    };
    PipelineConfig::load(path, &overrides)
}

type Stage = (&'static str, fn(&PipelineConfig) -> Result<StageResult>);

fn step(name: &str, cfg: &PipelineConfig, result: Result<StageResult>) -> Result<()> {
    let result = result?;
    let manifest = Manifest::build(name, cfg, &result.inputs, &result.outputs)?;
    manifest.write(&cfg.out("manifests"))?;
    println!("{name}: {} artifact(s) written", result.outputs.len());
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Fixtures { out, seed } => {
            let set = fixtures::generate(out, *seed)?;
            println!("fixtures: {} file(s) under {}", set.files.len(), set.dir.display());
            Ok(())
        }
        Command::ServeStdio { dim, seed } => serve::serve_stdio(*dim, *seed).map_err(provider_err),
        Command::ServeHttp { addr, dim, seed } => {
            serve::serve_http(addr, *dim, *seed).map_err(provider_err)
        }
        Command::IngestStats => {
            let cfg = load_config(cli)?;
            step("ingest-stats", &cfg, stages::ingest_stats(&cfg))
        }
        Command::Prep => {
            let cfg = load_config(cli)?;
            step("prep", &cfg, stages::prep(&cfg))
        }
        Command::Score { kind } => {
            let cfg = load_config(cli)?;
            let kind = TaxonomyKind::from(*kind);
            step(&format!("score-{kind}"), &cfg, stages::score(&cfg, kind))
        }
        Command::Aggregate { kind } => {
            let cfg = load_config(cli)?;
            let kind = TaxonomyKind::from(*kind);
            step(&format!("aggregate-{kind}"), &cfg, stages::aggregate_stage(&cfg, kind))
        }
        Command::Dedup => {
            let cfg = load_config(cli)?;
            step("dedup", &cfg, stages::dedup(&cfg))
        }
        Command::TrainAbilities => {
            let cfg = load_config(cli)?;
            step("train-abilities", &cfg, stages::train_abilities(&cfg))
        }
        Command::ApplyAbilities => {
            let cfg = load_config(cli)?;
            step("apply-abilities", &cfg, stages::apply_abilities(&cfg))
        }
        Command::Rca => {
            let cfg = load_config(cli)?;
            step("rca", &cfg, stages::rca_stage(&cfg))
        }
        Command::Mask => {
            let cfg = load_config(cli)?;
            step("mask", &cfg, stages::mask_stage(&cfg))
        }
        Command::Topk => {
            let cfg = load_config(cli)?;
            step("topk", &cfg, stages::topk_stage(&cfg))
        }
        Command::Distinctiveness => {
            let cfg = load_config(cli)?;
            step("distinctiveness", &cfg, stages::distinctiveness_stage(&cfg))
        }
        Command::Cluster => {
            let cfg = load_config(cli)?;
            step("cluster", &cfg, stages::cluster_stage(&cfg))
        }
        Command::Communities => {
            let cfg = load_config(cli)?;
            step("communities", &cfg, stages::communities_stage(&cfg))
        }
        Command::Kl => {
            let cfg = load_config(cli)?;
            step("kl", &cfg, stages::kl_stage(&cfg))
        }
        Command::Sufficiency => {
            let cfg = load_config(cli)?;
            step("sufficiency", &cfg, stages::sufficiency_stage(&cfg))
        }
        Command::All => {
            let cfg = load_config(cli)?;
            run_all(&cfg)
        }
    }
}

fn provider_err(e: CliError) -> CliError {
    match e {
        CliError::Data(m) => CliError::Provider(m),
        other => other,
    }
}

fn run_all(cfg: &PipelineConfig) -> Result<()> {
    let fixed_head: Vec<Stage> = vec![
        ("ingest-stats", stages::ingest_stats),
        ("prep", stages::prep),
    ];
    let mut names: Vec<String> = Vec::new();
    for (name, f) in fixed_head {
        step(name, cfg, f(cfg))?;
        names.push(name.to_string());
    }

    let mut kinds = vec![TaxonomyKind::Dwa];
    if cfg.paths.task_taxonomy.is_some() {
        kinds.push(TaxonomyKind::Task);
    }
    for kind in &kinds {
        let name = format!("score-{kind}");
        step(&name, cfg, stages::score(cfg, *kind))?;
        names.push(name);
    }
    for kind in &kinds {
        let name = format!("aggregate-{kind}");
        step(&name, cfg, stages::aggregate_stage(cfg, *kind))?;
        names.push(name);
    }

    let fixed_mid: Vec<Stage> = vec![
        ("dedup", stages::dedup),
        ("train-abilities", stages::train_abilities),
        ("apply-abilities", stages::apply_abilities),
    ];
    for (name, f) in fixed_mid {
        step(name, cfg, f(cfg))?;
        names.push(name.to_string());
    }
    step(
        "aggregate-ability",
        cfg,
        stages::aggregate_stage(cfg, TaxonomyKind::Ability),
    )?;
    names.push("aggregate-ability".to_string());

    let fixed_tail: Vec<Stage> = vec![
        ("rca", stages::rca_stage),
        ("mask", stages::mask_stage),
        ("topk", stages::topk_stage),
        ("distinctiveness", stages::distinctiveness_stage),
        ("cluster", stages::cluster_stage),
        ("communities", stages::communities_stage),
        ("kl", stages::kl_stage),
        ("sufficiency", stages::sufficiency_stage),
    ];
    for (name, f) in fixed_tail {
        step(name, cfg, f(cfg))?;
        names.push(name.to_string());
    }

    let path = stages::write_pipeline_manifest(cfg, &names)?;
    println!("all: pipeline manifest at {}", path.display());
    Ok(())
}
