//! Deterministic synthetic corpus and reference tables for demos, smoke
//! tests, and the end-to-end determinism check. Regenerating with the same
//! seed reproduces every file byte for byte.
//!
//! The phrase lists written here are representative starters, not the full
//! curated dictionaries a production run would use.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::errors::Result;

const FIELDS: [(&str, &str); 8] = [
    ("Biology", "26.01"),
    ("Computer Science", "11.07"),
    ("Economics", "45.06"),
    ("History", "54.01"),
    ("Marketing", "52.14"),
    ("Mathematics", "27.01"),
    ("Mechanical Engineering", "14.19"),
    ("Nursing", "51.38"),
];

const INSTITUTIONS: [(&str, Option<&str>, &str, &str, &str); 10] = [
    ("Aldercrest University", Some("100001"), "Harrisburg", "PA", "Public, 4-year or above"),
    ("Bellforge State College", Some("100002"), "Columbus", "OH", "Public, 4-year or above"),
    ("Cardanel Institute of Technology", Some("100003"), "Austin", "TX", "Private not-for-profit, 4-year or above"),
    ("Dunmore Community College", Some("100004"), "Scranton", "PA", "Public, 2-year"),
    ("Eastlake University", Some("100005"), "Cleveland", "OH", "Private not-for-profit, 4-year or above"),
    ("Foxglove College", Some("100006"), "Madison", "WI", "Private not-for-profit, 4-year or above"),
    ("Graniteview State University", Some("100007"), "Denver", "CO", "Public, 4-year or above"),
    ("Halloway Technical College", Some("100008"), "Atlanta", "GA", "Public, 2-year"),
    ("Ironwood University", Some("100009"), "Sacramento", "CA", "Public, 4-year or above"),
    // No unit id: exercises the institution-name grouping fallback.
    ("Riverbend Institute", None, "Portland", "OR", "Not Classified"),
];

const TOPICS: [&[&str]; 8] = [
    // Biology
    &["cell structures", "genetic variation", "ecosystem dynamics", "protein folding", "microbial cultures"],
    // Computer Science
    &["sorting algorithms", "data structures", "network protocols", "operating systems", "database queries"],
    // Economics
    &["market equilibria", "inflation dynamics", "trade balances", "labor supply", "price elasticity"],
    // History
    &["primary sources", "archival records", "social movements", "political revolutions", "trade routes"],
    // Marketing
    &["consumer segments", "brand positioning", "campaign budgets", "survey instruments", "pricing strategies"],
    // Mathematics
    &["linear transformations", "convergent series", "probability spaces", "differential equations", "graph colorings"],
    // Mechanical Engineering
    &["stress tensors", "thermal cycles", "fluid boundaries", "gear assemblies", "material fatigue"],
    // Nursing
    &["patient assessments", "medication dosages", "care plans", "vital signs", "clinical charts"],
];

const LEARNING_TEMPLATES: [&str; 8] = [
    "Students will analyze {topic} using peer-reviewed methods.",
    "We compare {topic} against competing frameworks in class discussion.",
    "Learners evaluate {topic} and defend the expected outcome in writing.",
    "Teams design experiments around {topic} and interpret the results.",
    "You will construct models of {topic} and explain their assumptions.",
    "The course examines {topic} versus classical treatments of the subject.",
    "Participants apply quantitative tools to {topic} throughout the term.",
    "Each week we interpret case studies about {topic} and summarize findings.",
];

const LOGISTICS_TEMPLATES: [&str; 6] = [
    "Office hours are held Tuesday at 2pm in Room {n}.",
    "Attendance is mandatory and counts toward the final grade.",
    "Plagiarism will be reported to the dean without exception.",
    "The grading rubric assigns {n} percent to the final exam.",
    "Late policy: assignments lose {n} points per day.",
    "The midterm exam is scheduled for week {n} in the main hall.",
];

const FILLER_TEMPLATES: [&str; 4] = [
    "Welcome to the course.",
    "See the bookstore for the required text, e.g. the second edition.",
    "Dr. Alvarez joined the department in 2005.",
    "Prof. Chen maintains the course page.",
];

const LOGISTICS_TERMS: &str = "\
# Representative starter list of course-logistics phrases.
# One phrase per line; '#' starts a comment.
office hours
attendance
plagiarism
grading rubric
late policy
final exam
midterm exam
syllabus quiz
prerequisite
course code
textbook
bookstore
registration
withdrawal
academic integrity
honor code
make-up exam
extra credit
participation grade
letter grade
grade appeal
email etiquette
class schedule
room assignment
teaching assistant
lecture recording
learning management system
due date
submission portal
absence
disability services
academic calendar
holiday
spring break
drop deadline
incomplete grade
tuition
refund
proctoring
zoom link
";

const LEARNING_TERMS: &str = "\
# Representative starter list of learning-content phrases.
# One phrase per line; '#' starts a comment.
analyze
apply
assess
compare
construct
critique
demonstrate
derive
describe
design
develop
evaluate
examine
explain
explore
formulate
identify
implement
interpret
investigate
measure
model
outcome
predict
simulate
solve
summarize
synthesize
understand
versus
";

const ABBREVIATIONS: &str = "\
# Tokens that suppress a sentence split after a period.
e.g
i.e
dr
prof
vs
etc
fig
no
dept
univ
";

/// The 52 worker abilities from the public occupational taxonomy.
const ABILITY_NAMES: [&str; 52] = [
    "Arm-Hand Steadiness", "Auditory Attention", "Category Flexibility", "Control Precision",
    "Deductive Reasoning", "Depth Perception", "Dynamic Flexibility", "Dynamic Strength",
    "Explosive Strength", "Extent Flexibility", "Far Vision", "Finger Dexterity",
    "Flexibility of Closure", "Fluency of Ideas", "Glare Sensitivity", "Gross Body Coordination",
    "Gross Body Equilibrium", "Hearing Sensitivity", "Inductive Reasoning", "Information Ordering",
    "Manual Dexterity", "Mathematical Reasoning", "Memorization", "Multilimb Coordination",
    "Near Vision", "Night Vision", "Number Facility", "Oral Comprehension", "Oral Expression",
    "Originality", "Perceptual Speed", "Peripheral Vision", "Problem Sensitivity", "Rate Control",
    "Reaction Time", "Response Orientation", "Selective Attention", "Sound Localization",
    "Spatial Orientation", "Speech Clarity", "Speech Recognition", "Speed of Closure",
    "Speed of Limb Movement", "Stamina", "Static Strength", "Time Sharing", "Trunk Strength",
    "Visual Color Discrimination", "Visualization", "Wrist-Finger Speed", "Written Comprehension",
    "Written Expression",
];

const DWA_VERBS: [&str; 10] = [
    "Analyze", "Develop", "Prepare", "Evaluate", "Design", "Maintain", "Inspect", "Coordinate",
    "Document", "Operate",
];

const DWA_OBJECTS: [&str; 25] = [
    "scientific or mathematical models", "financial records", "laboratory specimens",
    "software interfaces", "market research reports", "patient treatment plans",
    "mechanical assemblies", "historical archives", "statistical summaries",
    "instructional materials", "network configurations", "budget proposals",
    "quality control procedures", "experimental protocols", "promotional campaigns",
    "clinical documentation", "structural blueprints", "survey instruments",
    "data pipelines", "risk assessments", "production schedules", "regulatory filings",
    "diagnostic equipment", "training curricula", "archival databases",
];

const SOC_MAJOR_GROUPS: [&str; 8] = ["11", "13", "15", "17", "19", "25", "29", "41"];

pub struct FixtureSet {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

pub fn generate(dir: &Path, seed: u64) -> Result<FixtureSet> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let write = |name: &str, content: String| -> Result<PathBuf> {
        let path = dir.join(name);
        std::fs::write(&path, content)?;
        Ok(path)
    };

    files.push(write("logistics_terms.txt", LOGISTICS_TERMS.into())?);
    files.push(write("learning_terms.txt", LEARNING_TERMS.into())?);
    files.push(write("abbreviations.txt", ABBREVIATIONS.into())?);
    files.push(write("dwa_taxonomy.csv", dwa_taxonomy_csv())?);
    files.push(write("task_taxonomy.csv", task_taxonomy_csv())?);
    files.push(write("ability_taxonomy.csv", ability_taxonomy_csv())?);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (occ_dwa, soc_codes, incidence) = occupation_dwa_csv(&mut rng);
    files.push(write("occupation_dwa.csv", occ_dwa)?);
    files.push(write(
        "occupation_abilities.csv",
        occupation_abilities_csv(&mut rng, &soc_codes, &incidence),
    )?);
    files.push(write("employment_0809.csv", employment_csv(&mut rng, &soc_codes))?);
    files.push(write("employment_1012.csv", employment_csv(&mut rng, &soc_codes))?);
    files.push(write("salary.csv", salary_csv(&mut rng))?);
    files.push(write("corpus.jsonl", corpus_jsonl(&mut rng))?);
    files.push(write("config.toml", config_toml())?);

    Ok(FixtureSet {
        dir: dir.to_path_buf(),
        files,
    })
}

fn dwa_taxonomy_csv() -> String {
    let mut out = String::from("dwa_id,dwa_title\n");
    for i in 0..50 {
        let verb = DWA_VERBS[i % DWA_VERBS.len()];
        let object = DWA_OBJECTS[i % DWA_OBJECTS.len()];
        let _ = writeln!(out, "D{:03},{verb} {object}", i + 1);
    }
    out
}

fn task_taxonomy_csv() -> String {
    let mut out = String::from("task_id,task_statement\n");
    for i in 0..30 {
        let verb = DWA_VERBS[(i * 3) % DWA_VERBS.len()];
        let object = DWA_OBJECTS[(i * 7) % DWA_OBJECTS.len()];
        let _ = writeln!(
            out,
            "T{:03},{verb} {object} for internal and external stakeholders",
            i + 1
        );
    }
    out
}

fn ability_taxonomy_csv() -> String {
    let mut out = String::from("ability_id,ability_name\n");
    for (i, name) in ABILITY_NAMES.iter().enumerate() {
        let _ = writeln!(out, "A{:02},{name}", i + 1);
    }
    out
}

fn soc_code(rng: &mut ChaCha8Rng, group_idx: usize) -> String {
    format!(
        "{}-{}{}",
        SOC_MAJOR_GROUPS[group_idx],
        rng.gen_range(1..=9),
        format_args!("{:03}", rng.gen_range(0..1000))
    )
}

/// 40 occupations with binary DWA incidence (8 to 16 DWAs each).
fn occupation_dwa_csv(rng: &mut ChaCha8Rng) -> (String, Vec<String>, Vec<[bool; 50]>) {
    let mut soc_codes = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    while soc_codes.len() < 40 {
        let code = soc_code(rng, soc_codes.len() % SOC_MAJOR_GROUPS.len());
        if seen.insert(code.clone()) {
            soc_codes.push(code);
        }
    }
    let mut out = String::from("soc_code,dwa_id\n");
    let mut incidence = Vec::new();
    for code in &soc_codes {
        let n_dwas = rng.gen_range(8..=16);
        let mut row = [false; 50];
        let mut chosen = std::collections::BTreeSet::new();
        while chosen.len() < n_dwas {
            chosen.insert(rng.gen_range(0..50usize));
        }
        for &d in &chosen {
            row[d] = true;
            let _ = writeln!(out, "{code},D{:03}", d + 1);
        }
        incidence.push(row);
    }
    (out, soc_codes, incidence)
}

/// Ability importance in 1..=5 driven by a hidden linear map from the DWA
/// incidence plus noise, so the regressors have signal to learn.
fn occupation_abilities_csv(
    rng: &mut ChaCha8Rng,
    soc_codes: &[String],
    incidence: &[[bool; 50]],
) -> String {
    // Hidden weights: each ability depends on 4 DWAs.
    let mut weights = Vec::new();
    for _ in 0..52 {
        let dwas: Vec<usize> = (0..4).map(|_| rng.gen_range(0..50usize)).collect();
        weights.push(dwas);
    }
    let mut out = String::from("soc_code,ability_id,importance\n");
    for (code, row) in soc_codes.iter().zip(incidence) {
        for (a, dwas) in weights.iter().enumerate() {
            let signal: f64 = dwas.iter().map(|&d| f64::from(row[d])).sum::<f64>() / 4.0;
            let noise: f64 = rng.gen_range(-0.15..0.15);
            let importance = 1.0 + (signal * 4.0 + noise).clamp(0.0, 4.0);
            let _ = writeln!(out, "{code},A{:02},{:.2}", a + 1, importance);
        }
    }
    out
}

fn employment_csv(rng: &mut ChaCha8Rng, soc_codes: &[String]) -> String {
    let mut out = String::from("soc_code,employment\n");
    for code in soc_codes {
        let _ = writeln!(out, "{code},{}", rng.gen_range(5_000..900_000));
    }
    out
}

fn salary_csv(rng: &mut ChaCha8Rng) -> String {
    let mut out = String::from("field_name,median_annual_earnings_usd\n");
    for (field, _) in FIELDS {
        let _ = writeln!(out, "{field},{}", rng.gen_range(38_000..78_000));
    }
    out
}

fn sentence_for(rng: &mut ChaCha8Rng, field_idx: usize, kind: u32) -> String {
    let topic = TOPICS[field_idx][rng.gen_range(0..TOPICS[field_idx].len())];
    match kind {
        0 => {
            let tpl = LEARNING_TEMPLATES[rng.gen_range(0..LEARNING_TEMPLATES.len())];
            tpl.replace("{topic}", topic)
        }
        1 => {
            let tpl = LOGISTICS_TEMPLATES[rng.gen_range(0..LOGISTICS_TEMPLATES.len())];
            tpl.replace("{n}", &rng.gen_range(2..40).to_string())
        }
        _ => FILLER_TEMPLATES[rng.gen_range(0..FILLER_TEMPLATES.len())].to_string(),
    }
}

fn syllabus_text(rng: &mut ChaCha8Rng, field_idx: usize) -> String {
    let n_sentences = rng.gen_range(6..=14);
    let mut parts = Vec::with_capacity(n_sentences);
    for i in 0..n_sentences {
        // Guarantee some learning content up front, then mix.
        let kind = if i < 2 {
            0
        } else {
            match rng.gen_range(0..10) {
                0..=4 => 0,
                5..=7 => 1,
                _ => 2,
            }
        };
        parts.push(sentence_for(rng, field_idx, kind));
    }
    parts.join(" ")
}

/// 200 syllabi with planted duplicates: six exact copies within one
/// (institution, field, year) cell and three copies across years, plus two
/// records with missing year and two with missing state.
fn corpus_jsonl(rng: &mut ChaCha8Rng) -> String {
    #[derive(serde::Serialize)]
    struct Row<'a> {
        syllabus_id: String,
        text: &'a str,
        #[serde(skip_serializing_if = "Option::is_none")]
        year: Option<i32>,
        institution_name: &'a str,
        #[serde(skip_serializing_if = "Option::is_none")]
        unit_id: Option<&'a str>,
        #[serde(skip_serializing_if = "Option::is_none")]
        city: Option<&'a str>,
        #[serde(skip_serializing_if = "Option::is_none")]
        state: Option<&'a str>,
        #[serde(skip_serializing_if = "Option::is_none")]
        field_name: Option<&'a str>,
        #[serde(skip_serializing_if = "Option::is_none")]
        field_code: Option<&'a str>,
        #[serde(skip_serializing_if = "Option::is_none")]
        sector: Option<&'a str>,
    }

    struct Planned {
        inst: usize,
        field: usize,
        year: Option<i32>,
        text: String,
        missing_state: bool,
    }

    let mut planned: Vec<Planned> = Vec::new();
    // A dense cell for the sufficiency analysis: 12 syllabi in one triple.
    for _ in 0..12 {
        planned.push(Planned {
            inst: 0,
            field: 0,
            year: Some(2010),
            text: syllabus_text(rng, 0),
            missing_state: false,
        });
    }
    // Six within-year duplicate copies (three pairs) in one cell.
    for _ in 0..3 {
        let text = syllabus_text(rng, 1);
        for _ in 0..2 {
            planned.push(Planned {
                inst: 1,
                field: 1,
                year: Some(2011),
                text: text.clone(),
                missing_state: false,
            });
        }
    }
    // Three across-year duplicates: same text, same cell, different years.
    for i in 0..3 {
        let text = syllabus_text(rng, 2);
        planned.push(Planned {
            inst: 2,
            field: 2,
            year: Some(2009),
            text: text.clone(),
            missing_state: false,
        });
        planned.push(Planned {
            inst: 2,
            field: 2,
            year: Some(2010 + i),
            text,
            missing_state: false,
        });
    }
    // Two records with no year (aggregation exceptions).
    for i in 0..2 {
        planned.push(Planned {
            inst: 3 + i,
            field: 3,
            year: None,
            text: syllabus_text(rng, 3),
            missing_state: false,
        });
    }
    // Two records with no state (missing-bucket stats).
    for i in 0..2 {
        planned.push(Planned {
            inst: 4 + i,
            field: 4,
            year: Some(2012),
            text: syllabus_text(rng, 4),
            missing_state: true,
        });
    }
    // Fill the rest at random.
    while planned.len() < 200 {
        let inst = rng.gen_range(0..INSTITUTIONS.len());
        let field = rng.gen_range(0..FIELDS.len());
        let year = Some(rng.gen_range(2008..=2012));
        planned.push(Planned {
            inst,
            field,
            year,
            text: syllabus_text(rng, field),
            missing_state: false,
        });
    }

    let mut out = String::new();
    for (i, p) in planned.iter().enumerate() {
        let (inst_name, unit_id, city, state, sector) = INSTITUTIONS[p.inst];
        let (field_name, field_code) = FIELDS[p.field];
        let row = Row {
            syllabus_id: format!("syl-{:04}", i + 1),
            text: &p.text,
            year: p.year,
            institution_name: inst_name,
            unit_id,
            city: Some(city),
            state: if p.missing_state { None } else { Some(state) },
            field_name: Some(field_name),
            field_code: Some(field_code),
            sector: Some(sector),
        };
        out.push_str(&serde_json::to_string(&row).expect("fixture row serializes"));
        out.push('\n');
    }
    out
}

fn config_toml() -> String {
    r#"# Pipeline configuration for the bundled synthetic corpus.
seed = 42

[paths]
corpus = "corpus.jsonl"
corpus_format = "jsonl"
logistics_list = "logistics_terms.txt"
learning_list = "learning_terms.txt"
abbreviations = "abbreviations.txt"
dwa_taxonomy = "dwa_taxonomy.csv"
task_taxonomy = "task_taxonomy.csv"
ability_taxonomy = "ability_taxonomy.csv"
occupation_dwa = "occupation_dwa.csv"
occupation_abilities = "occupation_abilities.csv"
employment_weights = [
    { label = "2008-2009", path = "employment_0809.csv" },
    { label = "2010-2012", path = "employment_1012.csv" },
]
salary_table = "salary.csv"
output_dir = "out"

[provider]
kind = "test"
dim = 64
batch_size = 64
timeout_secs = 30.0
seed = 0

[options]
max_malformed_fraction = 0.0
prefix_match = true
min_tokens = 3
quantization_decimals = 12
mask_top_n = 10
mask_threshold = 0.5
top_k = 10
kl_epsilon = 1e-9
distinctiveness_percentile = 90.0
sufficiency_trials = 10
sufficiency_metrics = ["manhattan", "euclidean"]
louvain_min_rho = 0.0
occupation_filter = ["11", "13", "15", "17", "19", "25", "29"]
periods = [[2008, 2009], [2010, 2012]]
cv_folds = 5

[[options.forest_grid]]
n_trees = 25
max_depth = 8
min_samples_leaf = 1
features_per_split = "sqrt"

[[options.forest_grid]]
n_trees = 25
max_depth = 8
min_samples_leaf = 3
features_per_split = "sqrt"
"#
    .to_string()
}
