//! End-to-end acceptance suite. Each check prints one PASS line with its
//! elapsed time and enforces both the numeric tolerance and the time
//! budget it was designed against.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use syllabus_skills::ability::{
    predict_abilities, train_forest_cv, FeatureCount, ForestModel, Hyperparams, ModelBundle,
    RegressionTree, TreeNode,
};
use syllabus_skills::aggregate::{aggregate, dedup_report, SyllabusMeta};
use syllabus_skills::analytics::{
    elbow_detect, hierarchical_cluster, kl_divergence, louvain, modularity, spearman_similarity,
    sufficiency_curve, DistanceMetric, Distribution, WeightedGraph,
};
use syllabus_skills::corpus::PhraseList;
use syllabus_skills::embed::{cosine, embed_batch, TestProvider};
use syllabus_skills::normalize::{rca, FosSkillMatrix};
use syllabus_skills::numeric::{pairwise_sum, Matrix};
use syllabus_skills::score::{SkillEntry, SkillScorer, SkillTaxonomy, SkillVector, TaxonomyKind};
use syllabus_skills::textprep::{filter_learning, phrase_match, FilterConfig, Sentence};

struct Budget {
    name: &'static str,
    limit: Duration,
    start: Instant,
}

impl Budget {
    fn new(name: &'static str, limit_secs: f64) -> Self {
        Budget {
            name,
            limit: Duration::from_secs_f64(limit_secs),
            start: Instant::now(),
        }
    }

    fn pass(self) {
        let elapsed = self.start.elapsed();
        assert!(
            elapsed <= self.limit,
            "{} exceeded its budget: {elapsed:?} > {:?}",
            self.name,
            self.limit
        );
        println!(
            "ACCEPTANCE PASS {} ({:.3}s of {:.0}s budget)",
            self.name,
            elapsed.as_secs_f64(),
            self.limit.as_secs_f64()
        );
    }
}

fn sentence(id: &str, index: usize, text: &str) -> Sentence {
    Sentence {
        syllabus_id: id.into(),
        index,
        text: text.into(),
        normalized: syllabus_skills::textnorm::normalize(text),
    }
}

#[test]
fn criterion_01_aggregation_paper_example() {
    let budget = Budget::new("01 aggregation example (0.8, 0.6 -> 0.7)", 1.0);
    let meta = |id: &str| SyllabusMeta {
        syllabus_id: id.into(),
        year: Some(2012),
        institution_name: "State U".into(),
        unit_id: Some("100001".into()),
        city: None,
        state: None,
        field_name: Some("Biology".into()),
        field_code: Some("26.01".into()),
        sector: None,
    };
    let vector = |id: &str, score: f64| SkillVector {
        syllabus_id: id.into(),
        taxonomy_kind: TaxonomyKind::Dwa,
        scores: vec![score],
        empty_content: false,
    };
    let items = vec![
        (vector("a", 0.8), meta("a")),
        (vector("b", 0.6), meta("b")),
    ];
    let out = aggregate(&items).unwrap();
    assert_eq!(out.records.len(), 1);
    assert!((out.records[0].mean_scores[0] - 0.7).abs() <= 1e-15);
    assert_eq!(out.records[0].n_syllabi, 2);
    budget.pass();
}

#[test]
fn criterion_02_scoring_oracle_equivalence() {
    let budget = Budget::new("02 scoring equals brute-force max bit-for-bit", 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
    let taxonomy = SkillTaxonomy::new(
        TaxonomyKind::Dwa,
        (0..20)
            .map(|i| SkillEntry {
                skill_id: format!("d{i:02}"),
                text: format!("perform specialized activity number {i} with care"),
            })
            .collect(),
    )
    .unwrap();
    let provider = TestProvider::new(32, 11).unwrap();
    let scorer = SkillScorer::new(&taxonomy, &provider, 8).unwrap();
    let skill_texts: Vec<String> = taxonomy.entries().iter().map(|e| e.text.clone()).collect();
    let skill_embeddings = embed_batch(&skill_texts, &provider, 64).unwrap();

    let words = ["model", "analyze", "data", "network", "design", "survey", "report", "method"];
    for case in 0..100 {
        let n = rng.gen_range(1..=20);
        let sentences: Vec<Sentence> = (0..n)
            .map(|i| {
                let k = rng.gen_range(3..9);
                let text: Vec<&str> =
                    (0..k).map(|_| words[rng.gen_range(0..words.len())]).collect();
                sentence(&format!("s{case}"), i, &text.join(" "))
            })
            .collect();
        let got = scorer.score(&format!("s{case}"), &sentences).unwrap();
        let texts: Vec<String> = sentences.iter().map(|s| s.text.clone()).collect();
        let sentence_embeddings = embed_batch(&texts, &provider, 64).unwrap();
        for (j, skill_embedding) in skill_embeddings.iter().enumerate() {
            let expected = sentence_embeddings
                .iter()
                .map(|e| cosine(e, skill_embedding).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(got.scores[j], expected, "case {case} skill {j}");
        }
    }
    budget.pass();
}

#[test]
fn criterion_03_filter_soundness_on_planted_corpus() {
    let budget = Budget::new("03 filter soundness on 10k planted sentences", 5.0);
    let logistics = PhraseList::new([
        "office hours",
        "plagiarism",
        "attendance",
        "late policy",
        "grading rubric",
        "final exam",
    ]);
    let learning = PhraseList::new([
        "analyze",
        "evaluate",
        "compare",
        "design",
        "outcome",
        "interpret",
        "model",
        "versus",
    ]);
    let filler = [
        "the", "course", "meets", "weekly", "in", "autumn", "students", "gather", "notes",
        "chapter", "reading", "room", "topics", "sessions",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut sentences = Vec::with_capacity(10_000);
    for i in 0..10_000usize {
        let n = rng.gen_range(3..12);
        let mut words: Vec<String> = (0..n)
            .map(|_| filler[rng.gen_range(0..filler.len())].to_string())
            .collect();
        if rng.gen_bool(0.3) {
            let phrase = &logistics.phrases()[rng.gen_range(0..logistics.len())];
            words.insert(rng.gen_range(0..=words.len()), phrase.clone());
        }
        if rng.gen_bool(0.5) {
            let phrase = &learning.phrases()[rng.gen_range(0..learning.len())];
            words.insert(rng.gen_range(0..=words.len()), phrase.clone());
        }
        sentences.push(sentence("s", i, &words.join(" ")));
    }

    let cfg = FilterConfig::default();
    let (kept, report) = filter_learning(sentences, &logistics, &learning, &cfg).unwrap();
    assert!(!kept.is_empty());
    for s in &kept {
        for phrase in logistics.phrases() {
            assert!(
                !phrase_match(&s.normalized, phrase, cfg.mode),
                "kept sentence contains logistics phrase {phrase:?}: {:?}",
                s.text
            );
        }
        assert!(
            learning
                .phrases()
                .iter()
                .any(|p| phrase_match(&s.normalized, p, cfg.mode)),
            "kept sentence lacks learning language: {:?}",
            s.text
        );
    }
    assert_eq!(report.n_input, 10_000);
    assert_eq!(
        report.n_input,
        report.n_removed_logistics + report.n_removed_no_learning + report.n_kept
    );
    assert_eq!(report.n_kept as usize, kept.len());
    budget.pass();
}

#[test]
fn criterion_04_rca_identities() {
    let budget = Budget::new("04 RCA identities", 5.0);
    // Uniform matrix: every quotient is exactly 1.
    let uniform = FosSkillMatrix::new(
        (0..4).map(|i| format!("f{i}")).collect(),
        (0..5).map(|j| format!("s{j}")).collect(),
        vec![vec![0.7; 5]; 4],
    );
    let r = rca(&uniform).unwrap();
    for i in 0..4 {
        for j in 0..5 {
            assert!((r.values.get(i, j) - 1.0).abs() <= 1e-12);
        }
    }

    // Hand-derived 2x2 case.
    let m = FosSkillMatrix::new(
        vec!["a".into(), "b".into()],
        vec!["x".into(), "y".into()],
        vec![vec![2.0, 0.0], vec![1.0, 1.0]],
    );
    let r = rca(&m).unwrap();
    let expected = [[4.0 / 3.0, 0.0], [2.0 / 3.0, 2.0]];
    for i in 0..2 {
        for j in 0..2 {
            assert!(
                (r.values.get(i, j) - expected[i][j]).abs() <= 1e-12,
                "cell ({i},{j})"
            );
        }
    }

    // Row identity on 50 random matrices.
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..50 {
        let n_fos = rng.gen_range(2..10);
        let n_skills = rng.gen_range(2..12);
        let rows: Vec<Vec<f64>> = (0..n_fos)
            .map(|_| (0..n_skills).map(|_| rng.gen_range(0.001..4.0)).collect())
            .collect();
        let m = FosSkillMatrix::new(
            (0..n_fos).map(|i| format!("f{i}")).collect(),
            (0..n_skills).map(|j| format!("s{j}")).collect(),
            rows,
        );
        let r = rca(&m).unwrap();
        let col_sums: Vec<f64> = (0..n_skills)
            .map(|j| pairwise_sum(&m.values.column(j)))
            .collect();
        let grand = pairwise_sum(&col_sums);
        for i in 0..n_fos {
            let weighted: f64 = (0..n_skills)
                .map(|j| col_sums[j] / grand * r.values.get(i, j))
                .sum();
            assert!((weighted - 1.0).abs() <= 1e-9, "row identity {weighted}");
        }
    }
    budget.pass();
}

#[test]
fn criterion_05_random_forest() {
    let budget = Budget::new("05 random forest determinism, accuracy, degenerate", 60.0);
    // (a) Determinism: identical seeds give bit-identical serialized models.
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let small_x = Matrix::from_rows(
        (0..40)
            .map(|_| (0..6).map(|_| rng.gen::<f64>()).collect())
            .collect(),
    );
    let small_y: Vec<f64> = (0..40).map(|_| rng.gen::<f64>()).collect();
    let grid = vec![
        Hyperparams {
            n_trees: 30,
            max_depth: Some(8),
            min_samples_leaf: 1,
            features_per_split: FeatureCount::Sqrt,
        },
        Hyperparams {
            n_trees: 30,
            max_depth: Some(8),
            min_samples_leaf: 3,
            features_per_split: FeatureCount::Third,
        },
    ];
    let a = train_forest_cv(&small_x, &small_y, &grid, 5, 777).unwrap();
    let b = train_forest_cv(&small_x, &small_y, &grid, 5, 777).unwrap();
    assert_eq!(
        serde_json::to_string(&a.forest).unwrap(),
        serde_json::to_string(&b.forest).unwrap(),
        "serialized models must be bit-identical for one seed"
    );
    assert_eq!(a.cv_mse, b.cv_mse);

    // (b) y = 0.3*x3 + 0.5*x7 + N(0, 0.05^2), 300 samples, default grid:
    // best-cell CV MSE within 4x the noise floor.
    use rand_distr::{Distribution as _, Normal};
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let rows: Vec<Vec<f64>> = (0..300)
        .map(|_| (0..10).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| 0.3 * r[3] + 0.5 * r[7] + noise.sample(&mut rng))
        .collect();
    let x = Matrix::from_rows(rows);
    let out = train_forest_cv(&x, &y, &syllabus_skills::ability::default_grid(), 5, 999).unwrap();
    assert!(out.cv_mse <= 0.01, "best-grid CV MSE {} > 0.01", out.cv_mse);

    // (c) Constant target: exact zero MSE (0.5 sums without rounding).
    let y_const = vec![0.5; x.n_rows()];
    let out = train_forest_cv(&x, &y_const, &grid, 5, 1000).unwrap();
    assert_eq!(out.cv_mse, 0.0, "constant target must give zero MSE");
    budget.pass();
}

#[test]
fn criterion_06_ability_zero_rule() {
    let budget = Budget::new("06 empty-content vectors map to 52 exact zeros", 1.0);
    // 52 constant nonzero models: any zero in the output must come from
    // the empty-content rule, not the regressors.
    let models: Vec<ForestModel> = (0..52)
        .map(|i| ForestModel {
            ability_id: format!("A{:02}", i + 1),
            hyperparams: Hyperparams::default(),
            cv_mse: 0.0,
            master_seed: 0,
            taxonomy_fingerprint: "fp".into(),
            n_features: 50,
            trees: vec![RegressionTree {
                nodes: vec![TreeNode::Leaf { value: 0.7 }],
            }],
        })
        .collect();
    let bundle = ModelBundle {
        version: 1,
        taxonomy_fingerprint: "fp".into(),
        master_seed: 0,
        models,
    };
    let vector = SkillVector::zeros("empty", TaxonomyKind::Dwa, 50);
    assert!(vector.empty_content);
    let out = predict_abilities(&vector, &bundle).unwrap();
    assert_eq!(out.scores.len(), 52);
    assert!(out.scores.iter().all(|&s| s == 0.0));
    assert!(out.empty_content);

    // A non-empty vector goes through the models and is nonzero.
    let mut nonempty = SkillVector::zeros("full", TaxonomyKind::Dwa, 50);
    nonempty.empty_content = false;
    let out = predict_abilities(&nonempty, &bundle).unwrap();
    assert!(out.scores.iter().all(|&s| s == 0.7));
    budget.pass();
}

#[test]
fn criterion_07_kl_suite() {
    let budget = Budget::new("07 KL identity, nonnegativity, closed form", 5.0);
    let p = Distribution::from_shares(&[0.2, 0.3, 0.5], 1e-9).unwrap();
    assert!(kl_divergence(&p, &p).unwrap().abs() <= 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for _ in 0..1000 {
        let dim = rng.gen_range(2..30);
        let a: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        let b: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        let pa = Distribution::from_shares(&a, 1e-9).unwrap();
        let pb = Distribution::from_shares(&b, 1e-9).unwrap();
        assert!(kl_divergence(&pa, &pb).unwrap() >= -1e-12);
    }

    let p = Distribution::from_shares(&[0.9, 0.1], 0.0).unwrap();
    let q = Distribution::from_shares(&[0.1, 0.9], 0.0).unwrap();
    let expected = 0.8 * 9.0f64.ln();
    assert!((kl_divergence(&p, &q).unwrap() - expected).abs() <= 1e-9);
    budget.pass();
}

#[test]
fn criterion_08_duplicate_decomposition() {
    let budget = Budget::new("08 duplicate report recovers planted counts", 1.0);
    let meta = |id: &str, year: i32| SyllabusMeta {
        syllabus_id: id.into(),
        year: Some(year),
        institution_name: "State U".into(),
        unit_id: Some("100001".into()),
        city: None,
        state: None,
        field_name: Some("Biology".into()),
        field_code: None,
        sector: None,
    };
    let vector = |id: &str, fill: f64| SkillVector {
        syllabus_id: id.into(),
        taxonomy_kind: TaxonomyKind::Dwa,
        scores: vec![fill, 1.0 - fill],
        empty_content: false,
    };
    let mut items = Vec::new();
    // Three within-year duplicates: 4 copies of one vector in 2010.
    for i in 0..4 {
        items.push((vector(&format!("w{i}"), 0.25), meta(&format!("w{i}"), 2010)));
    }
    // Two across-year duplicates: 3 copies of another vector across years.
    for (i, year) in [2011, 2012, 2013].iter().enumerate() {
        items.push((vector(&format!("a{i}"), 0.6), meta(&format!("a{i}"), *year)));
    }
    // Unique extras.
    items.push((vector("u1", 0.91), meta("u1", 2010)));
    items.push((vector("u2", 0.17), meta("u2", 2011)));

    let report = dedup_report(&items, 12).unwrap();
    assert_eq!(report.total_duplicates, 5, "total");
    assert_eq!(report.within_year_duplicates, 3, "within year");
    assert_eq!(report.across_year_duplicates, 2, "across = total - within");
    budget.pass();
}

#[test]
fn criterion_09_sufficiency_and_elbow() {
    let budget = Budget::new("09 sufficiency monotone trend and planted elbow", 30.0);
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let vectors: Vec<Vec<f64>> = (0..60)
        .map(|_| (0..50).map(|_| rng.gen::<f64>()).collect())
        .collect();
    for metric in [DistanceMetric::Manhattan, DistanceMetric::Euclidean] {
        let curve = sufficiency_curve(&vectors, 10, metric, 7).unwrap();
        assert_eq!(curve.len(), 59);
        let ks: Vec<f64> = curve.iter().map(|p| p.k as f64).collect();
        let means: Vec<f64> = curve.iter().map(|p| p.mean).collect();
        let rho = spearman_of(&ks, &means);
        assert!(rho <= -0.95, "{metric}: rank trend {rho} > -0.95");
    }

    // Constructed corner at k = 9.
    let mut corner = Vec::new();
    for k in 1..=40usize {
        let y = if k <= 9 {
            12.0 - (k as f64 - 1.0) * 1.2
        } else {
            12.0 - 8.0 * 1.2 - 0.02 * (k as f64 - 9.0)
        };
        corner.push((k, y));
    }
    assert_eq!(elbow_detect(&corner).unwrap(), 9);
    budget.pass();
}

fn spearman_of(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&x, &y| v[x].partial_cmp(&v[y]).unwrap());
        let mut out = vec![0.0; v.len()];
        for (rank, &i) in idx.iter().enumerate() {
            out[i] = rank as f64;
        }
        out
    }
    let ra = ranks(a);
    let rb = ranks(b);
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va.sqrt() * vb.sqrt())
}

#[test]
fn criterion_10_clustering_and_communities() {
    let budget = Budget::new("10 dendrogram zero-merge and Louvain oracle", 10.0);
    // Planted identical FOS vectors merge first at height 0.
    let m = FosSkillMatrix::new(
        vec!["twin1".into(), "twin2".into(), "other".into(), "far".into()],
        (0..6).map(|j| format!("s{j}")).collect(),
        vec![
            vec![0.6, 0.1, 0.5, 0.2, 0.9, 0.3],
            vec![0.6, 0.1, 0.5, 0.2, 0.9, 0.3],
            vec![0.1, 0.8, 0.2, 0.7, 0.1, 0.6],
            vec![0.9, 0.2, 0.1, 0.4, 0.3, 0.8],
        ],
    );
    let sim = spearman_similarity(&m).unwrap();
    let dendrogram = hierarchical_cluster(&sim);
    assert_eq!(dendrogram.merges[0].cluster_a, 0);
    assert_eq!(dendrogram.merges[0].cluster_b, 1);
    assert!(dendrogram.merges[0].height.abs() <= 1e-12);

    // Louvain on two disjoint 3-cliques.
    let mut cliques = WeightedGraph::new(6);
    for &(a, b) in &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)] {
        cliques.add_edge(a, b, 1.0);
    }
    let partition = louvain(&cliques).unwrap();
    assert_eq!(partition.communities, vec![0, 0, 0, 1, 1, 1]);

    // Exhaustive-modularity oracle on every graph in the small test set.
    for (name, graph) in small_test_graphs() {
        let p = louvain(&graph).unwrap();
        let best = exhaustive_best_modularity(&graph);
        assert!(
            (p.modularity - best).abs() <= 1e-9,
            "{name}: louvain {} vs oracle {best}",
            p.modularity
        );
    }
    budget.pass();
}

fn small_test_graphs() -> Vec<(&'static str, WeightedGraph)> {
    let mut graphs = Vec::new();

    let mut two_triangles = WeightedGraph::new(6);
    for &(a, b) in &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)] {
        two_triangles.add_edge(a, b, 1.0);
    }
    graphs.push(("two triangles", two_triangles));

    let mut bridged = WeightedGraph::new(6);
    for &(a, b) in &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)] {
        bridged.add_edge(a, b, 1.0);
    }
    bridged.add_edge(2, 3, 0.1);
    graphs.push(("bridged triangles", bridged));

    let mut complete5 = WeightedGraph::new(5);
    for i in 0..5 {
        for j in (i + 1)..5 {
            complete5.add_edge(i, j, 1.0);
        }
    }
    graphs.push(("complete K5", complete5));

    let mut cycle4 = WeightedGraph::new(4);
    for &(a, b) in &[(0, 1), (1, 2), (2, 3), (3, 0)] {
        cycle4.add_edge(a, b, 1.0);
    }
    graphs.push(("4-cycle", cycle4));

    let mut two_squares = WeightedGraph::new(8);
    for &(a, b) in &[(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4)] {
        two_squares.add_edge(a, b, 1.0);
    }
    two_squares.add_edge(0, 4, 0.2);
    graphs.push(("two squares with a weak tie", two_squares));

    graphs
}

fn exhaustive_best_modularity(graph: &WeightedGraph) -> f64 {
    fn recurse(
        graph: &WeightedGraph,
        assignment: &mut Vec<usize>,
        pos: usize,
        max_used: usize,
        best: &mut f64,
    ) {
        if pos == assignment.len() {
            let q = modularity(graph, assignment);
            if q > *best {
                *best = q;
            }
            return;
        }
        for c in 0..=max_used + 1 {
            assignment[pos] = c;
            recurse(graph, assignment, pos + 1, max_used.max(c), best);
        }
    }
    let n = graph.n_nodes();
    let mut assignment = vec![0usize; n];
    let mut best = f64::NEG_INFINITY;
    recurse(graph, &mut assignment, 1, 0, &mut best);
    best
}

fn run_cli(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_syllabus-skills"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn snapshot_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let entry = entry.unwrap();
            let path = entry.path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

#[test]
fn criterion_11_end_to_end_golden_run() {
    let budget = Budget::new("11 golden run: byte-identical across runs and --jobs", 120.0);
    let tmp = tempfile::tempdir().unwrap();
    let fixtures = tmp.path().join("fx");
    let out = run_cli(tmp.path(), &["fixtures", "--out", "fx", "--seed", "7"]);
    assert!(out.status.success(), "fixtures failed: {out:?}");
    let _ = fixtures;

    let run = |jobs: Option<&str>| -> BTreeMap<String, Vec<u8>> {
        let out_dir = tmp.path().join("fx/out");
        if out_dir.exists() {
            std::fs::remove_dir_all(&out_dir).unwrap();
        }
        let mut args = vec!["--config", "fx/config.toml"];
        if let Some(j) = jobs {
            args.extend(["--jobs", j]);
        }
        args.push("all");
        let out = run_cli(tmp.path(), &args);
        assert!(
            out.status.success(),
            "all failed: stderr={}",
            String::from_utf8_lossy(&out.stderr)
        );
        snapshot_dir(&out_dir)
    };

    let first = run(None);
    assert!(first.contains_key("pipeline_manifest.json"));
    assert!(first.contains_key("institution_fos_year.csv"));
    let second = run(None);
    assert_eq!(first.len(), second.len());
    for (name, bytes) in &first {
        assert_eq!(
            bytes,
            second.get(name).unwrap_or_else(|| panic!("{name} missing in rerun")),
            "{name} differs between identical runs"
        );
    }
    let third = run(Some("2"));
    for (name, bytes) in &first {
        assert_eq!(
            bytes,
            third.get(name).unwrap_or_else(|| panic!("{name} missing with --jobs 2")),
            "{name} differs with --jobs 2"
        );
    }
    budget.pass();
}

/// Optional tier: real reference files supplied via ONET_DIR, containing
/// dwa_reference.csv (dwa_id,dwa_title), occupation_dwa.csv, and
/// occupation_abilities.csv in this crate's documented formats.
#[test]
fn criterion_12_optional_real_reference_files() {
    let Ok(dir) = std::env::var("ONET_DIR") else {
        println!("ACCEPTANCE SKIP 12 optional tier (set ONET_DIR to run against real reference files)");
        return;
    };
    let budget = Budget::new("12 real reference files: 2070 DWAs, CV MSE <= 0.05", 3600.0);
    let dir = PathBuf::from(dir);
    let taxonomy =
        syllabus_skills::score::load_taxonomy(&dir.join("dwa_reference.csv"), TaxonomyKind::Dwa)
            .expect("dwa_reference.csv loads");
    assert_eq!(taxonomy.len(), 2070, "full DWA reference has 2,070 entries");

    let occ_dwa =
        syllabus_skills::ability::load_occupation_dwa(&dir.join("occupation_dwa.csv"), &taxonomy)
            .expect("occupation_dwa.csv loads");
    let occ_abil = syllabus_skills::ability::load_occupation_abilities(
        &dir.join("occupation_abilities.csv"),
    )
    .expect("occupation_abilities.csv loads");
    let training = syllabus_skills::ability::build_training(&occ_dwa, &occ_abil).unwrap();
    let bundle = syllabus_skills::ability::train_all_abilities(
        &training,
        &syllabus_skills::ability::default_grid(),
        5,
        42,
        &taxonomy,
    )
    .unwrap();
    let max_mse = bundle.models.iter().map(|m| m.cv_mse).fold(0.0, f64::max);
    assert!(max_mse <= 0.05, "max per-ability CV MSE {max_mse} > 0.05");
    budget.pass();
}
