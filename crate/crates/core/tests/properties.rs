//! Property tests for the pipeline invariants.

use proptest::prelude::*;

use syllabus_skills::aggregate::{aggregate, SyllabusMeta};
use syllabus_skills::analytics::{kl_divergence, Distribution};
use syllabus_skills::corpus::{corpus_stats, PhraseList, SyllabusRecord, MISSING_BUCKET};
use syllabus_skills::embed::{cosine, EmbeddingVector, TestProvider};
use syllabus_skills::normalize::{rca, top_k_mean, FosSkillMatrix};
use syllabus_skills::numeric::pairwise_sum;
use syllabus_skills::score::{SkillVector, TaxonomyKind};
use syllabus_skills::textprep::{
    filter_learning, phrase_match, segment, FilterConfig, MatchMode, SegmenterConfig,
};

fn finite_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3..1e3f64, dim)
}

proptest! {
    #[test]
    fn cosine_is_symmetric_and_scale_invariant(a in finite_vec(8), b in finite_vec(8), alpha in 0.001..100.0f64) {
        let va = EmbeddingVector::new(a.clone()).unwrap();
        let vb = EmbeddingVector::new(b.clone()).unwrap();
        if va.l2_norm() > 1e-6 && vb.l2_norm() > 1e-6 {
            let ab = cosine(&va, &vb).unwrap();
            let ba = cosine(&vb, &va).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-15);
            prop_assert!(ab >= -1.0 - 1e-12 && ab <= 1.0 + 1e-12);
            let scaled: Vec<f64> = a.iter().map(|x| x * alpha).collect();
            let vs = EmbeddingVector::new(scaled).unwrap();
            prop_assert!((cosine(&vs, &vb).unwrap() - ab).abs() <= 1e-12);
        }
    }

    #[test]
    fn segmentation_covers_all_non_whitespace(text in "\\PC{0,400}") {
        let sentences = segment("s", &text, &SegmenterConfig::default());
        let strip = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
        let joined: String = sentences.iter().map(|s| strip(&s.text)).collect();
        prop_assert_eq!(joined, strip(&text));
        // Indices contiguous from 0.
        for (i, s) in sentences.iter().enumerate() {
            prop_assert_eq!(s.index, i);
            prop_assert!(!s.text.trim().is_empty());
        }
    }

    #[test]
    fn filter_report_arithmetic_and_soundness(
        sentence_words in prop::collection::vec(
            prop::collection::vec("[a-z]{1,8}", 1..8),
            0..40,
        ),
        plant_logistics in prop::collection::vec(any::<bool>(), 0..40),
        plant_learning in prop::collection::vec(any::<bool>(), 0..40),
    ) {
        let logistics = PhraseList::new(["office hours", "plagiarism"]);
        let learning = PhraseList::new(["analyze", "outcome"]);
        let mut sentences = Vec::new();
        for (i, words) in sentence_words.iter().enumerate() {
            let mut text = words.join(" ");
            if plant_logistics.get(i).copied().unwrap_or(false) {
                text.push_str(" office hours");
            }
            if plant_learning.get(i).copied().unwrap_or(false) {
                text.push_str(" analyze");
            }
            sentences.push(syllabus_skills::textprep::Sentence {
                syllabus_id: "s".into(),
                index: i,
                text: text.clone(),
                normalized: syllabus_skills::textnorm::normalize(&text),
            });
        }
        let cfg = FilterConfig::default();
        let (kept, report) = filter_learning(sentences, &logistics, &learning, &cfg).unwrap();
        prop_assert_eq!(
            report.n_input,
            report.n_removed_logistics + report.n_removed_no_learning + report.n_kept
        );
        for s in &kept {
            for phrase in logistics.phrases() {
                prop_assert!(!phrase_match(&s.normalized, phrase, cfg.mode));
            }
            prop_assert!(learning
                .phrases()
                .iter()
                .any(|p| phrase_match(&s.normalized, p, cfg.mode)));
        }
    }

    #[test]
    fn stats_bucket_sums_match_count(
        fos in prop::collection::vec(prop::option::of("[A-Z][a-z]{2,6}"), 1..30)
    ) {
        let records: Vec<SyllabusRecord> = fos
            .iter()
            .enumerate()
            .map(|(i, f)| SyllabusRecord {
                syllabus_id: format!("s{i}"),
                text: "Analyze data today.".into(),
                year: Some(2010),
                institution_name: "U".into(),
                unit_id: None,
                city: None,
                state: None,
                field_name: f.clone(),
                field_code: None,
                sector: None,
            })
            .collect();
        let stats = corpus_stats(&records);
        prop_assert_eq!(stats.per_fos.values().sum::<u64>(), stats.n_syllabi);
        let explicit: u64 = records.iter().filter(|r| r.field_name.is_some()).count() as u64;
        prop_assert_eq!(
            stats.per_fos.get(MISSING_BUCKET).copied().unwrap_or(0),
            stats.n_syllabi - explicit
        );
    }

    #[test]
    fn aggregate_counts_inputs_minus_exceptions(
        years in prop::collection::vec(prop::option::of(2000..2020i32), 1..25)
    ) {
        let items: Vec<(SkillVector, SyllabusMeta)> = years
            .iter()
            .enumerate()
            .map(|(i, year)| {
                (
                    SkillVector {
                        syllabus_id: format!("s{i}"),
                        taxonomy_kind: TaxonomyKind::Dwa,
                        scores: vec![i as f64 * 0.01],
                        empty_content: false,
                    },
                    SyllabusMeta {
                        syllabus_id: format!("s{i}"),
                        year: *year,
                        institution_name: "U".into(),
                        unit_id: Some(format!("u{}", i % 3)),
                        city: None,
                        state: None,
                        field_name: Some("Biology".into()),
                        field_code: None,
                        sector: None,
                    },
                )
            })
            .collect();
        let out = aggregate(&items).unwrap();
        let total: u64 = out.records.iter().map(|r| r.n_syllabi).sum();
        prop_assert_eq!(total as usize + out.exceptions.len(), items.len());
    }

    #[test]
    fn rca_row_identity_on_random_matrices(
        rows in prop::collection::vec(prop::collection::vec(0.01..5.0f64, 6), 2..10)
    ) {
        let n = rows.len();
        let m = FosSkillMatrix::new(
            (0..n).map(|i| format!("f{i}")).collect(),
            (0..6).map(|j| format!("s{j}")).collect(),
            rows,
        );
        let r = rca(&m).unwrap();
        let col_sums: Vec<f64> = (0..6).map(|j| pairwise_sum(&m.values.column(j))).collect();
        let grand = pairwise_sum(&col_sums);
        for i in 0..n {
            let weighted: f64 = (0..6)
                .map(|j| col_sums[j] / grand * r.values.get(i, j))
                .sum();
            prop_assert!((weighted - 1.0).abs() <= 1e-9, "row {} identity {}", i, weighted);
        }
        // Scaling the whole matrix leaves RCA unchanged.
        let scaled_rows: Vec<Vec<f64>> = (0..n)
            .map(|i| m.values.row(i).iter().map(|v| v * 3.25).collect())
            .collect();
        let scaled = FosSkillMatrix::new(m.fos_list.clone(), m.skill_list.clone(), scaled_rows);
        let r2 = rca(&scaled).unwrap();
        for i in 0..n {
            for j in 0..6 {
                prop_assert!((r.values.get(i, j) - r2.values.get(i, j)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn top_k_never_returns_masked_skills(
        rows in prop::collection::vec(prop::collection::vec(0.0..1.0f64, 8), 2..6),
        k in 0..10usize,
    ) {
        let n = rows.len();
        let m = FosSkillMatrix::new(
            (0..n).map(|i| format!("f{i}")).collect(),
            (0..8).map(|j| format!("s{j}")).collect(),
            rows,
        );
        let mask = std::collections::BTreeSet::from(["s1".to_string(), "s4".to_string()]);
        let top = top_k_mean(&m, "f0", k, Some(&mask)).unwrap();
        prop_assert!(top.len() <= k);
        for (skill, _) in top {
            prop_assert!(!mask.contains(&skill));
        }
    }

    #[test]
    fn kl_nonnegative_on_random_smoothed_pairs(
        p_raw in prop::collection::vec(0.0..1.0f64, 2..20),
        q_scale in prop::collection::vec(0.0..1.0f64, 2..20),
    ) {
        let dim = p_raw.len().min(q_scale.len());
        let p = Distribution::from_shares(&p_raw[..dim], 1e-9).unwrap();
        let q = Distribution::from_shares(&q_scale[..dim], 1e-9).unwrap();
        prop_assert!(kl_divergence(&p, &q).unwrap() >= -1e-12);
        prop_assert!(kl_divergence(&q, &p).unwrap() >= -1e-12);
    }

    #[test]
    fn test_provider_is_a_pure_function_of_text(texts in prop::collection::vec("\\PC{1,30}", 1..10)) {
        let provider = TestProvider::new(16, 5).unwrap();
        for text in &texts {
            let a = provider.embed_one(text);
            let b = provider.embed_one(text);
            prop_assert_eq!(a, b);
        }
    }
}

#[test]
fn phrase_list_idempotent_through_serialization() {
    let list = PhraseList::new(["Office Hours", "plagiarism", "LATE  policy"]);
    let round = PhraseList::from_text(&list.to_text());
    assert_eq!(list, round);
    let round2 = PhraseList::from_text(&round.to_text());
    assert_eq!(round, round2);
}
