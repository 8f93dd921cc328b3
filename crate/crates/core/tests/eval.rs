use morphlem::data::{categorize_tokens, Category, Corpus, Sentence, Token};
use morphlem::eval::correlation::{TABLE2_CSV, TABLE4_DEV_CSV, TABLE5_TEST_CSV};
use morphlem::eval::*;
use morphlem::Error;
use proptest::prelude::*;

fn corpus(pairs: &[(&str, &str)]) -> Corpus {
    Corpus::new(vec![Sentence::from_tokens(
        pairs
            .iter()
            .map(|(f, l)| Token::new(*f, Some(l), None))
            .collect(),
    )])
}

#[test]
fn accuracy_examples() {
    let gold = corpus(&[("dogs", "dog"), ("ran", "run")]);
    let cats = vec![Category::Unseen; 2];
    let all = accuracy_report(&["dog".into(), "run".into()], &gold, &cats).unwrap();
    assert_eq!(all.accuracy(), 1.0);
    assert_eq!(
        all.category(Category::Unseen).unwrap().accuracy(),
        Some(1.0)
    );
    assert_eq!(all.category(Category::Ambiguous).unwrap().accuracy(), None);
    let half = accuracy_report(&["dog".into(), "ran".into()], &gold, &cats).unwrap();
    assert_eq!(half.accuracy(), 0.5);
    assert!(matches!(
        accuracy_report(&["dog".into()], &gold, &cats),
        Err(Error::LengthMismatch { .. })
    ));
}

#[test]
fn category_counts_sum_to_total() {
    let train = corpus(&[("a", "a"), ("b", "b"), ("b", "c")]);
    let eval = corpus(&[("a", "a"), ("b", "b"), ("z", "z"), ("a", "x")]);
    let cats = categorize_tokens(&train, &eval);
    let pred: Vec<String> = ["a", "c", "z", "a"].iter().map(|s| s.to_string()).collect();
    let r = accuracy_report(&pred, &eval, &cats).unwrap();
    assert_eq!(r.categories.iter().map(|c| c.count).sum::<usize>(), r.total);
    assert_eq!(r.correct, 2);
}

#[test]
fn table3_coefficients() {
    let rows = parse_language_rows(TABLE2_CSV).unwrap();
    let r = correlation_study(&rows).unwrap();
    assert!((r.tags_vs_delta.pearson - 0.206).abs() < 0.005);
    assert!((r.tags_vs_delta.spearman - 0.209).abs() < 0.005);
    assert!((r.tokens_vs_delta.pearson - -0.808).abs() < 0.005);
    assert!((r.tokens_vs_delta.spearman - -0.845).abs() < 0.005);
    assert!(correlation_study(&rows[..2]).is_err());
}

#[test]
fn table2_delta_is_close_to_the_difference() {
    // the source table rounds its columns independently
    for r in parse_language_rows(TABLE2_CSV).unwrap() {
        assert!(
            (r.ours - r.lematus - r.delta).abs() <= 0.25,
            "{}",
            r.language
        );
    }
}

#[test]
fn shipped_averages() {
    for text in [TABLE4_DEV_CSV, TABLE5_TEST_CSV] {
        let t = parse_results_table(text).unwrap();
        let avg = t.published_average.clone().unwrap();
        let published = [
            avg.gold,
            avg.crunching,
            avg.jackknifing,
            avg.ch20,
            avg.silver,
        ];
        for (name, p) in ResultsTable::COLUMNS.iter().zip(published) {
            let got = t.average(name).unwrap();
            assert!((got - p).abs() <= 0.01, "{name}: {got} vs {p}");
        }
    }
    let dev = parse_results_table(TABLE4_DEV_CSV).unwrap();
    assert!((dev.average("jackknifing").unwrap() - 95.42).abs() <= 0.01);
}

#[test]
fn planted_pattern_ranks_first() {
    let pairs = [
        ("labs", "laba"),
        ("zaļš", "zaļa"),
        ("liels", "liela"),
        ("mazs", "maza"),
        ("tege", "tegema"),
        ("ira", "ir"),
    ];
    let scripts: Vec<EditScript> = pairs.iter().map(|(h, g)| edit_script(h, g)).collect();
    let hist = aggregate_patterns(&scripts);
    assert_eq!(hist[0].0.to_string(), "{replace: s → a}");
    assert_eq!(hist[0].1, 3);
    assert!(hist.windows(2).all(|w| w[0].1 >= w[1].1));
}

#[test]
fn permutation_matches_enumeration_for_small_n() {
    let a = [true, true, true, false, true, false];
    let b = [false, true, false, false, false, true];
    let exact = exact_permutation_p(&a, &b).unwrap();
    let p = paired_permutation_test(&a, &b, 10_000, 17).unwrap();
    let sigma = (exact * (1.0 - exact) / 10_000.0).sqrt();
    assert!((p - exact).abs() <= 3.0 * sigma, "{p} vs {exact}");
    assert_eq!(paired_permutation_test(&a, &b, 10_000, 17).unwrap(), p);
}

proptest! {
    #[test]
    fn scripts_apply_and_are_minimal(h in "[a-d]{0,7}", g in "[a-d]{0,7}") {
        let s = edit_script(&h, &g);
        prop_assert_eq!(s.apply(&h).unwrap(), g.clone());
        prop_assert_eq!(s.len(), edit_distance(&h, &g));
        prop_assert!(s.edits.windows(2).all(|w| w[0].position <= w[1].position));
    }

    #[test]
    fn spearman_ignores_monotone_transforms(
        xs in prop::collection::vec(-50.0f64..50.0, 4..12),
        ys in prop::collection::vec(-50.0f64..50.0, 12),
    ) {
        let ys = &ys[..xs.len()];
        if let (Ok(r), Ok(t)) = (spearman(&xs, ys), spearman(&xs.iter().map(|x| x.exp()).collect::<Vec<_>>(), ys)) {
            prop_assert!((r - t).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn p_values_are_in_range(a in prop::collection::vec(any::<bool>(), 1..30), seed in 0u64..100) {
        let b: Vec<bool> = a.iter().rev().copied().collect();
        let p = paired_permutation_test(&a, &b, 200, seed).unwrap();
        prop_assert!(p > 0.0 && p <= 1.0);
    }
}

mod common;

#[test]
fn tags_help_more_with_less_data() {
    use common::*;
    use morphlem::pipeline::{train_joint, TagSource};
    use morphlem::synthetic::{class_corpus, SyntheticConfig};

    let synth = SyntheticConfig {
        sentences: 400,
        stems: 150,
        ..SyntheticConfig::default()
    };
    let train = class_corpus(&synth, 7, 0).unwrap();
    let dev = class_corpus(
        &SyntheticConfig {
            sentences: 60,
            ..synth.clone()
        },
        7,
        1,
    )
    .unwrap();
    let test = class_corpus(
        &SyntheticConfig {
            sentences: 100,
            ..synth.clone()
        },
        7,
        2,
    )
    .unwrap();
    let cats = morphlem::data::categorize_tokens(&train, &test);
    let run = |use_tags: bool| {
        let config = synthetic_training(small_tagger(), TagSource::Gold, use_tags);
        learning_curve(&train, &[0.1, 1.0], |part| {
            let m = train_joint(part, Some(&dev), &config)?.model;
            let preds = m.predict_corpus(&test, None, 2)?;
            accuracy_report(&morphlem::pipeline::flat_lemmas(&preds), &test, &cats)
        })
        .unwrap()
    };
    let joint = run(true);
    let ablated = run(false);
    assert_eq!(joint[0].train_sentences, 40);
    assert_eq!(joint[1].train_sentences, 400);
    let gap = |i: usize| joint[i].report.accuracy() - ablated[i].report.accuracy();
    assert!(
        gap(0) > gap(1),
        "gap at 10%: {}, at 100%: {}",
        gap(0),
        gap(1)
    );

    let mut out = Vec::new();
    write_curve_csv(
        &[("joint".into(), joint), ("no-tags".into(), ablated)],
        &mut out,
    )
    .unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(
        text.starts_with("system,fraction,train_sentences,train_tokens,category,accuracy,count\n")
    );
    assert_eq!(text.lines().filter(|l| l.contains(",all,")).count(), 4);
}

#[test]
fn prefix_sizes() {
    assert_eq!(prefix_size(400, 0.1).unwrap(), 40);
    assert_eq!(prefix_size(7, 1.0).unwrap(), 7);
    assert_eq!(prefix_size(9, 0.25).unwrap(), 2);
    assert!(matches!(prefix_size(3, 0.1), Err(Error::Empty(_))));
    assert!(prefix_size(3, 0.0).is_err());
    assert!(prefix_size(3, 1.5).is_err());
}
