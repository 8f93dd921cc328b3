mod common;

use common::*;
use morphlem::data::{Alphabet, MorphTag};
use morphlem::lemmatizer::{lattice, train_lemmatizer, LemmaExample, LemmatizerConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CHARS: [char; 4] = ['a', 'b', 'c', 'd'];

fn noun_sg() -> MorphTag {
    MorphTag::from_pairs([("POS", "NOUN"), ("Number", "Sing")])
}

#[test]
fn six_alignments_for_three_by_two() {
    let e = vec![vec![-0.2, -1.0, -0.7], vec![-2.0, -0.3, -0.9]];
    let s = vec![vec![0.5, -0.4, 1.1], vec![0.0, 0.8, -0.6]];
    let t1 = lattice::transition_log_probs(&s[0], None);
    let mut terms = Vec::new();
    for a1 in 0..3 {
        let t2 = lattice::transition_log_probs(&s[1], Some(a1));
        for a2 in a1..3 {
            terms.push(e[0][a1] + t1[a1] + e[1][a2] + t2[a2]);
        }
    }
    assert_eq!(terms.len(), 6);
    let expected = morphlem_autodiff::ops::logsumexp(&terms);
    let got = lattice::forward(&e, &s).log_likelihood();
    assert!(rel_err(got, expected) < 1e-12, "{got} vs {expected}");
    assert!(rel_err(got, brute_force_log_marginal(&e, &s)) < 1e-12);
}

#[test]
fn forward_matches_enumeration_on_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..40 {
        let m = random_lemmatizer(trial, &CHARS, tiny_config(), 1.0);
        let form = random_string(&mut rng, &CHARS, 1, 4);
        let lemma = random_string(&mut rng, &CHARS, 1, 4);
        let tag = toy_tags().tag(trial as usize % 3).clone();
        let (e, s) = m.step_scores(&form, &tag, &lemma).unwrap();
        let oracle = brute_force_log_marginal(&e, &s);
        let graph = m.forward_marginal(&form, &tag, &lemma).unwrap();
        let plain = m.log_likelihood(&form, &tag, &lemma).unwrap();
        assert!(
            rel_err(graph, oracle) < 1e-10,
            "{form}->{lemma}: {graph} vs {oracle}"
        );
        assert!((graph - plain).abs() < 1e-9);
        assert!(graph < 0.0);
    }
}

#[test]
fn lattice_rows_and_emission_rows() {
    let m = random_lemmatizer(3, &CHARS, tiny_config(), 1.0);
    let lat = m.lattice("abc", &noun_sg(), "ab").unwrap();
    assert_eq!(lat.source_len, 5);
    assert_eq!(lat.target_len(), 3);
    assert!(lat.alpha.iter().flatten().all(|v| *v <= 0.0));
    // summing a step over every output symbol returns the previous mass
    let (_, s) = m.step_scores("abc", &noun_sg(), "ab").unwrap();
    let prev = morphlem_autodiff::ops::logsumexp(&lat.alpha[0]);
    let term = lattice::transition_term(&lat.alpha[0], &s[1]);
    assert!((morphlem_autodiff::ops::logsumexp(&term) - prev).abs() < 1e-12);
}

#[test]
fn tag_embedding_is_additive_and_order_free() {
    let m = random_lemmatizer(5, &CHARS, tiny_config(), 1.0);
    assert!(m.tag_embed(&MorphTag::new()).iter().all(|v| *v == 0.0));
    let a = MorphTag::from_pairs([("POS", "NOUN")]);
    let b = MorphTag::from_pairs([("Number", "Sing")]);
    let ab = MorphTag::from_pairs([("Number", "Sing"), ("POS", "NOUN")]);
    let ba = MorphTag::from_pairs([("POS", "NOUN"), ("Number", "Sing")]);
    assert_eq!(m.tag_embed(&ab), m.tag_embed(&ba));
    for ((x, y), z) in m
        .tag_embed(&a)
        .iter()
        .zip(m.tag_embed(&b))
        .zip(m.tag_embed(&ab))
    {
        assert!((x + y - z).abs() < 1e-15);
    }
    // unseen attributes share the unknown row
    let u1 = m.tag_embed(&MorphTag::from_pairs([("Case", "Nom")]));
    let u2 = m.tag_embed(&MorphTag::from_pairs([("Case", "Gen")]));
    assert_eq!(u1, u2);
}

fn all_strings(chars: &[char], max: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut layer = vec![String::new()];
    for _ in 0..max {
        layer = layer
            .iter()
            .flat_map(|p| chars.iter().map(move |c| format!("{p}{c}")))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

#[test]
fn output_strings_form_a_sub_distribution() {
    let chars = ['x', 'y'];
    let m = random_lemmatizer(8, &chars, tiny_config(), 1.5);
    let mut last = 0.0;
    for len in 1..=5 {
        let mass: f64 = all_strings(&chars, len)
            .iter()
            .map(|l| m.log_likelihood("xy", &noun_sg(), l).unwrap().exp())
            .sum();
        assert!(mass <= 1.0 + 1e-12 && mass >= last, "L={len}: {mass}");
        last = mass;
    }
}

#[test]
fn wide_beam_equals_exhaustive_argmax() {
    let chars = ['x', 'y'];
    let cfg = LemmatizerConfig {
        extra_length: 2,
        ..tiny_config()
    };
    for seed in 0..10 {
        let m = random_lemmatizer(100 + seed, &chars, cfg.clone(), 2.0);
        let form = if seed % 2 == 0 { "x" } else { "y" };
        assert_eq!(m.length_cap(form), 3);
        let (best, best_ll) = all_strings(&chars, 3)
            .into_iter()
            .map(|l| {
                let ll = m.log_likelihood(form, &noun_sg(), &l).unwrap();
                (l, ll)
            })
            .fold((String::new(), f64::NEG_INFINITY), |acc, x| {
                if x.1 > acc.1 {
                    x
                } else {
                    acc
                }
            });
        let d = m.decode_lemma(form, &noun_sg(), 16).unwrap();
        assert_eq!(d.lemma, best);
        assert!((d.log_prob - best_ll).abs() < 1e-12);
    }
}

#[test]
fn wider_beams_never_score_lower() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for seed in 0..15 {
        let m = random_lemmatizer(200 + seed, &CHARS, tiny_config(), 2.0);
        let form = random_string(&mut rng, &CHARS, 1, 5);
        let mut last = f64::NEG_INFINITY;
        for b in 1..=6 {
            let d = m.decode_lemma(&form, &noun_sg(), b).unwrap();
            assert!(d.log_prob >= last);
            assert!(!d.lemma.is_empty());
            assert!(d.lemma.chars().count() <= m.length_cap(&form));
            let rescored = m.log_likelihood(&form, &noun_sg(), &d.lemma).unwrap();
            assert!((rescored - d.log_prob).abs() < 1e-9);
            last = d.log_prob;
        }
    }
    let m = random_lemmatizer(1, &CHARS, tiny_config(), 1.0);
    assert!(m.decode_lemma("ab", &noun_sg(), 0).is_err());
}

#[test]
fn marginal_gradient_matches_finite_differences() {
    for seed in 0..3 {
        let err = lemmatizer_gradient_error(300 + seed);
        assert!(err < 1e-6, "seed {seed}: {err}");
    }
}

#[test]
fn copy_task_loss_decreases() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let chars = ['a', 'b', 'c', 'd', 'e'];
    let examples: Vec<LemmaExample> = (0..50)
        .map(|_| {
            let w = random_string(&mut rng, &chars, 2, 5);
            LemmaExample {
                form: w.clone(),
                tag: MorphTag::new(),
                lemma: w,
            }
        })
        .collect();
    let alphabet: Alphabet = chars.to_vec().into();
    let cfg = LemmatizerConfig {
        encoder_layers: 1,
        encoder_hidden: 16,
        decoder_hidden: 16,
        char_dim: 8,
        tag_dim: 2,
        emission_hidden: 16,
        dropout: 0.0,
        lr: 0.01,
        batch_size: 5,
        max_epochs: 60,
        ..LemmatizerConfig::default()
    };
    let (m, log) = train_lemmatizer(&examples, None, cfg, alphabet, &toy_tags(), 3).unwrap();
    let losses: Vec<f64> = log.epochs.iter().map(|e| e.loss).collect();
    assert_eq!(losses.len(), 60);
    assert!(losses[..4].windows(2).all(|w| w[1] < w[0]), "{losses:?}");
    let acc = m.accuracy(&examples).unwrap();
    assert!(acc >= 0.9, "copy accuracy {acc}, losses {losses:?}");
}

#[test]
fn dev_schedule_restores_best_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let examples: Vec<LemmaExample> = (0..20)
        .map(|_| {
            let w = random_string(&mut rng, &CHARS, 2, 4);
            LemmaExample {
                form: w.clone(),
                tag: noun_sg(),
                lemma: w,
            }
        })
        .collect();
    let cfg = LemmatizerConfig {
        lr: 0.05,
        max_epochs: 40,
        min_lr: 1e-3,
        batch_size: 4,
        ..tiny_config()
    };
    let alphabet: Alphabet = CHARS.to_vec().into();
    let (m, log) = train_lemmatizer(
        &examples,
        Some(&examples[..10]),
        cfg,
        alphabet,
        &toy_tags(),
        9,
    )
    .unwrap();
    let best = log
        .epochs
        .iter()
        .filter_map(|e| e.dev_log_likelihood)
        .fold(f64::NEG_INFINITY, f64::max);
    let final_ll = m.mean_log_likelihood(&examples[..10]).unwrap();
    assert!((final_ll - best).abs() < 1e-9, "{final_ll} vs {best}");
    let lrs: Vec<f64> = log.epochs.iter().map(|e| e.lr).collect();
    assert!(lrs.windows(2).all(|w| w[1] <= w[0]));
}
