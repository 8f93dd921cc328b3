mod common;

use morphlem::data::{build_vocab, Corpus, MorphTag, Sentence, Token};
use morphlem::tagger::{train_tagger, TaggerConfig, TaggerModel};
use morphlem_autodiff::ops;

fn tag(pos: &str) -> MorphTag {
    MorphTag::from_pairs([("POS", pos)])
}

fn toy_corpus() -> Corpus {
    let rows: [&[(&str, &str)]; 5] = [
        &[("the", "DET"), ("dog", "NOUN"), ("runs", "VERB")],
        &[("a", "DET"), ("cat", "NOUN"), ("sleeps", "VERB")],
        &[("the", "DET"), ("cat", "NOUN"), ("runs", "VERB")],
        &[("a", "DET"), ("dog", "NOUN"), ("sleeps", "VERB")],
        &[("the", "DET"), ("bird", "NOUN"), ("sings", "VERB")],
    ];
    Corpus::new(
        rows.iter()
            .map(|r| {
                Sentence::from_tokens(
                    r.iter()
                        .map(|(f, p)| Token::new(*f, None, Some(tag(p))))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn small_config() -> TaggerConfig {
    TaggerConfig {
        char_dim: 12,
        char_hidden: 12,
        linear_dim: 12,
        word_layers: 1,
        word_hidden: 12,
        dropout: 0.0,
        epochs: 30,
        lr: 0.01,
        ..TaggerConfig::default()
    }
}

#[test]
fn toy_corpus_is_fit_perfectly() {
    let c = toy_corpus();
    let (model, log) = train_tagger(&c, Some(&c), small_config(), 7).unwrap();
    assert_eq!(model.accuracy(&c).unwrap(), 1.0);
    assert!(
        log.epochs[0].loss < (3f64).ln(),
        "first epoch loss {}",
        log.epochs[0].loss
    );
    assert!(log.epochs.last().unwrap().loss < log.epochs[0].loss);
}

#[test]
fn zero_parameters_give_zero_embedding_and_uniform_tags() {
    let c = toy_corpus();
    let (a, t) = build_vocab(&c).unwrap();
    let mut model = TaggerModel::new(small_config(), a, t, 1).unwrap();
    let ids: Vec<_> = model.params.ids().collect();
    for id in ids {
        model.params.get_mut(id).data_mut().fill(0.0);
    }
    let u = model.embed_word("dog").unwrap();
    assert_eq!(u.len(), 24);
    assert!(u.data().iter().all(|&v| v == 0.0));
    for d in model.tag_distributions(&["the", "dog"]).unwrap() {
        for p in d {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }
}

#[test]
fn embedding_matches_manual_unroll() {
    let c = toy_corpus();
    let (a, t) = build_vocab(&c).unwrap();
    let cfg = TaggerConfig {
        char_dim: 3,
        char_hidden: 2,
        ..small_config()
    };
    let model = TaggerModel::new(cfg, a.clone(), t, 3).unwrap();
    let p = &model.params;
    let emb = p.get(p.id("tagger.char_emb").unwrap());
    let xs: Vec<Vec<f64>> = a
        .encode("do")
        .into_iter()
        .map(|i| emb.row(i).to_vec())
        .collect();
    let run = |prefix: &str, seq: &[Vec<f64>]| {
        let wi = p.get(p.id(&format!("{prefix}.w_ih")).unwrap());
        let wh = p.get(p.id(&format!("{prefix}.w_hh")).unwrap());
        let b = p.get(p.id(&format!("{prefix}.bias")).unwrap());
        let (mut h, mut cell) = (vec![0.0; 2], vec![0.0; 2]);
        for x in seq {
            let mut z = ops::matvec(wi, x);
            for (zi, (v, bi)) in z.iter_mut().zip(ops::matvec(wh, &h).iter().zip(b.data())) {
                *zi += v + bi;
            }
            for k in 0..2 {
                let i = ops::sigmoid(z[k]);
                let f = ops::sigmoid(z[2 + k]);
                let g = z[4 + k].tanh();
                let o = ops::sigmoid(z[6 + k]);
                cell[k] = f * cell[k] + i * g;
                h[k] = o * cell[k].tanh();
            }
        }
        h
    };
    let fwd = run("tagger.char_fwd", &xs);
    let rev: Vec<Vec<f64>> = xs.iter().rev().cloned().collect();
    let bwd = run("tagger.char_bwd", &rev);
    let u = model.embed_word("do").unwrap();
    let expected: Vec<f64> = fwd.into_iter().chain(bwd).collect();
    for (x, y) in u.data().iter().zip(&expected) {
        assert!((x - y).abs() < 1e-12, "{x} vs {y}");
    }
}

#[test]
fn k_best_is_prefix_consistent_and_checks_k() {
    let c = toy_corpus();
    let (a, t) = build_vocab(&c).unwrap();
    let model = TaggerModel::new(small_config(), a, t, 5).unwrap();
    let forms = ["the", "bird", "sings"];
    let k3 = model.k_best(&forms, 3).unwrap();
    let k2 = model.k_best(&forms, 2).unwrap();
    let greedy = model.greedy_tag(&forms).unwrap();
    for ((a, b), g) in k3.iter().zip(&k2).zip(&greedy) {
        assert_eq!(&a[..2], &b[..]);
        assert_eq!(a[0].0, *g);
        assert!(a.windows(2).all(|w| w[0].1 >= w[1].1));
    }
    assert!(model.k_best(&forms, 0).is_err());
    assert!(model.k_best(&forms, 4).is_err());
}

#[test]
fn distributions_sum_to_one() {
    let c = toy_corpus();
    let (a, t) = build_vocab(&c).unwrap();
    let model = TaggerModel::new(small_config(), a, t, 9).unwrap();
    for d in model.tag_distributions(&["zzz", "the"]).unwrap() {
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn loss_gradient_matches_finite_differences() {
    for seed in 0..3 {
        let err = common::tagger_gradient_error(seed);
        assert!(err < 1e-6, "seed {seed}: {err}");
    }
}

proptest::proptest! {
    #[test]
    fn greedy_is_argmax_and_first_of_k_best(seed in 0u64..500, words in proptest::collection::vec("[abc]{1,4}", 1..4)) {
        let alphabet: morphlem::data::Alphabet = vec!['a', 'b', 'c'].into();
        let m = TaggerModel::new(common::tiny_tagger_config(), alphabet, common::toy_tags(), seed).unwrap();
        let forms: Vec<&str> = words.iter().map(String::as_str).collect();
        let dists = m.tag_distributions(&forms).unwrap();
        let greedy = m.greedy_tag(&forms).unwrap();
        let best = m.k_best(&forms, 3).unwrap();
        for ((d, g), b) in dists.iter().zip(&greedy).zip(&best) {
            proptest::prop_assert_eq!(*g, ops::argmax(d));
            proptest::prop_assert_eq!(b[0].0, *g);
            proptest::prop_assert!(b.windows(2).all(|w| w[0].1 >= w[1].1));
        }
    }
}
