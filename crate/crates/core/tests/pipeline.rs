mod common;

use std::collections::HashSet;

use common::*;
use morphlem::data::{Corpus, MorphTag, Sentence, Token};
use morphlem::lemmatizer::LemmatizerConfig;
use morphlem::pipeline::{
    crunch_score, jackknife_silver, load_model, save_model, train_joint, JointModel,
    JointTrainingConfig, ParameterStore, TagSource,
};
use morphlem::tagger::TaggerConfig;
use morphlem::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CHARS: [char; 4] = ['a', 'b', 'c', 'd'];

fn tagged_corpus(n: usize) -> Corpus {
    let tags = toy_tags();
    Corpus::new(
        (0..n)
            .map(|i| {
                Sentence::from_tokens(vec![
                    Token::new(format!("s{i}"), Some("s"), Some(tags.tag(i % 3).clone())),
                    Token::new("ab", Some("a"), Some(tags.tag((i + 1) % 3).clone())),
                ])
            })
            .collect(),
    )
}

#[test]
fn oracle_tagger_makes_silver_equal_gold() {
    let corpus = tagged_corpus(23);
    let silver = jackknife_silver(&corpus, 5, None, |_, train, heldout| {
        let seen: HashSet<&str> = train
            .tokens()
            .map(|t| t.form.as_str())
            .filter(|f| f.starts_with('s'))
            .collect();
        for s in &heldout.sentences {
            assert!(
                !seen.contains(s.tokens[0].form.as_str()),
                "held-out sentence in training part"
            );
        }
        assert_eq!(train.len() + heldout.len(), 23);
        Ok(heldout
            .sentences
            .iter()
            .map(|s| s.tokens.iter().map(|t| t.tag.clone().unwrap()).collect())
            .collect())
    })
    .unwrap();
    assert_eq!(silver, corpus);
}

#[test]
fn every_token_gets_exactly_one_silver_tag() {
    let corpus = tagged_corpus(10);
    let marker = MorphTag::from_pairs([("POS", "X")]);
    let silver = jackknife_silver(&corpus, 3, Some(4), |_, _, heldout| {
        Ok(heldout
            .sentences
            .iter()
            .map(|s| vec![marker.clone(); s.tokens.len()])
            .collect())
    })
    .unwrap();
    assert!(silver.tokens().all(|t| t.tag.as_ref() == Some(&marker)));
    assert!(jackknife_silver(&corpus, 11, None, |_, _, _| Ok(Vec::new())).is_err());
}

#[test]
fn crunch_arithmetic() {
    let s = crunch_score(&[0.8f64.ln(), 0.2f64.ln()], &[0.6, 0.4]);
    assert!((s.exp() - 0.56).abs() < 1e-15);
    let alt = crunch_score(&[0.1f64.ln(), 0.7f64.ln()], &[0.6, 0.4]);
    assert!((alt.exp() - 0.34).abs() < 1e-15);
}

fn random_sentence(rng: &mut ChaCha8Rng) -> Vec<String> {
    use rand::Rng;
    let n = rng.gen_range(1..=3);
    (0..n).map(|_| random_string(rng, &CHARS, 1, 3)).collect()
}

#[test]
fn crunching_with_one_tag_is_greedy() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..10 {
        let m = random_joint(seed, &CHARS, 1.5);
        let words = random_sentence(&mut rng);
        let forms: Vec<&str> = words.iter().map(String::as_str).collect();
        let g = m.greedy_joint_decode(&forms, 3).unwrap();
        let c = m.crunch_decode(&forms, 1, 3).unwrap();
        assert_eq!(g, c);
        assert_eq!(g, m.greedy_joint_decode(&forms, 3).unwrap());
    }
}

#[test]
fn crunching_over_all_tags_is_the_full_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..10 {
        let m = random_joint(50 + seed, &CHARS, 1.5);
        let words = random_sentence(&mut rng);
        let forms: Vec<&str> = words.iter().map(String::as_str).collect();
        assert!(crunch_matches_full_sum(&m, &forms, 2), "{forms:?}");
    }
    let m = random_joint(1, &CHARS, 1.0);
    assert!(matches!(
        m.crunch_decode(&["a"], 4, 2),
        Err(Error::OutOfRange { .. })
    ));
    assert!(m.crunch_decode(&["a"], 0, 2).is_err());
}

fn model_bytes(m: &JointModel) -> Vec<u8> {
    m.to_store().to_bytes().unwrap()
}

#[test]
fn store_round_trip_is_bit_exact() {
    let m = random_joint(7, &CHARS, 1.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    save_model(&m, &path).unwrap();
    let back = load_model(&path).unwrap();
    for (a, b) in m.tagger.params.iter().zip(back.tagger.params.iter()) {
        assert_eq!(a.1, b.1);
        assert!(a
            .2
            .data()
            .iter()
            .zip(b.2.data())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    assert_eq!(m.lemmatizer.params, back.lemmatizer.params);
    let forms = ["abc", "d", "ca"];
    assert_eq!(
        m.crunch_decode(&forms, 2, 3).unwrap(),
        back.crunch_decode(&forms, 2, 3).unwrap()
    );
    assert_eq!(model_bytes(&m), model_bytes(&back));
}

#[test]
fn store_errors() {
    let m = random_joint(9, &CHARS, 1.0);
    let bytes = model_bytes(&m);

    let mut v = bytes.clone();
    v[8] = 99;
    assert!(matches!(
        ParameterStore::from_bytes(&v),
        Err(Error::Version {
            found: 99,
            expected: 1
        })
    ));

    let cut = &bytes[..bytes.len() - 8];
    assert!(matches!(
        ParameterStore::from_bytes(cut),
        Err(Error::LengthMismatch { .. })
    ));

    assert!(matches!(
        ParameterStore::from_bytes(b"NOTAMODELFILE......."),
        Err(Error::Format(_))
    ));

    let mut store = m.to_store();
    store.arrays.pop();
    let err = JointModel::from_store(store).unwrap_err();
    assert!(err.to_string().contains("missing entry"), "{err}");

    let mut store = m.to_store();
    store
        .arrays
        .push(("extra.w".into(), morphlem_autodiff::Array::zeros(&[2])));
    let err = JointModel::from_store(store).unwrap_err();
    assert!(
        err.to_string().contains("unexpected entry extra.w"),
        "{err}"
    );

    let mut store = m.to_store();
    store.arrays[0].1 = morphlem_autodiff::Array::zeros(&[1]);
    assert!(JointModel::from_store(store).is_err());
}

#[test]
fn tiny_end_to_end_training() {
    let corpus = tagged_corpus(12);
    let config = JointTrainingConfig {
        tagger: TaggerConfig {
            epochs: 2,
            ..tiny_tagger_config()
        },
        lemmatizer: LemmatizerConfig {
            max_epochs: 2,
            ..tiny_config()
        },
        source: TagSource::Jackknife { kappa: 3 },
        seed: 5,
        ..JointTrainingConfig::default()
    };
    let run = train_joint(&corpus, Some(&corpus.prefix(3)), &config).unwrap();
    assert_eq!(run.fold_logs.len(), 3);
    assert_eq!(run.silver.token_count(), corpus.token_count());
    assert!(run.silver.tokens().all(|t| t.tag.is_some()));
    assert_eq!(run.tagger_log.epochs.len(), 2);
    assert_eq!(run.model.provenance.kappa, Some(3));
    let again = train_joint(&corpus, Some(&corpus.prefix(3)), &config).unwrap();
    assert_eq!(again.model.lemmatizer.params, run.model.lemmatizer.params);
    assert_eq!(again.model.tagger.params, run.model.tagger.params);
}
