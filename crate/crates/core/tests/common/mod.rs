#![allow(dead_code)]

use morphlem::data::{Alphabet, Corpus, MorphTag, TagInventory};
use morphlem::eval::correctness;
use morphlem::lemmatizer::{LemmaExample, LemmatizerConfig, LemmatizerModel};
use morphlem::pipeline::{flat_lemmas, JointModel, JointTrainingConfig, Provenance, TagSource};
use morphlem::tagger::{TaggerConfig, TaggerModel};
use morphlem_autodiff::{gradcheck, Graph, Mode, ParamSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sum over every non-decreasing alignment, in probability space, with
/// transitions normalised directly over the allowed positions.
pub fn brute_force_log_marginal(emissions: &[Vec<f64>], scores: &[Vec<f64>]) -> f64 {
    let t = emissions.len();
    let n = emissions[0].len();
    let mut total = 0.0;
    let mut path = vec![0usize; t];
    loop {
        if path.windows(2).all(|w| w[0] <= w[1]) {
            let mut p = 1.0;
            let mut prev = 0;
            for j in 0..t {
                let i = path[j];
                let z: f64 = scores[j][prev..].iter().map(|s| s.exp()).sum();
                p *= emissions[j][i].exp() * scores[j][i].exp() / z;
                prev = i;
            }
            total += p;
        }
        let mut k = t;
        loop {
            if k == 0 {
                return total.ln();
            }
            k -= 1;
            path[k] += 1;
            if path[k] < n {
                break;
            }
            path[k] = 0;
        }
    }
}

pub fn tiny_config() -> LemmatizerConfig {
    LemmatizerConfig {
        encoder_layers: 2,
        encoder_hidden: 3,
        decoder_hidden: 4,
        char_dim: 3,
        tag_dim: 2,
        emission_hidden: 4,
        dropout: 0.0,
        ..LemmatizerConfig::default()
    }
}

pub fn random_string(rng: &mut impl Rng, chars: &[char], min: usize, max: usize) -> String {
    let n = rng.gen_range(min..=max);
    (0..n)
        .map(|_| chars[rng.gen_range(0..chars.len())])
        .collect()
}

pub fn toy_tags() -> TagInventory {
    vec![
        MorphTag::from_pairs([("POS", "NOUN"), ("Number", "Sing")]),
        MorphTag::from_pairs([("POS", "NOUN"), ("Number", "Plur")]),
        MorphTag::from_pairs([("POS", "VERB")]),
    ]
    .into()
}

fn randomize(params: &mut ParamSet, seed: u64, scale: f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<_> = params.ids().collect();
    for id in ids {
        for v in params.get_mut(id).data_mut() {
            *v = rng.gen_range(-scale..scale);
        }
    }
}

/// A lemmatizer with weights drawn from `U[-scale, scale]`.
pub fn random_lemmatizer(
    seed: u64,
    chars: &[char],
    config: LemmatizerConfig,
    scale: f64,
) -> LemmatizerModel {
    let alphabet: Alphabet = chars.to_vec().into();
    let mut m = LemmatizerModel::for_tags(config, alphabet, &toy_tags(), seed).unwrap();
    randomize(&mut m.params, seed ^ 0xABCD, scale);
    m
}

/// Disagreement relative to the oracle's magnitude.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

pub fn tiny_tagger_config() -> TaggerConfig {
    TaggerConfig {
        char_dim: 4,
        char_hidden: 3,
        linear_dim: 4,
        word_layers: 1,
        word_hidden: 3,
        dropout: 0.0,
        ..TaggerConfig::default()
    }
}

/// Joint model over `chars` and the three toy tags with random weights.
pub fn random_joint(seed: u64, chars: &[char], scale: f64) -> JointModel {
    let alphabet: Alphabet = chars.to_vec().into();
    let mut tagger = TaggerModel::new(tiny_tagger_config(), alphabet, toy_tags(), seed).unwrap();
    randomize(&mut tagger.params, seed ^ 0x5151, scale);
    let lemmatizer = random_lemmatizer(seed, chars, tiny_config(), scale);
    JointModel::new(tagger, lemmatizer, Provenance::default()).unwrap()
}

/// Norm-wise relative error between backprop and central differences for
/// the tagger's sentence loss on a random two-layer model.
pub fn tagger_gradient_error(seed: u64) -> f64 {
    let config = TaggerConfig {
        word_layers: 2,
        ..tiny_tagger_config()
    };
    let alphabet: Alphabet = vec!['a', 'b', 'c'].into();
    let mut m = TaggerModel::new(config, alphabet, toy_tags(), seed).unwrap();
    randomize(&mut m.params, seed ^ 0x7777, 0.8);
    let forms = ["ab", "cab", "b"];
    let gold = [Some(0), None, Some(2)];
    let loss_at = |ps: &ParamSet| {
        let mut g = Graph::new(ps);
        let mut r = morphlem::training::rng_from_seed(0);
        let n = m
            .sentence_loss(&mut g, &forms, &gold, Mode::Inference, &mut r)
            .unwrap()
            .unwrap();
        (g.value(n).item(), g.backward(n).unwrap())
    };
    let (_, analytic) = loss_at(&m.params);
    let numeric = gradcheck::finite_difference(&m.params, 1e-6, |ps| loss_at(ps).0);
    gradcheck::relative_error(&m.params, &analytic, &numeric)
}

/// Same check for the lemmatizer's negative log marginal likelihood.
pub fn lemmatizer_gradient_error(seed: u64) -> f64 {
    let m = random_lemmatizer(seed, &['a', 'b', 'd'], tiny_config(), 0.8);
    let ex = LemmaExample {
        form: "abd".into(),
        tag: toy_tags().tag(0).clone(),
        lemma: "bd".into(),
    };
    let loss_at = |ps: &ParamSet| {
        let mut g = Graph::new(ps);
        let mut r = morphlem::training::rng_from_seed(0);
        let n = m.loss_node(&mut g, &ex, Mode::Inference, &mut r).unwrap();
        (g.value(n).item(), g.backward(n).unwrap())
    };
    let (_, analytic) = loss_at(&m.params);
    let numeric = gradcheck::finite_difference(&m.params, 1e-6, |ps| loss_at(ps).0);
    gradcheck::relative_error(&m.params, &analytic, &numeric)
}

/// Crunching over every tag picks the candidate with the largest
/// `Σ_m p(ℓ | m, w) p(m | w)`, computed here directly in probability space.
pub fn crunch_matches_full_sum(m: &JointModel, forms: &[&str], beam: usize) -> bool {
    let k = m.tagger.tags.len();
    let dists = m.tagger.tag_distributions(forms).unwrap();
    let pred = m.crunch_decode(forms, k, beam).unwrap();
    forms
        .iter()
        .zip(&dists)
        .zip(&pred.lemmas)
        .all(|((w, d), got)| {
            let cands = m.crunch_candidates(w, d, k, beam).unwrap();
            let mut best: Option<(&str, f64)> = None;
            for (l, score) in &cands.candidates {
                let direct: f64 = (0..k)
                    .map(|t| {
                        m.lemmatizer
                            .log_likelihood(w, m.tagger.tags.tag(t), l)
                            .unwrap()
                            .exp()
                            * d[t]
                    })
                    .sum();
                if (direct.ln() - score).abs() > 1e-10 {
                    return false;
                }
                if best.is_none_or(|b| direct > b.1) {
                    best = Some((l, direct));
                }
            }
            best.is_some_and(|b| b.0 == got)
        })
}

pub fn lemma_accuracy(model: &JointModel, corpus: &Corpus, crunch: Option<usize>) -> f64 {
    let preds = model.predict_corpus(corpus, crunch, 2).unwrap();
    let ok = correctness(&flat_lemmas(&preds), corpus).unwrap();
    ok.iter().filter(|&&b| b).count() as f64 / ok.len() as f64
}

/// Tagger used for the synthetic-corpus experiments.
pub fn small_tagger() -> TaggerConfig {
    TaggerConfig {
        char_dim: 12,
        char_hidden: 12,
        linear_dim: 12,
        word_layers: 1,
        word_hidden: 12,
        dropout: 0.1,
        epochs: 15,
        lr: 0.005,
        ..TaggerConfig::default()
    }
}

/// The same network trained briefly at the default rate.
pub fn weak_tagger() -> TaggerConfig {
    TaggerConfig {
        epochs: 4,
        lr: 0.001,
        ..small_tagger()
    }
}

pub fn small_lemmatizer() -> LemmatizerConfig {
    LemmatizerConfig {
        encoder_layers: 1,
        encoder_hidden: 16,
        decoder_hidden: 16,
        char_dim: 8,
        tag_dim: 8,
        emission_hidden: 16,
        dropout: 0.1,
        lr: 0.01,
        batch_size: 10,
        max_epochs: 20,
        ..LemmatizerConfig::default()
    }
}

pub fn synthetic_training(
    tagger: TaggerConfig,
    source: TagSource,
    use_tags: bool,
) -> JointTrainingConfig {
    JointTrainingConfig {
        tagger,
        lemmatizer: LemmatizerConfig {
            use_tags,
            ..small_lemmatizer()
        },
        source,
        seed: 11,
        ..JointTrainingConfig::default()
    }
}
