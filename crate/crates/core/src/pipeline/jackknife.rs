use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{JointModel, Provenance};
use crate::data::{build_vocab, jackknife_folds, Corpus, MorphTag};
use crate::lemmatizer::{examples_from_corpus, LemmaExample, LemmatizerConfig, LemmatizerModel};
use crate::tagger::{train_tagger_with_vocab, TaggerConfig, TaggerModel, TrainingLog};
use crate::training::{derive_seed, rng_from_seed};
use crate::{Error, Result};

/// Tags the lemmatizer is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TagSource {
    Gold,
    /// Silver tags from `kappa` held-out taggers.
    Jackknife {
        kappa: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JointTrainingConfig {
    pub tagger: TaggerConfig,
    pub lemmatizer: LemmatizerConfig,
    pub source: TagSource,
    pub seed: u64,
    /// Shuffle sentences before cutting folds.
    pub shuffle_folds: bool,
    pub treebank: Option<String>,
}

impl Default for JointTrainingConfig {
    fn default() -> Self {
        JointTrainingConfig {
            tagger: TaggerConfig::default(),
            lemmatizer: LemmatizerConfig::default(),
            source: TagSource::Jackknife { kappa: 10 },
            seed: 1,
            shuffle_folds: false,
            treebank: None,
        }
    }
}

/// A trained joint model with the records of how it was trained.
#[derive(Debug, Clone)]
pub struct TrainedJoint {
    pub model: JointModel,
    /// The training corpus with the tags the lemmatizer was trained on.
    pub silver: Corpus,
    pub tagger_log: TrainingLog,
    pub lemmatizer_log: TrainingLog,
    pub fold_logs: Vec<TrainingLog>,
}

/// Replaces every tag of `corpus` by the prediction of a tagger that did not
/// see the sentence. `tag_fold(i, train, heldout)` trains on `train` and
/// returns one tag per token of `heldout`; folds run in parallel.
pub fn jackknife_silver<F>(
    corpus: &Corpus,
    kappa: usize,
    shuffle_seed: Option<u64>,
    tag_fold: F,
) -> Result<Corpus>
where
    F: Fn(usize, &Corpus, &Corpus) -> Result<Vec<Vec<MorphTag>>> + Sync,
{
    let folds = jackknife_folds(corpus, kappa, shuffle_seed)?;
    let tagged: Vec<Vec<Vec<MorphTag>>> = folds
        .par_iter()
        .enumerate()
        .map(|(i, f)| tag_fold(i, &corpus.select(&f.train), &corpus.select(&f.heldout)))
        .collect::<Result<_>>()?;
    let mut silver = corpus.clone();
    for (fold, tags) in folds.iter().zip(tagged) {
        if tags.len() != fold.heldout.len() {
            return Err(Error::LengthMismatch {
                what: "silver sentences",
                left: tags.len(),
                right: fold.heldout.len(),
            });
        }
        for (&s, sent_tags) in fold.heldout.iter().zip(tags) {
            let sentence = &mut silver.sentences[s];
            if sent_tags.len() != sentence.tokens.len() {
                return Err(Error::LengthMismatch {
                    what: "silver tags",
                    left: sent_tags.len(),
                    right: sentence.tokens.len(),
                });
            }
            for (t, m) in sentence.tokens.iter_mut().zip(sent_tags) {
                t.tag = Some(m);
            }
        }
    }
    Ok(silver)
}

fn predicted_examples(tagger: &TaggerModel, corpus: &Corpus) -> Result<Vec<LemmaExample>> {
    let tagged: Vec<Vec<MorphTag>> = corpus
        .sentences
        .par_iter()
        .map(|s| tagger.greedy_tags(&s.forms().collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (s, tags) in corpus.sentences.iter().zip(tagged) {
        for (t, m) in s.tokens.iter().zip(tags) {
            if let Some(l) = &t.lemma {
                out.push(LemmaExample {
                    form: t.form.clone(),
                    tag: m,
                    lemma: l.clone(),
                });
            }
        }
    }
    Ok(out)
}

/// Trains the joint model; the tagger learns from the tags of `corpus`.
pub fn train_joint(
    corpus: &Corpus,
    dev: Option<&Corpus>,
    config: &JointTrainingConfig,
) -> Result<TrainedJoint> {
    train_joint_with_tagger_data(corpus, corpus, dev, config)
}

/// Like [`train_joint`], but taggers learn from the tags of
/// `tagger_corpus`, which must hold the same sentences as `corpus` (for
/// example with noisier annotation). Gold-tag lemmatizer training uses the
/// tags of `corpus`.
///
/// With [`TagSource::Jackknife`] every sentence is tagged by a tagger trained
/// on the other folds, and the lemmatizer learns from those silver tags. The
/// returned tagger is always trained on the whole corpus, and dev-set tags
/// used for the lemmatizer's learning-rate schedule are its predictions.
pub fn train_joint_with_tagger_data(
    corpus: &Corpus,
    tagger_corpus: &Corpus,
    dev: Option<&Corpus>,
    config: &JointTrainingConfig,
) -> Result<TrainedJoint> {
    if corpus.len() != tagger_corpus.len() {
        return Err(Error::LengthMismatch {
            what: "tagger corpus",
            left: tagger_corpus.len(),
            right: corpus.len(),
        });
    }
    let (alphabet, mut tags) = build_vocab(corpus)?;
    for t in tagger_corpus.tokens().filter_map(|t| t.tag.as_ref()) {
        tags.insert(t.clone());
    }
    if tags.is_empty() {
        return Err(Error::Empty("tag inventory"));
    }
    let seed = config.seed;

    let mut fold_logs = Vec::new();
    let (silver, kappa) = match config.source {
        TagSource::Gold => (corpus.clone(), None),
        TagSource::Jackknife { kappa } => {
            let shuffle = config.shuffle_folds.then(|| derive_seed(seed, 3));
            let logs = std::sync::Mutex::new(Vec::new());
            let silver_tags =
                jackknife_silver(tagger_corpus, kappa, shuffle, |i, train, heldout| {
                    let (tagger, log) = train_tagger_with_vocab(
                        train,
                        None,
                        config.tagger.clone(),
                        alphabet.clone(),
                        tags.clone(),
                        derive_seed(seed, 100 + i as u64),
                    )?;
                    logs.lock().expect("fold log lock").push((i, log));
                    heldout
                        .sentences
                        .iter()
                        .map(|s| tagger.greedy_tags(&s.forms().collect::<Vec<_>>()))
                        .collect()
                })?;
            let mut logs = logs.into_inner().expect("fold log lock");
            logs.sort_by_key(|(i, _)| *i);
            fold_logs = logs.into_iter().map(|(_, l)| l).collect();
            let mut silver = corpus.clone();
            for (s, t) in silver.sentences.iter_mut().zip(&silver_tags.sentences) {
                for (tok, st) in s.tokens.iter_mut().zip(&t.tokens) {
                    tok.tag = st.tag.clone();
                }
            }
            (silver, Some(kappa))
        }
    };

    let (tagger, tagger_log) = train_tagger_with_vocab(
        tagger_corpus,
        dev,
        config.tagger.clone(),
        alphabet.clone(),
        tags.clone(),
        seed,
    )?;

    let dev_examples = dev.map(|d| predicted_examples(&tagger, d)).transpose()?;
    let examples = examples_from_corpus(&silver);
    if examples.is_empty() {
        return Err(Error::Empty("lemmatizer training set"));
    }
    let mut lemmatizer = LemmatizerModel::for_tags(
        config.lemmatizer.clone(),
        alphabet,
        &tags,
        derive_seed(seed, 4),
    )?;
    let mut rng = rng_from_seed(derive_seed(seed, 5));
    let lemmatizer_log = lemmatizer.fit(&examples, dev_examples.as_deref(), &mut rng)?;

    let provenance = Provenance {
        treebank: config.treebank.clone(),
        seed,
        kappa,
        tagger_config: Some(config.tagger.clone()),
        lemmatizer_config: Some(config.lemmatizer.clone()),
    };
    Ok(TrainedJoint {
        model: JointModel::new(tagger, lemmatizer, provenance)?,
        silver,
        tagger_log,
        lemmatizer_log,
        fold_logs,
    })
}
