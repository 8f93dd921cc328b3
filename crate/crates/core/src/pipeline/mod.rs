//! Joint model orchestration: jackknifed training, greedy and crunching
//! decoding, the learning-rate schedule and model files.

mod jackknife;
mod schedule;
mod store;

use morphlem_autodiff::ops;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use jackknife::{
    jackknife_silver, train_joint, train_joint_with_tagger_data, JointTrainingConfig, TagSource,
    TrainedJoint,
};
pub use schedule::{schedule_step, ScheduleOutcome, ScheduleState};
pub use store::{load_model, save_model, ParameterStore, StoreEntry, FORMAT_VERSION};

use crate::data::{Corpus, MorphTag};
use crate::lemmatizer::{LemmatizerConfig, LemmatizerModel};
use crate::tagger::{top_k, TaggerConfig, TaggerModel};
use crate::{Error, Result};

/// Where a model came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub treebank: Option<String>,
    pub seed: u64,
    /// Number of jackknife folds, `None` for gold-tag training.
    pub kappa: Option<usize>,
    pub tagger_config: Option<TaggerConfig>,
    pub lemmatizer_config: Option<LemmatizerConfig>,
}

#[derive(Debug, Clone)]
pub struct JointModel {
    pub tagger: TaggerModel,
    pub lemmatizer: LemmatizerModel,
    pub provenance: Provenance,
}

/// Predicted tag and lemma for every word of a sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePrediction {
    pub tags: Vec<MorphTag>,
    pub lemmas: Vec<String>,
}

/// Candidate lemmata of one token with their crunching scores
/// `log Σ_{m ∈ K} p(ℓ | m, w) p(m | w)`, in first-seen order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrunchCandidates {
    pub candidates: Vec<(String, f64)>,
}

impl CrunchCandidates {
    /// Highest-scoring candidate; ties go to the earliest one.
    pub fn best(&self) -> &str {
        let mut best = 0;
        for (i, c) in self.candidates.iter().enumerate() {
            if c.1 > self.candidates[best].1 {
                best = i;
            }
        }
        &self.candidates[best].0
    }
}

impl JointModel {
    pub fn new(
        tagger: TaggerModel,
        lemmatizer: LemmatizerModel,
        provenance: Provenance,
    ) -> Result<Self> {
        if tagger.alphabet != lemmatizer.alphabet {
            return Err(Error::Config(
                "tagger and lemmatizer alphabets differ".into(),
            ));
        }
        Ok(JointModel {
            tagger,
            lemmatizer,
            provenance,
        })
    }

    /// Greedy tags, then the beam-decoded lemma of each word under its tag.
    pub fn greedy_joint_decode(&self, forms: &[&str], beam: usize) -> Result<SentencePrediction> {
        let tags = self.tagger.greedy_tags(forms)?;
        let lemmas = forms
            .par_iter()
            .zip(&tags)
            .map(|(w, m)| Ok(self.lemmatizer.decode_lemma(w, m, beam)?.lemma))
            .collect::<Result<_>>()?;
        Ok(SentencePrediction { tags, lemmas })
    }

    /// Candidates for one word given its tag distribution.
    pub fn crunch_candidates(
        &self,
        form: &str,
        dist: &[f64],
        k: usize,
        beam: usize,
    ) -> Result<CrunchCandidates> {
        let kbest = top_k(dist, k);
        let mut lemmas: Vec<String> = Vec::new();
        for &(t, _) in &kbest {
            let l = self
                .lemmatizer
                .decode_lemma(form, self.tagger.tags.tag(t), beam)?
                .lemma;
            if !lemmas.contains(&l) {
                lemmas.push(l);
            }
        }
        let candidates = lemmas
            .into_iter()
            .map(|l| {
                let lls = kbest
                    .iter()
                    .map(|&(t, _)| {
                        self.lemmatizer
                            .log_likelihood(form, self.tagger.tags.tag(t), &l)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let probs: Vec<f64> = kbest.iter().map(|&(_, p)| p).collect();
                Ok((l, crunch_score(&lls, &probs)))
            })
            .collect::<Result<_>>()?;
        Ok(CrunchCandidates { candidates })
    }

    /// Crunching: per word, the candidate lemma maximising the tag-weighted
    /// sum of lemma probabilities over the `k` best tags. Tags are greedy.
    pub fn crunch_decode(
        &self,
        forms: &[&str],
        k: usize,
        beam: usize,
    ) -> Result<SentencePrediction> {
        let n_tags = self.tagger.tags.len();
        if k < 1 || k > n_tags {
            return Err(Error::OutOfRange {
                what: "k",
                value: k,
                min: 1,
                max: n_tags,
            });
        }
        let dists = self.tagger.tag_distributions(forms)?;
        let tags = dists
            .iter()
            .map(|d| self.tagger.tags.tag(ops::argmax(d)).clone())
            .collect();
        let lemmas = forms
            .par_iter()
            .zip(&dists)
            .map(|(w, d)| Ok(self.crunch_candidates(w, d, k, beam)?.best().to_string()))
            .collect::<Result<_>>()?;
        Ok(SentencePrediction { tags, lemmas })
    }

    /// Decodes a whole corpus; `crunch` selects crunching with that `k`.
    pub fn predict_corpus(
        &self,
        corpus: &Corpus,
        crunch: Option<usize>,
        beam: usize,
    ) -> Result<Vec<SentencePrediction>> {
        corpus
            .sentences
            .iter()
            .map(|s| {
                let forms: Vec<&str> = s.forms().collect();
                match crunch {
                    Some(k) => self.crunch_decode(&forms, k, beam),
                    None => self.greedy_joint_decode(&forms, beam),
                }
            })
            .collect()
    }
}

/// `log Σ_m p(ℓ | m) p(m)` from per-tag lemma log-probabilities and tag
/// probabilities.
pub fn crunch_score(lemma_log_probs: &[f64], tag_probs: &[f64]) -> f64 {
    let terms: Vec<f64> = lemma_log_probs
        .iter()
        .zip(tag_probs)
        .map(|(l, p)| l + p.ln())
        .collect();
    ops::logsumexp(&terms)
}

/// Copy of `corpus` with predicted tags and lemmata filled in.
pub fn annotate(corpus: &Corpus, predictions: &[SentencePrediction]) -> Result<Corpus> {
    if corpus.len() != predictions.len() {
        return Err(Error::LengthMismatch {
            what: "sentences vs predictions",
            left: corpus.len(),
            right: predictions.len(),
        });
    }
    let mut out = corpus.clone();
    for (s, p) in out.sentences.iter_mut().zip(predictions) {
        for ((t, tag), lemma) in s.tokens.iter_mut().zip(&p.tags).zip(&p.lemmas) {
            t.tag = Some(tag.clone());
            t.lemma = Some(lemma.clone());
        }
    }
    Ok(out)
}

/// Predicted lemmata flattened in corpus order.
pub fn flat_lemmas(predictions: &[SentencePrediction]) -> Vec<String> {
    predictions
        .iter()
        .flat_map(|p| p.lemmas.iter().cloned())
        .collect()
}
