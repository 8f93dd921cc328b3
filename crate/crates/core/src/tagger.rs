//! The tagging factor `p(m | w)`.
//!
//! Each word is embedded by running a character LSTM over its characters in
//! both directions and concatenating the two final states. The embeddings go
//! through a linear layer into a stacked word-level biLSTM, and every
//! position gets an independent softmax over the tag inventory. Because the
//! per-word distributions do not interact, greedy decoding is exact.

use morphlem_autodiff::{
    bilstm, lstm_sequence, ops, Adam, AdamConfig, Array, Graph, LstmParams, Mode, NodeId, ParamId,
    ParamSet,
};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{build_vocab, Alphabet, Corpus, MorphTag, TagInventory};
use crate::training::{apply_update, batch_gradients, rng_from_seed, SeededRng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaggerConfig {
    pub char_dim: usize,
    pub char_hidden: usize,
    /// Width of the linear layer between the word embedder and the word biLSTM.
    pub linear_dim: usize,
    pub word_layers: usize,
    pub word_hidden: usize,
    pub dropout: f64,
    pub epochs: usize,
    pub lr: f64,
    pub clip: Option<f64>,
    /// Sentences per optimiser step.
    pub batch_size: usize,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            char_dim: 128,
            char_hidden: 128,
            linear_dim: 128,
            word_layers: 2,
            word_hidden: 256,
            dropout: 0.3,
            epochs: 10,
            lr: 0.001,
            clip: Some(5.0),
            batch_size: 1,
        }
    }
}

impl TaggerConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.char_dim,
            self.char_hidden,
            self.linear_dim,
            self.word_layers,
            self.word_hidden,
            self.batch_size,
        ];
        if dims.contains(&0) {
            return Err(Error::Config("tagger dimensions must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "tagger dropout {} not in [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct TaggerParams {
    char_emb: ParamId,
    char_fwd: LstmParams,
    char_bwd: LstmParams,
    lin_w: ParamId,
    lin_b: ParamId,
    word: Vec<(LstmParams, LstmParams)>,
    out_w: ParamId,
    out_b: ParamId,
}

/// Trained (or freshly initialised) tagger with its vocabularies.
#[derive(Debug, Clone)]
pub struct TaggerModel {
    pub config: TaggerConfig,
    pub alphabet: Alphabet,
    pub tags: TagInventory,
    pub params: ParamSet,
    ids: TaggerParams,
}

/// Per-epoch record of a training run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-token training loss.
    pub loss: f64,
    pub dev_accuracy: Option<f64>,
    pub dev_log_likelihood: Option<f64>,
    pub lr: f64,
}

impl TaggerModel {
    /// Registers all parameters with random initial values.
    pub fn new(
        config: TaggerConfig,
        alphabet: Alphabet,
        tags: TagInventory,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if tags.is_empty() {
            return Err(Error::Empty("tag inventory"));
        }
        let mut rng = rng_from_seed(seed);
        let mut p = ParamSet::new();
        let c = &config;
        let char_emb = p.add_uniform(
            "tagger.char_emb",
            &[alphabet.len(), c.char_dim],
            0.1,
            &mut rng,
        );
        let char_fwd = LstmParams::new(
            &mut p,
            "tagger.char_fwd",
            c.char_dim,
            c.char_hidden,
            &mut rng,
        );
        let char_bwd = LstmParams::new(
            &mut p,
            "tagger.char_bwd",
            c.char_dim,
            c.char_hidden,
            &mut rng,
        );
        let k = 1.0 / ((2 * c.char_hidden) as f64).sqrt();
        let lin_w = p.add_uniform(
            "tagger.linear.w",
            &[c.linear_dim, 2 * c.char_hidden],
            k,
            &mut rng,
        );
        let lin_b = p.add_uniform("tagger.linear.b", &[c.linear_dim], k, &mut rng);
        let mut word = Vec::new();
        let mut input = c.linear_dim;
        for layer in 0..c.word_layers {
            let f = LstmParams::new(
                &mut p,
                &format!("tagger.word{layer}.fwd"),
                input,
                c.word_hidden,
                &mut rng,
            );
            let b = LstmParams::new(
                &mut p,
                &format!("tagger.word{layer}.bwd"),
                input,
                c.word_hidden,
                &mut rng,
            );
            word.push((f, b));
            input = 2 * c.word_hidden;
        }
        let k = 1.0 / (input as f64).sqrt();
        let out_w = p.add_uniform("tagger.out.w", &[tags.len(), input], k, &mut rng);
        let out_b = p.add_uniform("tagger.out.b", &[tags.len()], k, &mut rng);
        Ok(TaggerModel {
            config,
            alphabet,
            tags,
            params: p,
            ids: TaggerParams {
                char_emb,
                char_fwd,
                char_bwd,
                lin_w,
                lin_b,
                word,
                out_w,
                out_b,
            },
        })
    }

    pub fn parameter(&self, name: &str) -> Option<ParamId> {
        self.params.id(name)
    }

    /// Word vector node: `[forward final state ; backward final state]`.
    fn embed_node(
        &self,
        g: &mut Graph<'_>,
        form: &str,
        mode: Mode,
        rng: &mut SeededRng,
    ) -> Result<NodeId> {
        let table = g.param(self.ids.char_emb);
        let mut chars = Vec::new();
        for idx in self.alphabet.encode(form) {
            let e = g.row(table, idx);
            chars.push(g.dropout(e, self.config.dropout, mode, rng)?);
        }
        if chars.is_empty() {
            return Err(Error::Empty("word form"));
        }
        let fwd = lstm_sequence(g, &chars, &self.ids.char_fwd, false)?;
        let bwd = lstm_sequence(g, &chars, &self.ids.char_bwd, true)?;
        Ok(g.concat(&[*fwd.last().unwrap(), bwd[0]]))
    }

    /// Log-probability vector over tags for every word of the sentence.
    fn sentence_nodes(
        &self,
        g: &mut Graph<'_>,
        forms: &[&str],
        mode: Mode,
        rng: &mut SeededRng,
    ) -> Result<Vec<NodeId>> {
        if forms.is_empty() {
            return Err(Error::Empty("sentence"));
        }
        let rate = self.config.dropout;
        let lin_w = g.param(self.ids.lin_w);
        let lin_b = g.param(self.ids.lin_b);
        let mut xs = Vec::with_capacity(forms.len());
        for form in forms {
            let u = self.embed_node(g, form, mode, rng)?;
            let z = g.matvec(lin_w, u);
            let z = g.add(z, lin_b);
            xs.push(g.dropout(z, rate, mode, rng)?);
        }
        for (f, b) in &self.ids.word {
            let hs = bilstm(g, &xs, f, b)?;
            xs = hs
                .into_iter()
                .map(|h| g.dropout(h, rate, mode, rng))
                .collect::<std::result::Result<_, _>>()?;
        }
        let out_w = g.param(self.ids.out_w);
        let out_b = g.param(self.ids.out_b);
        Ok(xs
            .into_iter()
            .map(|h| {
                let l = g.matvec(out_w, h);
                let l = g.add(l, out_b);
                g.log_softmax(l)
            })
            .collect())
    }

    /// Character-level word representation `u`.
    pub fn embed_word(&self, form: &str) -> Result<Array> {
        let mut g = Graph::new(&self.params);
        let mut rng = rng_from_seed(0);
        let u = self.embed_node(&mut g, form, Mode::Inference, &mut rng)?;
        Ok(g.value(u).clone())
    }

    /// Probability vector over the tag inventory for every word.
    pub fn tag_distributions(&self, forms: &[&str]) -> Result<Vec<Vec<f64>>> {
        let mut g = Graph::new(&self.params);
        let mut rng = rng_from_seed(0);
        let nodes = self.sentence_nodes(&mut g, forms, Mode::Inference, &mut rng)?;
        Ok(nodes
            .into_iter()
            .map(|n| g.value(n).data().iter().map(|v| v.exp()).collect())
            .collect())
    }

    /// Most probable tag index per word (ties: lowest index).
    pub fn greedy_tag(&self, forms: &[&str]) -> Result<Vec<usize>> {
        Ok(self
            .tag_distributions(forms)?
            .iter()
            .map(|d| ops::argmax(d))
            .collect())
    }

    pub fn greedy_tags(&self, forms: &[&str]) -> Result<Vec<MorphTag>> {
        Ok(self
            .greedy_tag(forms)?
            .into_iter()
            .map(|i| self.tags.tag(i).clone())
            .collect())
    }

    /// The `k` most probable `(tag index, probability)` pairs per word, in
    /// descending probability with ties broken by tag index.
    pub fn k_best(&self, forms: &[&str], k: usize) -> Result<Vec<Vec<(usize, f64)>>> {
        if k < 1 || k > self.tags.len() {
            return Err(Error::OutOfRange {
                what: "k",
                value: k,
                min: 1,
                max: self.tags.len(),
            });
        }
        Ok(self
            .tag_distributions(forms)?
            .into_iter()
            .map(|d| top_k(&d, k))
            .collect())
    }

    /// Mean per-token negative log-likelihood of the gold tags.
    pub fn loss(&self, corpus: &Corpus) -> Result<f64> {
        let mut total = 0.0;
        let mut n = 0usize;
        for s in &corpus.sentences {
            let forms: Vec<&str> = s.forms().collect();
            let dist = self.tag_distributions(&forms)?;
            for (t, d) in s.tokens.iter().zip(dist) {
                if let Some(i) = t.tag.as_ref().and_then(|m| self.tags.index_of(m)) {
                    total -= d[i].ln();
                    n += 1;
                }
            }
        }
        Ok(if n == 0 { 0.0 } else { total / n as f64 })
    }

    /// Fraction of tokens whose greedy tag equals the gold tag.
    pub fn accuracy(&self, corpus: &Corpus) -> Result<f64> {
        let mut correct = 0usize;
        let mut total = 0usize;
        for s in &corpus.sentences {
            let forms: Vec<&str> = s.forms().collect();
            for (t, pred) in s.tokens.iter().zip(self.greedy_tags(&forms)?) {
                if let Some(gold) = &t.tag {
                    total += 1;
                    correct += usize::from(gold == &pred);
                }
            }
        }
        Ok(if total == 0 {
            0.0
        } else {
            correct as f64 / total as f64
        })
    }

    /// Summed cross-entropy of one sentence as a graph node, or `None` when it
    /// has no token with a known gold tag.
    pub fn sentence_loss(
        &self,
        g: &mut Graph<'_>,
        forms: &[&str],
        gold: &[Option<usize>],
        mode: Mode,
        rng: &mut SeededRng,
    ) -> Result<Option<NodeId>> {
        if gold.iter().all(Option::is_none) {
            return Ok(None);
        }
        let nodes = self.sentence_nodes(g, forms, mode, rng)?;
        let picks: Vec<NodeId> = nodes
            .iter()
            .zip(gold)
            .filter_map(|(&n, &t)| t.map(|t| g.pick(n, t)))
            .collect();
        let sum = g.add_all(&picks);
        Ok(Some(g.neg(sum)))
    }

    /// Trains with Adam and dropout for `config.epochs` passes over `corpus`.
    pub fn fit(
        &mut self,
        corpus: &Corpus,
        dev: Option<&Corpus>,
        rng: &mut SeededRng,
    ) -> Result<TrainingLog> {
        let examples: Vec<(Vec<String>, Vec<Option<usize>>)> = corpus
            .sentences
            .iter()
            .map(|s| {
                let forms = s.tokens.iter().map(|t| t.form.clone()).collect();
                let gold = s
                    .tokens
                    .iter()
                    .map(|t| t.tag.as_ref().and_then(|m| self.tags.index_of(m)))
                    .collect();
                (forms, gold)
            })
            .filter(|(_, gold): &(Vec<String>, Vec<Option<usize>>)| {
                gold.iter().any(Option::is_some)
            })
            .collect();
        if examples.is_empty() {
            return Err(Error::Empty("tagger training corpus"));
        }
        let token_count: usize = examples
            .iter()
            .map(|(_, g)| g.iter().filter(|t| t.is_some()).count())
            .sum();

        let mut adam = Adam::new(
            &self.params,
            AdamConfig {
                lr: self.config.lr,
                ..AdamConfig::default()
            },
        );
        let mut order: Vec<usize> = (0..examples.len()).collect();
        let mut log = TrainingLog::default();
        for epoch in 1..=self.config.epochs {
            order.shuffle(rng);
            let mut epoch_loss = 0.0;
            for batch in order.chunks(self.config.batch_size) {
                let items: Vec<&(Vec<String>, Vec<Option<usize>>)> =
                    batch.iter().map(|&i| &examples[i]).collect();
                let model = &*self;
                let (loss, grads) = batch_gradients(&self.params, &items, rng, |g, item, r| {
                    let forms: Vec<&str> = item.0.iter().map(String::as_str).collect();
                    model.sentence_loss(g, &forms, &item.1, Mode::Train, r)
                })?;
                let tokens: usize = items
                    .iter()
                    .map(|(_, g)| g.iter().filter(|t| t.is_some()).count())
                    .sum();
                epoch_loss += loss;
                apply_update(&mut self.params, &mut adam, grads, tokens, self.config.clip)?;
            }
            let dev_accuracy = dev.map(|d| self.accuracy(d)).transpose()?;
            log.epochs.push(EpochRecord {
                epoch,
                loss: epoch_loss / token_count as f64,
                dev_accuracy,
                dev_log_likelihood: None,
                lr: adam.lr(),
            });
        }
        Ok(log)
    }
}

/// Top-`k` entries of a probability vector, ties broken by lower index.
pub fn top_k(dist: &[f64], k: usize) -> Vec<(usize, f64)> {
    let mut idx: Vec<usize> = (0..dist.len()).collect();
    idx.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
    idx.into_iter().take(k).map(|i| (i, dist[i])).collect()
}

/// Builds the vocabulary from `corpus` and trains a tagger on it.
pub fn train_tagger(
    corpus: &Corpus,
    dev: Option<&Corpus>,
    config: TaggerConfig,
    seed: u64,
) -> Result<(TaggerModel, TrainingLog)> {
    if corpus.is_empty() {
        return Err(Error::Empty("tagger training corpus"));
    }
    let (alphabet, tags) = build_vocab(corpus)?;
    train_tagger_with_vocab(corpus, dev, config, alphabet, tags, seed)
}

/// Trains a tagger over fixed vocabularies (shared across jackknife folds).
pub fn train_tagger_with_vocab(
    corpus: &Corpus,
    dev: Option<&Corpus>,
    config: TaggerConfig,
    alphabet: Alphabet,
    tags: TagInventory,
    seed: u64,
) -> Result<(TaggerModel, TrainingLog)> {
    let mut model = TaggerModel::new(config, alphabet, tags, seed)?;
    let mut rng = rng_from_seed(crate::training::derive_seed(seed, 1));
    let log = model.fit(corpus, dev, &mut rng)?;
    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_k_orders_and_breaks_ties_by_index() {
        let d = [0.2, 0.5, 0.3];
        assert_eq!(top_k(&d, 2), vec![(1, 0.5), (2, 0.3)]);
        let t = [0.25, 0.25, 0.5];
        assert_eq!(top_k(&t, 3), vec![(2, 0.5), (0, 0.25), (1, 0.25)]);
    }
}
