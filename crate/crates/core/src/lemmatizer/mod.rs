//! The lemmatizing factor `p(ℓ | m, w)`.
//!
//! A character biLSTM encodes the form (bracketed by BOS and EOS), and a
//! one-layer LSTM decoder reads the previous output character together with
//! an order-invariant embedding of the tag. Each output character is emitted
//! from exactly one source position; the alignment is a latent monotone
//! sequence whose transitions come from a multiplicative attention score
//! renormalised over the positions not to the left of the previous one. The
//! alignment is summed out exactly with the forward recursion in
//! [`lattice`].

mod beam;
pub mod lattice;

use std::collections::HashMap;

use morphlem_autodiff::{
    bilstm, bilstm_values, ops, Adam, AdamConfig, Array, Graph, LstmParams, Mode, NodeId, ParamId,
    ParamSet,
};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use beam::Decoded;
pub use lattice::AlignmentLattice;

use crate::data::{Alphabet, Corpus, MorphTag, TagInventory, BOS, EOS};
use crate::pipeline::ScheduleState;
use crate::tagger::{EpochRecord, TrainingLog};
use crate::training::{apply_update, batch_gradients, derive_seed, rng_from_seed, SeededRng};
use crate::{Error, Result};

/// One row of values per target step.
pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LemmatizerConfig {
    pub encoder_layers: usize,
    pub encoder_hidden: usize,
    pub decoder_hidden: usize,
    pub char_dim: usize,
    pub tag_dim: usize,
    /// Hidden width of the two-layer emission network.
    pub emission_hidden: usize,
    pub dropout: f64,
    pub lr: f64,
    pub min_lr: f64,
    pub clip: Option<f64>,
    pub beam: usize,
    /// Output length cap is `|w| + extra_length`.
    pub extra_length: usize,
    pub batch_size: usize,
    /// Epoch limit; also the fixed epoch count when no dev set is given.
    pub max_epochs: usize,
    /// When false the tag input is replaced by the empty tag.
    pub use_tags: bool,
}

impl Default for LemmatizerConfig {
    fn default() -> Self {
        LemmatizerConfig {
            encoder_layers: 2,
            encoder_hidden: 400,
            decoder_hidden: 400,
            char_dim: 200,
            tag_dim: 40,
            emission_hidden: 400,
            dropout: 0.4,
            lr: 0.001,
            min_lr: 1e-5,
            clip: Some(5.0),
            beam: 4,
            extra_length: 8,
            batch_size: 20,
            max_epochs: 50,
            use_tags: true,
        }
    }
}

impl LemmatizerConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.encoder_layers,
            self.encoder_hidden,
            self.decoder_hidden,
            self.char_dim,
            self.tag_dim,
            self.emission_hidden,
            self.beam,
            self.batch_size,
        ];
        if dims.contains(&0) {
            return Err(Error::Config(
                "lemmatizer dimensions and beam width must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "lemmatizer dropout {} not in [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }
}

/// `K=V` attribute strings with index 0 reserved for unknown attributes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct AttributeInventory {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for AttributeInventory {
    fn from(names: Vec<String>) -> Self {
        let mut inv = AttributeInventory::default();
        for n in names {
            inv.insert(n);
        }
        inv
    }
}

impl From<AttributeInventory> for Vec<String> {
    fn from(inv: AttributeInventory) -> Self {
        inv.names
    }
}

impl AttributeInventory {
    pub const UNK: usize = 0;

    pub fn from_tags<'a>(tags: impl IntoIterator<Item = &'a MorphTag>) -> Self {
        let mut inv = AttributeInventory::default();
        for t in tags {
            for a in t.attributes() {
                inv.insert(a);
            }
        }
        inv
    }

    pub fn insert(&mut self, name: String) -> usize {
        if let Some(&i) = self.index.get(&name) {
            return i;
        }
        self.names.push(name.clone());
        let i = self.names.len();
        self.index.insert(name, i);
        i
    }

    /// Rows of the embedding table, the unknown row included.
    pub fn len(&self) -> usize {
        self.names.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> usize {
        self.index.get(name).copied().unwrap_or(Self::UNK)
    }
}

/// One `(form, tag, lemma)` training or evaluation triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaExample {
    pub form: String,
    pub tag: MorphTag,
    pub lemma: String,
}

/// Triples from every token that has a lemma; missing tags become the empty
/// tag.
pub fn examples_from_corpus(corpus: &Corpus) -> Vec<LemmaExample> {
    corpus
        .tokens()
        .filter_map(|t| {
            t.lemma.as_ref().map(|l| LemmaExample {
                form: t.form.clone(),
                tag: t.tag.clone().unwrap_or_default(),
                lemma: l.clone(),
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
struct LemmaParams {
    char_emb: ParamId,
    attr_emb: ParamId,
    encoder: Vec<(LstmParams, LstmParams)>,
    decoder: LstmParams,
    att_w: ParamId,
    em_enc: ParamId,
    em_dec: ParamId,
    em_b1: ParamId,
    em_out: ParamId,
    em_b2: ParamId,
}

#[derive(Debug, Clone)]
pub struct LemmatizerModel {
    pub config: LemmatizerConfig,
    pub alphabet: Alphabet,
    pub attributes: AttributeInventory,
    pub params: ParamSet,
    ids: LemmaParams,
}

/// Encoder-side values reused across decoder steps.
pub(crate) struct Encoded {
    /// `[N, 2 * encoder_hidden]`
    pub h: Array,
    /// `h W_enc`, `[N, emission_hidden]`
    pub proj: Array,
    pub tag: Vec<f64>,
}

/// Decoder state after a step, with the quantities the lattice needs.
pub(crate) struct StepOutput {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    /// Attention scores over source positions.
    pub scores: Vec<f64>,
    /// Log emission probabilities, `[N, |alphabet|]`.
    pub log_emissions: Array,
}

impl LemmatizerModel {
    pub fn new(
        config: LemmatizerConfig,
        alphabet: Alphabet,
        attributes: AttributeInventory,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let mut rng = rng_from_seed(seed);
        let mut p = ParamSet::new();
        let c = &config;
        let v = alphabet.len();
        let char_emb = p.add_uniform("lemmatizer.char_emb", &[v, c.char_dim], 0.1, &mut rng);
        let attr_emb = p.add_uniform(
            "lemmatizer.attr_emb",
            &[attributes.len(), c.tag_dim],
            0.1,
            &mut rng,
        );
        let mut encoder = Vec::new();
        let mut input = c.char_dim;
        for layer in 0..c.encoder_layers {
            let f = LstmParams::new(
                &mut p,
                &format!("lemmatizer.enc{layer}.fwd"),
                input,
                c.encoder_hidden,
                &mut rng,
            );
            let b = LstmParams::new(
                &mut p,
                &format!("lemmatizer.enc{layer}.bwd"),
                input,
                c.encoder_hidden,
                &mut rng,
            );
            encoder.push((f, b));
            input = 2 * c.encoder_hidden;
        }
        let enc = 2 * c.encoder_hidden;
        let decoder = LstmParams::new(
            &mut p,
            "lemmatizer.dec",
            c.char_dim + c.tag_dim,
            c.decoder_hidden,
            &mut rng,
        );
        let kd = 1.0 / (c.decoder_hidden as f64).sqrt();
        let ke = 1.0 / (enc as f64).sqrt();
        let km = 1.0 / (c.emission_hidden as f64).sqrt();
        let att_w = p.add_uniform("lemmatizer.att.w", &[enc, c.decoder_hidden], kd, &mut rng);
        let em_enc = p.add_uniform(
            "lemmatizer.emit.w_enc",
            &[enc, c.emission_hidden],
            ke,
            &mut rng,
        );
        let em_dec = p.add_uniform(
            "lemmatizer.emit.w_dec",
            &[c.emission_hidden, c.decoder_hidden],
            kd,
            &mut rng,
        );
        let em_b1 = p.add_uniform("lemmatizer.emit.b1", &[c.emission_hidden], km, &mut rng);
        let em_out = p.add_uniform(
            "lemmatizer.emit.w_out",
            &[c.emission_hidden, v],
            km,
            &mut rng,
        );
        let em_b2 = p.add_uniform("lemmatizer.emit.b2", &[v], km, &mut rng);
        Ok(LemmatizerModel {
            config,
            alphabet,
            attributes,
            params: p,
            ids: LemmaParams {
                char_emb,
                attr_emb,
                encoder,
                decoder,
                att_w,
                em_enc,
                em_dec,
                em_b1,
                em_out,
                em_b2,
            },
        })
    }

    /// Model over the vocabularies of a tag inventory.
    pub fn for_tags(
        config: LemmatizerConfig,
        alphabet: Alphabet,
        tags: &TagInventory,
        seed: u64,
    ) -> Result<Self> {
        let attributes = AttributeInventory::from_tags(tags.tags());
        Self::new(config, alphabet, attributes, seed)
    }

    fn tag_rows(&self, tag: &MorphTag) -> Vec<usize> {
        if !self.config.use_tags {
            return Vec::new();
        }
        tag.attributes()
            .map(|a| self.attributes.index_of(&a))
            .collect()
    }

    /// Sum of the attribute embeddings of `tag` (zero for the empty tag).
    pub fn tag_embed(&self, tag: &MorphTag) -> Vec<f64> {
        let table = self.params.get(self.ids.attr_emb);
        let mut out = vec![0.0; self.config.tag_dim];
        for r in self.tag_rows(tag) {
            for (o, v) in out.iter_mut().zip(table.row(r)) {
                *o += v;
            }
        }
        out
    }

    /// Encoder input indices: BOS, the form's characters, EOS.
    fn source_ids(&self, form: &str) -> Result<Vec<usize>> {
        if form.is_empty() {
            return Err(Error::Empty("word form"));
        }
        let mut ids = vec![BOS];
        ids.extend(self.alphabet.encode(form));
        ids.push(EOS);
        Ok(ids)
    }

    /// Target indices: the lemma's characters followed by EOS.
    pub fn target_ids(&self, lemma: &str) -> Result<Vec<usize>> {
        if lemma.is_empty() {
            return Err(Error::Empty("lemma"));
        }
        let mut ids = self.alphabet.encode(lemma);
        ids.push(EOS);
        Ok(ids)
    }

    /// Output length cap for a form.
    pub fn length_cap(&self, form: &str) -> usize {
        form.chars().count() + self.config.extra_length
    }

    // ---- graph path -------------------------------------------------------

    fn marginal_node(
        &self,
        g: &mut Graph<'_>,
        ex: &LemmaExample,
        mode: Mode,
        rng: &mut SeededRng,
    ) -> Result<NodeId> {
        let rate = self.config.dropout;
        let source = self.source_ids(&ex.form)?;
        let target = self.target_ids(&ex.lemma)?;

        let table = g.param(self.ids.char_emb);
        let mut xs = Vec::with_capacity(source.len());
        for &i in &source {
            let e = g.row(table, i);
            xs.push(g.dropout(e, rate, mode, rng)?);
        }
        for (f, b) in &self.ids.encoder {
            let hs = bilstm(g, &xs, f, b)?;
            xs = hs
                .into_iter()
                .map(|h| g.dropout(h, rate, mode, rng))
                .collect::<std::result::Result<_, _>>()?;
        }
        let h_enc = g.stack_rows(&xs);

        let attr = g.param(self.ids.attr_emb);
        let rows = self.tag_rows(&ex.tag);
        let tag = if rows.is_empty() {
            g.constant(Array::zeros(&[self.config.tag_dim]))
        } else {
            let parts: Vec<NodeId> = rows.iter().map(|&r| g.row(attr, r)).collect();
            g.add_all(&parts)
        };

        let att_w = g.param(self.ids.att_w);
        let em_enc = g.param(self.ids.em_enc);
        let em_dec = g.param(self.ids.em_dec);
        let em_b1 = g.param(self.ids.em_b1);
        let em_out = g.param(self.ids.em_out);
        let em_b2 = g.param(self.ids.em_b2);
        let proj = g.matmul(h_enc, em_enc);

        let mut state = self.ids.decoder.zero_state(g);
        let mut prev_char = BOS;
        let mut alpha: Option<NodeId> = None;
        for &y in &target {
            let e = g.row(table, prev_char);
            let e = g.dropout(e, rate, mode, rng)?;
            let input = g.concat(&[e, tag]);
            state = self.ids.decoder.step(g, input, state);
            let d = state.h;

            let q = g.matvec(att_w, d);
            let s = g.matvec(h_enc, q);

            let a = g.matvec(em_dec, d);
            let a = g.add(a, em_b1);
            let hid = g.add_row_broadcast(proj, a);
            let hid = g.tanh(hid);
            let logits = g.matmul(hid, em_out);
            let logits = g.add_row_broadcast(logits, em_b2);
            let ls = g.log_softmax(logits);
            let em = g.column(ls, y);

            let row = match alpha {
                None => {
                    let t = g.log_softmax(s);
                    g.add(em, t)
                }
                Some(prev) => {
                    let z = g.rev_cum_logsumexp(s);
                    let diff = g.sub(prev, z);
                    let c = g.cum_logsumexp(diff);
                    let t = g.add(s, c);
                    g.add(em, t)
                }
            };
            alpha = Some(row);
            prev_char = y;
        }
        Ok(g.logsumexp(alpha.expect("target has at least EOS")))
    }

    /// `log p(ℓ | m, w)` computed on the autodiff graph in inference mode.
    pub fn forward_marginal(&self, form: &str, tag: &MorphTag, lemma: &str) -> Result<f64> {
        let mut g = Graph::new(&self.params);
        let mut rng = rng_from_seed(0);
        let ex = LemmaExample {
            form: form.to_string(),
            tag: tag.clone(),
            lemma: lemma.to_string(),
        };
        let out = self.marginal_node(&mut g, &ex, Mode::Inference, &mut rng)?;
        Ok(g.value(out).item())
    }

    /// `-log p(ℓ | m, w)` as a graph node; parameters are read from the
    /// graph's own parameter set, which must share this model's layout.
    pub fn loss_node(
        &self,
        g: &mut Graph<'_>,
        ex: &LemmaExample,
        mode: Mode,
        rng: &mut SeededRng,
    ) -> Result<NodeId> {
        let ll = self.marginal_node(g, ex, mode, rng)?;
        Ok(g.neg(ll))
    }

    // ---- gradient-free path ----------------------------------------------

    pub(crate) fn encode(&self, form: &str, tag: &MorphTag) -> Result<Encoded> {
        let p = &self.params;
        let table = p.get(self.ids.char_emb);
        let mut xs: Vec<Vec<f64>> = self
            .source_ids(form)?
            .into_iter()
            .map(|i| table.row(i).to_vec())
            .collect();
        for (f, b) in &self.ids.encoder {
            xs = bilstm_values(p, &xs, f, b);
        }
        let width = xs[0].len();
        let h = Array::matrix(xs.len(), width, xs.concat());
        let proj = ops::matmul(&h, p.get(self.ids.em_enc));
        Ok(Encoded {
            h,
            proj,
            tag: self.tag_embed(tag),
        })
    }

    pub(crate) fn zero_decoder_state(&self) -> (Vec<f64>, Vec<f64>) {
        let hd = self.config.decoder_hidden;
        (vec![0.0; hd], vec![0.0; hd])
    }

    /// One decoder step after reading `prev_char`.
    pub(crate) fn step(&self, enc: &Encoded, prev_char: usize, h: &[f64], c: &[f64]) -> StepOutput {
        let p = &self.params;
        let mut input = p.get(self.ids.char_emb).row(prev_char).to_vec();
        input.extend_from_slice(&enc.tag);
        let (h, c) = self.ids.decoder.step_values(p, &input, h, c);
        let q = ops::matvec(p.get(self.ids.att_w), &h);
        let scores = ops::matvec(&enc.h, &q);
        let a = ops::add(
            &ops::matvec(p.get(self.ids.em_dec), &h),
            p.get(self.ids.em_b1).data(),
        );
        let mut hid = ops::add_row_broadcast(&enc.proj, &a);
        hid.data_mut().iter_mut().for_each(|v| *v = v.tanh());
        let logits = ops::add_row_broadcast(
            &ops::matmul(&hid, p.get(self.ids.em_out)),
            p.get(self.ids.em_b2).data(),
        );
        StepOutput {
            h,
            c,
            scores,
            log_emissions: ops::log_softmax_last(&logits),
        }
    }

    /// Per-step log emission columns and attention scores for a fixed
    /// target, the inputs of the forward recursion.
    pub fn step_scores(&self, form: &str, tag: &MorphTag, lemma: &str) -> Result<(Rows, Rows)> {
        let enc = self.encode(form, tag)?;
        let target = self.target_ids(lemma)?;
        let (mut h, mut c) = self.zero_decoder_state();
        let mut prev = BOS;
        let mut emissions = Vec::with_capacity(target.len());
        let mut scores = Vec::with_capacity(target.len());
        for &y in &target {
            let out = self.step(&enc, prev, &h, &c);
            let v = out.log_emissions.cols();
            emissions.push(
                out.log_emissions
                    .data()
                    .iter()
                    .skip(y)
                    .step_by(v)
                    .copied()
                    .collect(),
            );
            scores.push(out.scores);
            h = out.h;
            c = out.c;
            prev = y;
        }
        Ok((emissions, scores))
    }

    /// The full forward trellis for `(form, tag, lemma)`.
    pub fn lattice(&self, form: &str, tag: &MorphTag, lemma: &str) -> Result<AlignmentLattice> {
        let (e, s) = self.step_scores(form, tag, lemma)?;
        Ok(lattice::forward(&e, &s))
    }

    /// `log p(ℓ | m, w)` without building a graph.
    pub fn log_likelihood(&self, form: &str, tag: &MorphTag, lemma: &str) -> Result<f64> {
        Ok(self.lattice(form, tag, lemma)?.log_likelihood())
    }

    /// Mean log-likelihood over a set of triples.
    pub fn mean_log_likelihood(&self, examples: &[LemmaExample]) -> Result<f64> {
        if examples.is_empty() {
            return Err(Error::Empty("lemmatizer examples"));
        }
        let lls: Vec<f64> = examples
            .par_iter()
            .map(|ex| self.log_likelihood(&ex.form, &ex.tag, &ex.lemma))
            .collect::<Result<_>>()?;
        Ok(lls.iter().sum::<f64>() / lls.len() as f64)
    }

    /// Beam search for `argmax_ℓ p(ℓ | m, w)`.
    pub fn decode_lemma(&self, form: &str, tag: &MorphTag, beam: usize) -> Result<Decoded> {
        beam::decode(self, form, tag, beam)
    }

    /// Fraction of triples whose decoded lemma equals the gold lemma.
    pub fn accuracy(&self, examples: &[LemmaExample]) -> Result<f64> {
        if examples.is_empty() {
            return Err(Error::Empty("lemmatizer examples"));
        }
        let hits: Vec<bool> = examples
            .par_iter()
            .map(|ex| {
                Ok(self
                    .decode_lemma(&ex.form, &ex.tag, self.config.beam)?
                    .lemma
                    == ex.lemma)
            })
            .collect::<Result<_>>()?;
        Ok(hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64)
    }

    // ---- training ---------------------------------------------------------

    /// One pass over `examples` in shuffled order; returns the mean loss.
    fn train_epoch(
        &mut self,
        examples: &[LemmaExample],
        adam: &mut Adam,
        rng: &mut SeededRng,
    ) -> Result<f64> {
        let mut order: Vec<usize> = (0..examples.len()).collect();
        order.shuffle(rng);
        let mut total = 0.0;
        for batch in order.chunks(self.config.batch_size) {
            let items: Vec<&LemmaExample> = batch.iter().map(|&i| &examples[i]).collect();
            let model = &*self;
            let (loss, grads) = batch_gradients(&self.params, &items, rng, |g, ex, r| {
                model.loss_node(g, ex, Mode::Train, r).map(Some)
            })?;
            total += loss;
            apply_update(&mut self.params, adam, grads, items.len(), self.config.clip)?;
        }
        Ok(total / examples.len() as f64)
    }

    /// Maximum-likelihood training with Adam. With a dev set the learning
    /// rate is halved (and the best weights restored) whenever the dev
    /// log-likelihood does not improve, until it falls to `min_lr`; without
    /// one, `max_epochs` passes are made.
    pub fn fit(
        &mut self,
        examples: &[LemmaExample],
        dev: Option<&[LemmaExample]>,
        rng: &mut SeededRng,
    ) -> Result<TrainingLog> {
        if examples.is_empty() {
            return Err(Error::Empty("lemmatizer training set"));
        }
        let mut adam = Adam::new(
            &self.params,
            AdamConfig {
                lr: self.config.lr,
                ..AdamConfig::default()
            },
        );
        let mut schedule = ScheduleState::new(self.config.lr, self.config.min_lr);
        let mut best = self.params.clone();
        let mut log = TrainingLog::default();
        for epoch in 1..=self.config.max_epochs {
            let loss = self.train_epoch(examples, &mut adam, rng)?;
            let mut record = EpochRecord {
                epoch,
                loss,
                dev_accuracy: None,
                dev_log_likelihood: None,
                lr: adam.lr(),
            };
            if let Some(dev) = dev.filter(|d| !d.is_empty()) {
                let ll = self.mean_log_likelihood(dev)?;
                record.dev_log_likelihood = Some(ll);
                let outcome = schedule.step(ll);
                if outcome.improved {
                    best = self.params.clone();
                } else {
                    self.params = best.clone();
                    adam.set_lr(schedule.lr);
                }
                log.epochs.push(record);
                if schedule.stop {
                    break;
                }
            } else {
                log.epochs.push(record);
            }
        }
        if dev.is_some_and(|d| !d.is_empty()) {
            self.params = best;
        }
        Ok(log)
    }
}

/// Builds a model over `alphabet`/`tags` and trains it.
pub fn train_lemmatizer(
    examples: &[LemmaExample],
    dev: Option<&[LemmaExample]>,
    config: LemmatizerConfig,
    alphabet: Alphabet,
    tags: &TagInventory,
    seed: u64,
) -> Result<(LemmatizerModel, TrainingLog)> {
    if examples.is_empty() {
        return Err(Error::Empty("lemmatizer training set"));
    }
    let mut model = LemmatizerModel::for_tags(config, alphabet, tags, seed)?;
    let mut rng = rng_from_seed(derive_seed(seed, 2));
    let log = model.fit(examples, dev, &mut rng)?;
    Ok((model, log))
}
