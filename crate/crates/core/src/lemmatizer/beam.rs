use std::collections::HashMap;

use morphlem_autodiff::ops;
use serde::{Deserialize, Serialize};

use super::{lattice, Encoded, LemmatizerModel};
use crate::data::{MorphTag, BOS, EOS};
use crate::{Error, Result};

/// Beam-search output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoded {
    pub lemma: String,
    /// `log p(ℓ | m, w)` of the returned lemma, EOS included.
    pub log_prob: f64,
    /// No hypothesis ended with EOS inside the length cap; the lemma is the
    /// best capped prefix.
    pub truncated: bool,
}

/// Everything reachable in one step from a prefix.
struct Expansion {
    h: Vec<f64>,
    c: Vec<f64>,
    /// Lattice row for each output symbol appended to the prefix.
    alphas: Vec<Vec<f64>>,
    /// Prefix log-probability for each appended symbol.
    scores: Vec<f64>,
}

struct Search<'a> {
    model: &'a LemmatizerModel,
    enc: Encoded,
    /// Output symbols: the ordinary characters, then EOS.
    symbols: Vec<usize>,
    cache: HashMap<Vec<usize>, Expansion>,
    cap: usize,
}

#[derive(Clone)]
struct Hyp {
    /// Indices into `symbols`.
    prefix: Vec<usize>,
    score: f64,
}

impl<'a> Search<'a> {
    fn eos(&self) -> usize {
        self.symbols.len() - 1
    }

    /// Expands `prefix`, whose parent must already be in the cache.
    fn expand(&mut self, prefix: &[usize]) -> &Expansion {
        if !self.cache.contains_key(prefix) {
            let (h, c, alpha, prev) = match prefix.split_last() {
                None => {
                    let (h, c) = self.model.zero_decoder_state();
                    (h, c, None, BOS)
                }
                Some((&last, parent)) => {
                    let p = &self.cache[parent];
                    (
                        p.h.clone(),
                        p.c.clone(),
                        Some(&p.alphas[last]),
                        self.symbols[last],
                    )
                }
            };
            let out = self.model.step(&self.enc, prev, &h, &c);
            let base = match alpha {
                None => ops::log_softmax(&out.scores),
                Some(a) => lattice::transition_term(a, &out.scores),
            };
            let v = out.log_emissions.cols();
            let em = out.log_emissions.data();
            let alphas: Vec<Vec<f64>> = self
                .symbols
                .iter()
                .map(|&sym| {
                    base.iter()
                        .enumerate()
                        .map(|(i, b)| em[i * v + sym] + b)
                        .collect()
                })
                .collect();
            let scores = alphas.iter().map(|a| ops::logsumexp(a)).collect();
            self.cache.insert(
                prefix.to_vec(),
                Expansion {
                    h: out.h,
                    c: out.c,
                    alphas,
                    scores,
                },
            );
        }
        &self.cache[prefix]
    }

    /// Standard beam of width `b`; finished hypotheses take beam slots.
    fn run(&mut self, b: usize) -> (Vec<usize>, f64, bool) {
        let eos = self.eos();
        let cap = self.cap;
        let mut live = vec![Hyp {
            prefix: Vec::new(),
            score: 0.0,
        }];
        let mut finished: Option<Hyp> = None;
        for len in 0..=cap {
            let mut candidates: Vec<(Hyp, bool)> = Vec::new();
            for hyp in &live {
                let exp = self.expand(&hyp.prefix);
                if len >= 1 {
                    candidates.push((
                        Hyp {
                            prefix: hyp.prefix.clone(),
                            score: exp.scores[eos],
                        },
                        true,
                    ));
                }
                if len < cap {
                    for (k, &s) in exp.scores[..eos].iter().enumerate() {
                        let mut prefix = hyp.prefix.clone();
                        prefix.push(k);
                        candidates.push((Hyp { prefix, score: s }, false));
                    }
                }
            }
            candidates.sort_by(|a, b| b.0.score.total_cmp(&a.0.score));
            candidates.truncate(b);
            let mut next = Vec::new();
            for (hyp, done) in candidates {
                if done {
                    if finished.as_ref().is_none_or(|f| hyp.score > f.score) {
                        finished = Some(hyp);
                    }
                } else {
                    next.push(hyp);
                }
            }
            if next.is_empty() {
                break;
            }
            let best_live = next[0].score;
            live = next;
            if finished.as_ref().is_some_and(|f| f.score >= best_live) {
                break;
            }
        }
        match finished {
            Some(f) => (f.prefix, f.score, false),
            None => {
                let best = live.swap_remove(0);
                let score = self.expand(&best.prefix).scores[eos];
                (best.prefix, score, true)
            }
        }
    }
}

/// Best lemma over beam widths `1..=beam`, so a wider beam can never return
/// a lower-scoring lemma. Expansions are shared between the runs.
pub fn decode(model: &LemmatizerModel, form: &str, tag: &MorphTag, beam: usize) -> Result<Decoded> {
    if beam < 1 {
        return Err(Error::OutOfRange {
            what: "beam width",
            value: beam,
            min: 1,
            max: usize::MAX,
        });
    }
    let mut symbols: Vec<usize> = model.alphabet.char_indices().collect();
    symbols.push(EOS);
    let mut search = Search {
        model,
        enc: model.encode(form, tag)?,
        symbols,
        cache: HashMap::new(),
        cap: model.length_cap(form),
    };
    let mut best: Option<(Vec<usize>, f64, bool)> = None;
    for b in 1..=beam {
        let r = search.run(b);
        if best.as_ref().is_none_or(|x| r.1 > x.1) {
            best = Some(r);
        }
    }
    let (prefix, log_prob, truncated) = best.expect("beam >= 1");
    let ids: Vec<usize> = prefix.iter().map(|&k| search.symbols[k]).collect();
    Ok(Decoded {
        lemma: model.alphabet.decode(&ids),
        log_prob,
        truncated,
    })
}
