use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Corpus;
use crate::{Error, Result};

/// One jackknife split, as sentence indices into the original corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub heldout: Vec<usize>,
}

/// Splits the corpus into `kappa` held-out blocks at sentence granularity.
///
/// Blocks are contiguous in corpus order (or in a seeded shuffled order when
/// `shuffle_seed` is given) and their sizes differ by at most one. Each
/// fold's training part is the complement of its held-out block.
pub fn jackknife_folds(
    corpus: &Corpus,
    kappa: usize,
    shuffle_seed: Option<u64>,
) -> Result<Vec<Fold>> {
    let n = corpus.len();
    if kappa < 2 || kappa > n {
        return Err(Error::InvalidFolds {
            kappa,
            sentences: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    if let Some(seed) = shuffle_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let base = n / kappa;
    let extra = n % kappa;
    let mut folds = Vec::with_capacity(kappa);
    let mut start = 0;
    for k in 0..kappa {
        let size = base + usize::from(k < extra);
        let mut heldout = order[start..start + size].to_vec();
        let mut train: Vec<usize> = order[..start]
            .iter()
            .chain(&order[start + size..])
            .copied()
            .collect();
        heldout.sort_unstable();
        train.sort_unstable();
        folds.push(Fold { train, heldout });
        start += size;
    }
    Ok(folds)
}

/// Evaluation-token category relative to a training corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    /// The form occurs in training with two or more distinct lemmata.
    Ambiguous,
    /// The form never occurs in training.
    Unseen,
    /// The form occurs in training with exactly one lemma.
    SeenUnambiguous,
}

impl Category {
    pub const ALL: [Category; 3] = [
        Category::Ambiguous,
        Category::Unseen,
        Category::SeenUnambiguous,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Ambiguous => "ambiguous",
            Category::Unseen => "unseen",
            Category::SeenUnambiguous => "seen-unambiguous",
        }
    }
}

/// Category of every token of `eval`, flattened in corpus order. Forms are
/// matched exactly (case-sensitive, no normalisation).
pub fn categorize_tokens(train: &Corpus, eval: &Corpus) -> Vec<Category> {
    let mut lemmata: HashMap<&str, HashSet<&str>> = HashMap::new();
    for t in train.tokens() {
        let entry = lemmata.entry(t.form.as_str()).or_default();
        if let Some(l) = &t.lemma {
            entry.insert(l.as_str());
        }
    }
    eval.tokens()
        .map(|t| match lemmata.get(t.form.as_str()) {
            None => Category::Unseen,
            Some(ls) if ls.len() >= 2 => Category::Ambiguous,
            Some(_) => Category::SeenUnambiguous,
        })
        .collect()
}
