use serde::{Deserialize, Serialize};

use crate::data::{Category, Corpus};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub category: Category,
    pub correct: usize,
    pub count: usize,
}

impl CategoryScore {
    /// `None` when the category has no tokens.
    pub fn accuracy(&self) -> Option<f64> {
        (self.count > 0).then(|| self.correct as f64 / self.count as f64)
    }
}

/// Lemma accuracy overall and per token category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub correct: usize,
    pub total: usize,
    pub categories: Vec<CategoryScore>,
    /// Significance against a comparison system, when one was run.
    pub p_value: Option<f64>,
}

impl EvalReport {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    pub fn category(&self, c: Category) -> Option<&CategoryScore> {
        self.categories.iter().find(|s| s.category == c)
    }
}

/// Per-token exact-match correctness of predicted lemmata. Tokens without a
/// gold lemma are compared against `_`.
pub fn correctness(predicted: &[String], gold: &Corpus) -> Result<Vec<bool>> {
    let n = gold.token_count();
    if predicted.len() != n {
        return Err(Error::LengthMismatch {
            what: "predicted lemmata",
            left: predicted.len(),
            right: n,
        });
    }
    Ok(gold
        .tokens()
        .zip(predicted)
        .map(|(t, p)| t.lemma.as_deref().unwrap_or("_") == p)
        .collect())
}

/// Accuracy of `predicted` (flattened in corpus order) against `gold`, broken
/// down by the per-token `categories`.
pub fn accuracy_report(
    predicted: &[String],
    gold: &Corpus,
    categories: &[Category],
) -> Result<EvalReport> {
    let hits = correctness(predicted, gold)?;
    if categories.len() != hits.len() {
        return Err(Error::LengthMismatch {
            what: "token categories",
            left: categories.len(),
            right: hits.len(),
        });
    }
    let mut scores: Vec<CategoryScore> = Category::ALL
        .iter()
        .map(|&category| CategoryScore {
            category,
            correct: 0,
            count: 0,
        })
        .collect();
    for (&h, c) in hits.iter().zip(categories) {
        let s = scores
            .iter_mut()
            .find(|s| s.category == *c)
            .expect("all categories listed");
        s.count += 1;
        s.correct += usize::from(h);
    }
    Ok(EvalReport {
        correct: hits.iter().filter(|&&h| h).count(),
        total: hits.len(),
        categories: scores,
        p_value: None,
    })
}
