use morphlem_autodiff::ops;

/// Log-space forward trellis over monotone alignments.
///
/// `alpha[j][i]` is the log-probability of emitting the first `j + 1` target
/// symbols with the last one aligned to source position `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentLattice {
    pub source_len: usize,
    pub alpha: Vec<Vec<f64>>,
}

impl AlignmentLattice {
    pub fn target_len(&self) -> usize {
        self.alpha.len()
    }

    /// `log p` of the whole target sequence.
    pub fn log_likelihood(&self) -> f64 {
        self.alpha.last().map_or(0.0, |row| ops::logsumexp(row))
    }
}

/// Log transition distribution out of `prev` under attention scores
/// `scores`: a softmax over positions `i ≥ prev`, `-inf` elsewhere. `None`
/// stands for the virtual start position, from which every position is
/// reachable.
pub fn transition_log_probs(scores: &[f64], prev: Option<usize>) -> Vec<f64> {
    let start = prev.unwrap_or(0);
    let z = ops::logsumexp(&scores[start..]);
    scores
        .iter()
        .enumerate()
        .map(|(i, s)| if i < start { f64::NEG_INFINITY } else { s - z })
        .collect()
}

/// First lattice row: `alpha_1 = e_1 + log softmax(s_1)`.
pub fn initial_row(emission: &[f64], scores: &[f64]) -> Vec<f64> {
    let ls = ops::log_softmax(scores);
    ops::add(emission, &ls)
}

/// The part of the next row that does not depend on the emitted symbol:
/// `s_j + cumlse(alpha_{j-1} - revcumlse(s_j))`.
pub fn transition_term(prev_alpha: &[f64], scores: &[f64]) -> Vec<f64> {
    let z = ops::rev_cum_logsumexp(scores);
    let diff: Vec<f64> = prev_alpha.iter().zip(&z).map(|(a, z)| a - z).collect();
    let c = ops::cum_logsumexp(&diff);
    ops::add(scores, &c)
}

/// Runs the forward recursion given per-step log emission vectors and
/// attention scores (both indexed `[step][source position]`).
pub fn forward(emissions: &[Vec<f64>], scores: &[Vec<f64>]) -> AlignmentLattice {
    assert_eq!(emissions.len(), scores.len());
    let source_len = emissions.first().map_or(0, Vec::len);
    let mut alpha: Vec<Vec<f64>> = Vec::with_capacity(emissions.len());
    for (e, s) in emissions.iter().zip(scores) {
        let row = match alpha.last() {
            None => initial_row(e, s),
            Some(prev) => ops::add(e, &transition_term(prev, s)),
        };
        alpha.push(row);
    }
    AlignmentLattice { source_len, alpha }
}
