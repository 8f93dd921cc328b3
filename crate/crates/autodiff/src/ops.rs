//! Forward kernels shared by the graph and by gradient-free inference code.
//!
//! Everything here works on plain slices or [`Array`]s and never allocates
//! graph nodes, so decoders can reproduce graph results exactly.

use crate::Array;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(exp(a) + exp(b))`.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Prefix log-sum-exp: `out[i] = log Σ_{k ≤ i} exp(xs[k])`.
pub fn cum_logsumexp(xs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = f64::NEG_INFINITY;
    for &x in xs {
        acc = log_add(acc, x);
        out.push(acc);
    }
    out
}

/// Suffix log-sum-exp: `out[i] = log Σ_{k ≥ i} exp(xs[k])`.
pub fn rev_cum_logsumexp(xs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; xs.len()];
    let mut acc = f64::NEG_INFINITY;
    for i in (0..xs.len()).rev() {
        acc = log_add(acc, xs[i]);
        out[i] = acc;
    }
    out
}

pub fn log_softmax(xs: &[f64]) -> Vec<f64> {
    let z = logsumexp(xs);
    xs.iter().map(|x| x - z).collect()
}

/// Row-wise log-softmax over the last axis of a 1-D or 2-D array.
pub fn log_softmax_last(x: &Array) -> Array {
    let width = *x.shape().last().unwrap_or(&1);
    let mut out = Vec::with_capacity(x.len());
    for chunk in x.data().chunks(width.max(1)) {
        out.extend(log_softmax(chunk));
    }
    Array::new(x.shape().to_vec(), out)
}

/// `W x` for `W` of shape `[m, n]` and `x` of length `n`.
pub fn matvec(w: &Array, x: &[f64]) -> Vec<f64> {
    let (m, n) = (w.rows(), w.cols());
    assert_eq!(
        n,
        x.len(),
        "matvec: [{m}, {n}] times vector of length {}",
        x.len()
    );
    let wd = w.data();
    (0..m)
        .map(|i| {
            wd[i * n..(i + 1) * n]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

/// `A B` for `A` of shape `[m, k]` and `B` of shape `[k, n]`.
pub fn matmul(a: &Array, b: &Array) -> Array {
    let (m, k) = (a.rows(), a.cols());
    let (k2, n) = (b.rows(), b.cols());
    assert_eq!(k, k2, "matmul: [{m}, {k}] times [{k2}, {n}]");
    let mut out = vec![0.0; m * n];
    let (ad, bd) = (a.data(), b.data());
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = ad[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &bd[p * n..(p + 1) * n];
            for (o, bv) in row.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    Array::matrix(m, n, out)
}

/// Adds `b` (length `n`) to every row of `x` (shape `[m, n]`).
pub fn add_row_broadcast(x: &Array, b: &[f64]) -> Array {
    let n = x.cols();
    assert_eq!(n, b.len(), "row broadcast: width {n} vs bias {}", b.len());
    let mut out = x.data().to_vec();
    for row in out.chunks_mut(n) {
        for (o, v) in row.iter_mut().zip(b) {
            *o += v;
        }
    }
    Array::new(x.shape().to_vec(), out)
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
