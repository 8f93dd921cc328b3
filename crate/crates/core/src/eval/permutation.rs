use rand::Rng;
use rayon::prelude::*;

use crate::training::{derive_seed, rng_from_seed};
use crate::{Error, Result};

const BLOCK: usize = 1000;
const MAX_EXACT: usize = 24;

fn differences(a: &[bool], b: &[bool]) -> Result<Vec<i64>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            what: "paired correctness vectors",
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| i64::from(x) - i64::from(y))
        .filter(|&d| d != 0)
        .collect())
}

/// Two-sided paired sign-flip test on the difference of mean correctness.
///
/// Each replicate flips the sign of every paired difference with
/// probability 1/2; `p = (1 + #{|stat| ≥ |observed|}) / (R + 1)`. Replicates
/// are drawn in blocks with seeds derived from `seed`, so the result does not
/// depend on the thread count.
pub fn paired_permutation_test(
    a: &[bool],
    b: &[bool],
    replicates: usize,
    seed: u64,
) -> Result<f64> {
    if replicates < 1 {
        return Err(Error::OutOfRange {
            what: "replicates",
            value: replicates,
            min: 1,
            max: usize::MAX,
        });
    }
    let d = differences(a, b)?;
    let observed: i64 = d.iter().sum::<i64>().abs();
    let blocks = replicates.div_ceil(BLOCK);
    let count: usize = (0..blocks)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from_seed(derive_seed(seed, k as u64));
            let n = BLOCK.min(replicates - k * BLOCK);
            (0..n)
                .filter(|_| {
                    let s: i64 = d
                        .iter()
                        .map(|&x| if rng.gen::<bool>() { x } else { -x })
                        .sum();
                    s.abs() >= observed
                })
                .count()
        })
        .sum();
    Ok((1 + count) as f64 / (replicates + 1) as f64)
}

/// Exact sign-flip p-value by enumerating all `2^n` sign assignments of the
/// non-zero differences.
pub fn exact_permutation_p(a: &[bool], b: &[bool]) -> Result<f64> {
    let d = differences(a, b)?;
    if d.len() > MAX_EXACT {
        return Err(Error::OutOfRange {
            what: "differing pairs for exact enumeration",
            value: d.len(),
            min: 0,
            max: MAX_EXACT,
        });
    }
    let observed: i64 = d.iter().sum::<i64>().abs();
    let total = 1u64 << d.len();
    let hits = (0..total)
        .filter(|mask| {
            let s: i64 = d
                .iter()
                .enumerate()
                .map(|(i, &x)| if mask >> i & 1 == 1 { -x } else { x })
                .sum();
            s.abs() >= observed
        })
        .count();
    Ok(hits as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_vectors_give_one() {
        let a = [true, false, true];
        assert_eq!(paired_permutation_test(&a, &a, 100, 1).unwrap(), 1.0);
        assert_eq!(exact_permutation_p(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn four_wins() {
        let a = [true; 4];
        let b = [false; 4];
        assert_eq!(exact_permutation_p(&a, &b).unwrap(), 2.0 / 16.0);
        let p = paired_permutation_test(&a, &b, 20_000, 3).unwrap();
        assert!((p - 0.125).abs() < 0.01, "{p}");
    }

    #[test]
    fn errors() {
        assert!(paired_permutation_test(&[true], &[true, false], 10, 0).is_err());
        assert!(paired_permutation_test(&[true], &[false], 0, 0).is_err());
    }
}
