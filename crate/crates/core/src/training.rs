//! Shared mini-batch machinery for the tagger and the lemmatizer.

use morphlem_autodiff::{clip_by_global_norm, Adam, Gradients, Graph, NodeId, ParamSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::Result;

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Child seed for an independent stream (fold, replicate, ...).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finaliser over the pair
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sum of per-item losses and their summed gradients.
///
/// Each item gets its own graph and its own RNG seeded from `rng` in item
/// order, and the partial gradients are added in item order, so the result
/// does not depend on how rayon schedules the work.
pub fn batch_gradients<T, F>(
    params: &ParamSet,
    items: &[T],
    rng: &mut SeededRng,
    build: F,
) -> Result<(f64, Gradients)>
where
    T: Sync,
    F: Fn(&mut Graph<'_>, &T, &mut SeededRng) -> Result<Option<NodeId>> + Sync,
{
    let seeds: Vec<u64> = items.iter().map(|_| rng.gen()).collect();
    let parts: Vec<Result<Option<(f64, Gradients)>>> = items
        .par_iter()
        .zip(seeds.par_iter())
        .map(|(item, &seed)| {
            let mut item_rng = rng_from_seed(seed);
            let mut g = Graph::new(params);
            let Some(loss) = build(&mut g, item, &mut item_rng)? else {
                return Ok(None);
            };
            let grads = g.backward(loss)?;
            Ok(Some((g.value(loss).item(), grads)))
        })
        .collect();
    let mut total = 0.0;
    let mut grads = Gradients::for_params(params);
    for p in parts {
        if let Some((l, g)) = p? {
            total += l;
            grads.add_assign(&g);
        }
    }
    Ok((total, grads))
}

/// Averages, clips and applies one optimiser step.
pub fn apply_update(
    params: &mut ParamSet,
    adam: &mut Adam,
    mut grads: Gradients,
    count: usize,
    clip: Option<f64>,
) -> Result<()> {
    if count > 1 {
        grads.scale(1.0 / count as f64);
    }
    if let Some(max) = clip {
        clip_by_global_norm(&mut grads, max);
    }
    adam.step(params, &grads)?;
    Ok(())
}
