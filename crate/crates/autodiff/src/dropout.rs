use rand::Rng;

use crate::{Array, AutodiffError, Graph, NodeId, Result};

/// Whether stochastic layers are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Inference,
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(AutodiffError::InvalidDropoutRate(rate));
    }
    Ok(())
}

fn mask<R: Rng + ?Sized>(shape: &[usize], rate: f64, rng: &mut R) -> Array {
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| if rng.gen::<f64>() < keep { scale } else { 0.0 })
        .collect();
    Array::new(shape.to_vec(), data)
}

/// Inverted dropout on a plain array.
///
/// In training mode every entry is zeroed with probability `rate` and the
/// survivors are scaled by `1 / (1 - rate)`; inference mode returns the input
/// untouched.
pub fn dropout<R: Rng + ?Sized>(
    input: &Array,
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<Array> {
    check_rate(rate)?;
    if mode == Mode::Inference || rate == 0.0 {
        return Ok(input.clone());
    }
    let m = mask(input.shape(), rate, rng);
    Ok(Array::new(
        input.shape().to_vec(),
        input
            .data()
            .iter()
            .zip(m.data())
            .map(|(x, k)| x * k)
            .collect(),
    ))
}

impl Graph<'_> {
    /// Inverted dropout as a graph operation. Inference mode (or rate 0)
    /// returns `x` itself, so no node is added.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        x: NodeId,
        rate: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Result<NodeId> {
        check_rate(rate)?;
        if mode == Mode::Inference || rate == 0.0 {
            return Ok(x);
        }
        let m = mask(self.shape(x), rate, rng);
        let m = self.constant(m);
        Ok(self.mul(x, m))
    }
}
