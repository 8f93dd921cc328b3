use crate::{Array, AutodiffError, Gradients, ParamSet, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam optimiser state: first and second moments per parameter plus the
/// step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    t: u64,
    m: Vec<Array>,
    v: Vec<Array>,
}

impl Adam {
    pub fn new(params: &ParamSet, config: AdamConfig) -> Self {
        let zeros = |p: &ParamSet| {
            p.iter()
                .map(|(_, _, a)| Array::zeros(a.shape()))
                .collect::<Vec<_>>()
        };
        Adam {
            config,
            t: 0,
            m: zeros(params),
            v: zeros(params),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn lr(&self) -> f64 {
        self.config.lr
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.config.lr = lr;
    }

    pub fn first_moment(&self, index: usize) -> &Array {
        &self.m[index]
    }

    pub fn second_moment(&self, index: usize) -> &Array {
        &self.v[index]
    }

    /// One bias-corrected Adam update. Parameters without a gradient are
    /// treated as having a zero gradient (their moments still decay).
    pub fn step(&mut self, params: &mut ParamSet, grads: &Gradients) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(AutodiffError::ShapeMismatch {
                what: "parameter count".into(),
                expected: vec![self.m.len()],
                actual: vec![params.len()],
            });
        }
        for (id, g) in grads.iter() {
            let p = params.get(id);
            if p.shape() != g.shape() {
                return Err(AutodiffError::ShapeMismatch {
                    what: params.name(id).to_string(),
                    expected: p.shape().to_vec(),
                    actual: g.shape().to_vec(),
                });
            }
        }

        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.t as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);

        for id in params.ids().collect::<Vec<_>>() {
            let m = self.m[id.0].data_mut();
            let v = self.v[id.0].data_mut();
            let p = params.get_mut(id).data_mut();
            match grads.get(id) {
                Some(g) => {
                    for (((pi, mi), vi), gi) in p.iter_mut().zip(m).zip(v).zip(g.data()) {
                        *mi = beta1 * *mi + (1.0 - beta1) * gi;
                        *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                        let m_hat = *mi / bc1;
                        let v_hat = *vi / bc2;
                        *pi -= lr * m_hat / (v_hat.sqrt() + eps);
                    }
                }
                None => {
                    for ((pi, mi), vi) in p.iter_mut().zip(m).zip(v) {
                        *mi *= beta1;
                        *vi *= beta2;
                        if *mi != 0.0 {
                            let m_hat = *mi / bc1;
                            let v_hat = *vi / bc2;
                            *pi -= lr * m_hat / (v_hat.sqrt() + eps);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn global_norm(grads: &Gradients) -> f64 {
    grads
        .iter()
        .map(|(_, g)| g.squared_norm())
        .sum::<f64>()
        .sqrt()
}

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_by_global_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    assert!(max_norm > 0.0, "max_norm must be positive");
    let norm = global_norm(grads);
    if norm > max_norm {
        grads.scale(max_norm / norm);
    }
    norm
}
