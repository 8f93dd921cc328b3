use rand::Rng;

use crate::{ops, Array, AutodiffError, Graph, NodeId, ParamId, ParamSet, Result};

/// Weights of one LSTM direction.
///
/// Gate pre-activations are stacked as `[input; forget; candidate; output]`
/// in `w_ih: [4H, D]`, `w_hh: [4H, H]` and `bias: [4H]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub bias: ParamId,
}

/// Hidden and cell state after one step.
#[derive(Debug, Clone, Copy)]
pub struct LstmState {
    pub h: NodeId,
    pub c: NodeId,
}

impl LstmParams {
    /// Registers `{prefix}.w_ih`, `{prefix}.w_hh` and `{prefix}.bias`, drawn
    /// from `U[-1/√H, 1/√H]`.
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Self {
        let k = 1.0 / (hidden_dim as f64).sqrt();
        let g = 4 * hidden_dim;
        let w_ih = params.add_uniform(format!("{prefix}.w_ih"), &[g, input_dim], k, rng);
        let w_hh = params.add_uniform(format!("{prefix}.w_hh"), &[g, hidden_dim], k, rng);
        let bias = params.add_uniform(format!("{prefix}.bias"), &[g], k, rng);
        LstmParams {
            input_dim,
            hidden_dim,
            w_ih,
            w_hh,
            bias,
        }
    }

    /// Looks up previously registered weights by prefix.
    pub fn lookup(params: &ParamSet, prefix: &str) -> Option<Self> {
        let w_ih = params.id(&format!("{prefix}.w_ih"))?;
        let w_hh = params.id(&format!("{prefix}.w_hh"))?;
        let bias = params.id(&format!("{prefix}.bias"))?;
        let shape = params.get(w_ih).shape();
        Some(LstmParams {
            input_dim: shape[1],
            hidden_dim: shape[0] / 4,
            w_ih,
            w_hh,
            bias,
        })
    }

    pub fn zero_state(&self, graph: &mut Graph<'_>) -> LstmState {
        let h = graph.constant(Array::zeros(&[self.hidden_dim]));
        let c = graph.constant(Array::zeros(&[self.hidden_dim]));
        LstmState { h, c }
    }

    /// One recurrence step.
    pub fn step(&self, graph: &mut Graph<'_>, x: NodeId, state: LstmState) -> LstmState {
        let hd = self.hidden_dim;
        let w_ih = graph.param(self.w_ih);
        let w_hh = graph.param(self.w_hh);
        let b = graph.param(self.bias);
        let xi = graph.matvec(w_ih, x);
        let hh = graph.matvec(w_hh, state.h);
        let pre = graph.add(xi, hh);
        let pre = graph.add(pre, b);
        let i = graph.slice(pre, 0, hd);
        let f = graph.slice(pre, hd, hd);
        let g = graph.slice(pre, 2 * hd, hd);
        let o = graph.slice(pre, 3 * hd, hd);
        let i = graph.sigmoid(i);
        let f = graph.sigmoid(f);
        let g = graph.tanh(g);
        let o = graph.sigmoid(o);
        let keep = graph.mul(f, state.c);
        let write = graph.mul(i, g);
        let c = graph.add(keep, write);
        let tc = graph.tanh(c);
        let h = graph.mul(o, tc);
        LstmState { h, c }
    }

    /// Gradient-free step on plain vectors, returning `(h, c)`.
    pub fn step_values(
        &self,
        params: &ParamSet,
        x: &[f64],
        h: &[f64],
        c: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let hd = self.hidden_dim;
        let xi = ops::matvec(params.get(self.w_ih), x);
        let hh = ops::matvec(params.get(self.w_hh), h);
        let pre: Vec<f64> = xi
            .iter()
            .zip(&hh)
            .zip(params.get(self.bias).data())
            .map(|((a, b), bias)| a + b + bias)
            .collect();
        let mut h_out = vec![0.0; hd];
        let mut c_out = vec![0.0; hd];
        for k in 0..hd {
            let i = ops::sigmoid(pre[k]);
            let f = ops::sigmoid(pre[hd + k]);
            let g = pre[2 * hd + k].tanh();
            let o = ops::sigmoid(pre[3 * hd + k]);
            c_out[k] = f * c[k] + i * g;
            h_out[k] = o * c_out[k].tanh();
        }
        (h_out, c_out)
    }

    fn check_inputs(&self, graph: &Graph<'_>, inputs: &[NodeId]) -> Result<()> {
        for (position, &x) in inputs.iter().enumerate() {
            let shape = graph.shape(x);
            if shape.len() != 1 || shape[0] != self.input_dim {
                return Err(AutodiffError::DimensionMismatch {
                    position,
                    expected: self.input_dim,
                    actual: shape.iter().product(),
                });
            }
        }
        Ok(())
    }
}

/// Runs one direction over `inputs` from a zero state and returns the hidden
/// state at every position, in input order (so for `reverse` the state at
/// position `t` has consumed `inputs[t..]`).
pub fn lstm_sequence(
    graph: &mut Graph<'_>,
    inputs: &[NodeId],
    params: &LstmParams,
    reverse: bool,
) -> Result<Vec<NodeId>> {
    params.check_inputs(graph, inputs)?;
    let mut out = vec![None; inputs.len()];
    if inputs.is_empty() {
        return Ok(Vec::new());
    }
    let mut state = params.zero_state(graph);
    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new((0..inputs.len()).rev())
    } else {
        Box::new(0..inputs.len())
    };
    for t in order {
        state = params.step(graph, inputs[t], state);
        out[t] = Some(state.h);
    }
    Ok(out.into_iter().map(Option::unwrap).collect())
}

/// Bidirectional LSTM: output `t` is `[forward h_t ; backward h_t]`.
pub fn bilstm(
    graph: &mut Graph<'_>,
    inputs: &[NodeId],
    forward: &LstmParams,
    backward: &LstmParams,
) -> Result<Vec<NodeId>> {
    let fwd = lstm_sequence(graph, inputs, forward, false)?;
    let bwd = lstm_sequence(graph, inputs, backward, true)?;
    Ok(fwd
        .into_iter()
        .zip(bwd)
        .map(|(f, b)| graph.concat(&[f, b]))
        .collect())
}

/// Gradient-free [`lstm_sequence`].
pub fn lstm_sequence_values(
    params: &ParamSet,
    inputs: &[Vec<f64>],
    lstm: &LstmParams,
    reverse: bool,
) -> Vec<Vec<f64>> {
    let hd = lstm.hidden_dim;
    let mut out = vec![Vec::new(); inputs.len()];
    let (mut h, mut c) = (vec![0.0; hd], vec![0.0; hd]);
    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new((0..inputs.len()).rev())
    } else {
        Box::new(0..inputs.len())
    };
    for t in order {
        (h, c) = lstm.step_values(params, &inputs[t], &h, &c);
        out[t] = h.clone();
    }
    out
}

/// Gradient-free [`bilstm`].
pub fn bilstm_values(
    params: &ParamSet,
    inputs: &[Vec<f64>],
    forward: &LstmParams,
    backward: &LstmParams,
) -> Vec<Vec<f64>> {
    let fwd = lstm_sequence_values(params, inputs, forward, false);
    let bwd = lstm_sequence_values(params, inputs, backward, true);
    fwd.into_iter()
        .zip(bwd)
        .map(|(mut f, b)| {
            f.extend(b);
            f
        })
        .collect()
}
