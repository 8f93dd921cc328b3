use crate::ops;
use crate::{Array, AutodiffError, Gradients, ParamId, ParamSet, Result};

/// Index of a node inside a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Param(ParamId),
    Constant,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Tanh(NodeId),
    Sigmoid(NodeId),
    MatVec(NodeId, NodeId),
    MatMul(NodeId, NodeId),
    AddRowBroadcast(NodeId, NodeId),
    Concat(Vec<NodeId>),
    Slice(NodeId, usize, usize),
    Row(NodeId, usize),
    Column(NodeId, usize),
    StackRows(Vec<NodeId>),
    LogSoftmax(NodeId),
    Pick(NodeId, usize),
    Sum(NodeId),
    LogSumExp(NodeId),
    CumLogSumExp(NodeId),
    RevCumLogSumExp(NodeId),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Param(_) => "param",
            Op::Constant => "constant",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::Tanh(_) => "tanh",
            Op::Sigmoid(_) => "sigmoid",
            Op::MatVec(..) => "matvec",
            Op::MatMul(..) => "matmul",
            Op::AddRowBroadcast(..) => "add_row_broadcast",
            Op::Concat(_) => "concat",
            Op::Slice(..) => "slice",
            Op::Row(..) => "row",
            Op::Column(..) => "column",
            Op::StackRows(_) => "stack_rows",
            Op::LogSoftmax(_) => "log_softmax",
            Op::Pick(..) => "pick",
            Op::Sum(_) => "sum",
            Op::LogSumExp(_) => "logsumexp",
            Op::CumLogSumExp(_) => "cum_logsumexp",
            Op::RevCumLogSumExp(_) => "rev_cum_logsumexp",
        }
    }
}

struct Node {
    op: Op,
    // `None` for parameter nodes, whose value lives in the parameter set.
    value: Option<Array>,
}

/// Tape of operations over arrays, in topological order.
///
/// Nodes can only reference earlier nodes, so the graph is acyclic by
/// construction and the backward pass is a single reverse sweep. Parameter
/// nodes borrow their values from the [`ParamSet`] instead of copying them.
pub struct Graph<'p> {
    params: &'p ParamSet,
    nodes: Vec<Node>,
    param_nodes: Vec<Option<NodeId>>,
    first_nonfinite: Option<NodeId>,
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamSet) -> Self {
        Graph {
            params,
            nodes: Vec::new(),
            param_nodes: vec![None; params.len()],
            first_nonfinite: None,
        }
    }

    pub fn params(&self) -> &'p ParamSet {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Array {
        let node = &self.nodes[id.0];
        match (&node.op, &node.value) {
            (Op::Param(p), _) => self.params.get(*p),
            (_, Some(v)) => v,
            (_, None) => unreachable!("non-parameter node without a value"),
        }
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        self.value(id).shape()
    }

    /// First node (in evaluation order) whose value contained NaN or ±∞.
    pub fn first_nonfinite(&self) -> Option<(usize, &'static str)> {
        self.first_nonfinite
            .map(|id| (id.0, self.nodes[id.0].op.name()))
    }

    fn push(&mut self, op: Op, value: Array) -> NodeId {
        let id = NodeId(self.nodes.len());
        if self.first_nonfinite.is_none() && !value.all_finite() {
            self.first_nonfinite = Some(id);
        }
        self.nodes.push(Node {
            op,
            value: Some(value),
        });
        id
    }

    /// Node for a trainable parameter; repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> NodeId {
        if let Some(n) = self.param_nodes.get(id.0).copied().flatten() {
            return n;
        }
        let node = NodeId(self.nodes.len());
        self.nodes.push(Node {
            op: Op::Param(id),
            value: None,
        });
        if id.0 >= self.param_nodes.len() {
            self.param_nodes.resize(id.0 + 1, None);
        }
        self.param_nodes[id.0] = Some(node);
        node
    }

    pub fn constant(&mut self, value: Array) -> NodeId {
        self.push(Op::Constant, value)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.zip_with(a, b, "add", |x, y| x + y);
        self.push(Op::Add(a, b), v)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.zip_with(a, b, "sub", |x, y| x - y);
        self.push(Op::Sub(a, b), v)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.zip_with(a, b, "mul", |x, y| x * y);
        self.push(Op::Mul(a, b), v)
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        let v = self.map(a, |x| x * factor);
        self.push(Op::Scale(a, factor), v)
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        self.scale(a, -1.0)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.map(a, f64::tanh);
        self.push(Op::Tanh(a), v)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let v = self.map(a, ops::sigmoid);
        self.push(Op::Sigmoid(a), v)
    }

    /// `W x` with `W: [m, n]`, `x: [n]`.
    pub fn matvec(&mut self, w: NodeId, x: NodeId) -> NodeId {
        let v = Array::vector(ops::matvec(self.value(w), self.value(x).data()));
        self.push(Op::MatVec(w, x), v)
    }

    /// `A B` with `A: [m, k]`, `B: [k, n]`.
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = ops::matmul(self.value(a), self.value(b));
        self.push(Op::MatMul(a, b), v)
    }

    /// Adds vector `b: [n]` to every row of `x: [m, n]`.
    pub fn add_row_broadcast(&mut self, x: NodeId, b: NodeId) -> NodeId {
        let v = ops::add_row_broadcast(self.value(x), self.value(b).data());
        self.push(Op::AddRowBroadcast(x, b), v)
    }

    /// Concatenates 1-D nodes end to end.
    pub fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        let mut data = Vec::new();
        for &p in parts {
            let v = self.value(p);
            assert!(v.shape().len() <= 1, "concat expects vectors");
            data.extend_from_slice(v.data());
        }
        self.push(Op::Concat(parts.to_vec()), Array::vector(data))
    }

    pub fn slice(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        let v = Array::vector(self.value(a).data()[start..start + len].to_vec());
        self.push(Op::Slice(a, start, len), v)
    }

    /// Row `i` of a matrix (embedding lookup).
    pub fn row(&mut self, m: NodeId, i: usize) -> NodeId {
        let v = Array::vector(self.value(m).row(i).to_vec());
        self.push(Op::Row(m, i), v)
    }

    /// Column `j` of a matrix.
    pub fn column(&mut self, m: NodeId, j: usize) -> NodeId {
        let x = self.value(m);
        let v = Array::vector((0..x.rows()).map(|i| x.get2(i, j)).collect());
        self.push(Op::Column(m, j), v)
    }

    /// Stacks equal-length vectors as the rows of a matrix.
    pub fn stack_rows(&mut self, rows: &[NodeId]) -> NodeId {
        assert!(!rows.is_empty(), "stack_rows of nothing");
        let n = self.value(rows[0]).len();
        let mut data = Vec::with_capacity(n * rows.len());
        for &r in rows {
            let v = self.value(r);
            assert_eq!(v.len(), n, "stack_rows: ragged rows");
            data.extend_from_slice(v.data());
        }
        self.push(
            Op::StackRows(rows.to_vec()),
            Array::matrix(rows.len(), n, data),
        )
    }

    /// Log-softmax over the last axis (each row of a matrix independently).
    pub fn log_softmax(&mut self, a: NodeId) -> NodeId {
        let v = ops::log_softmax_last(self.value(a));
        self.push(Op::LogSoftmax(a), v)
    }

    /// Scalar entry `i` of a flattened array.
    pub fn pick(&mut self, a: NodeId, i: usize) -> NodeId {
        let v = Array::scalar(self.value(a).data()[i]);
        self.push(Op::Pick(a, i), v)
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let v = Array::scalar(self.value(a).sum());
        self.push(Op::Sum(a), v)
    }

    pub fn logsumexp(&mut self, a: NodeId) -> NodeId {
        let v = Array::scalar(ops::logsumexp(self.value(a).data()));
        self.push(Op::LogSumExp(a), v)
    }

    pub fn cum_logsumexp(&mut self, a: NodeId) -> NodeId {
        let v = Array::vector(ops::cum_logsumexp(self.value(a).data()));
        self.push(Op::CumLogSumExp(a), v)
    }

    pub fn rev_cum_logsumexp(&mut self, a: NodeId) -> NodeId {
        let v = Array::vector(ops::rev_cum_logsumexp(self.value(a).data()));
        self.push(Op::RevCumLogSumExp(a), v)
    }

    /// Sum of several scalar (or same-shaped) nodes.
    pub fn add_all(&mut self, items: &[NodeId]) -> NodeId {
        assert!(!items.is_empty(), "add_all of nothing");
        let mut acc = items[0];
        for &n in &items[1..] {
            acc = self.add(acc, n);
        }
        acc
    }

    fn map(&self, a: NodeId, f: impl Fn(f64) -> f64) -> Array {
        let x = self.value(a);
        Array::new(x.shape().to_vec(), x.data().iter().map(|&v| f(v)).collect())
    }

    fn zip_with(&self, a: NodeId, b: NodeId, what: &str, f: impl Fn(f64, f64) -> f64) -> Array {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.shape(), y.shape(), "{what}: shape mismatch");
        Array::new(
            x.shape().to_vec(),
            x.data()
                .iter()
                .zip(y.data())
                .map(|(&p, &q)| f(p, q))
                .collect(),
        )
    }

    /// Reverse sweep from `output`, seeding it with `seed` (same shape).
    ///
    /// Returns the gradient of every parameter reachable from `output`.
    pub fn backward_with_seed(&self, output: NodeId, seed: Array) -> Gradients {
        let mut grads: Vec<Option<Array>> = vec![None; output.0 + 1];
        grads[output.0] = Some(seed);
        let mut out = Gradients::for_params(self.params);

        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Param(p) => out.accumulate(*p, &g),
                Op::Constant => {}
                Op::Add(a, b) => {
                    acc(&mut grads, *a, || g.clone());
                    acc(&mut grads, *b, || g.clone());
                }
                Op::Sub(a, b) => {
                    acc(&mut grads, *a, || g.clone());
                    acc(&mut grads, *b, || negated(&g));
                }
                Op::Mul(a, b) => {
                    let (x, y) = (self.value(*a), self.value(*b));
                    acc(&mut grads, *a, || hadamard(&g, y));
                    acc(&mut grads, *b, || hadamard(&g, x));
                }
                Op::Scale(a, f) => {
                    let f = *f;
                    acc(&mut grads, *a, || {
                        let mut d = g.clone();
                        d.scale_in_place(f);
                        d
                    });
                }
                Op::Tanh(a) => {
                    let y = node.value.as_ref().unwrap();
                    acc(&mut grads, *a, || {
                        elementwise(&g, y, |gv, yv| gv * (1.0 - yv * yv))
                    });
                }
                Op::Sigmoid(a) => {
                    let y = node.value.as_ref().unwrap();
                    acc(&mut grads, *a, || {
                        elementwise(&g, y, |gv, yv| gv * yv * (1.0 - yv))
                    });
                }
                Op::MatVec(w, x) => {
                    let (wv, xv) = (self.value(*w), self.value(*x));
                    let (m, n) = (wv.rows(), wv.cols());
                    acc(&mut grads, *w, || {
                        let mut d = vec![0.0; m * n];
                        for i in 0..m {
                            let gi = g.data()[i];
                            if gi == 0.0 {
                                continue;
                            }
                            for (o, xj) in d[i * n..(i + 1) * n].iter_mut().zip(xv.data()) {
                                *o = gi * xj;
                            }
                        }
                        Array::matrix(m, n, d)
                    });
                    acc(&mut grads, *x, || {
                        let mut d = vec![0.0; n];
                        for i in 0..m {
                            let gi = g.data()[i];
                            if gi == 0.0 {
                                continue;
                            }
                            for (o, wij) in d.iter_mut().zip(wv.row(i)) {
                                *o += gi * wij;
                            }
                        }
                        Array::vector(d)
                    });
                }
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    acc(&mut grads, *a, || ops::matmul(&g, &transpose(bv)));
                    acc(&mut grads, *b, || ops::matmul(&transpose(av), &g));
                }
                Op::AddRowBroadcast(x, b) => {
                    acc(&mut grads, *x, || g.clone());
                    acc(&mut grads, *b, || {
                        let n = g.cols();
                        let mut d = vec![0.0; n];
                        for row in g.data().chunks(n) {
                            for (o, v) in d.iter_mut().zip(row) {
                                *o += v;
                            }
                        }
                        Array::vector(d)
                    });
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let len = self.value(p).len();
                        let shape = self.value(p).shape().to_vec();
                        let slice = g.data()[offset..offset + len].to_vec();
                        acc(&mut grads, p, || Array::new(shape, slice));
                        offset += len;
                    }
                }
                Op::Slice(a, start, len) => {
                    let src = self.value(*a);
                    acc(&mut grads, *a, || {
                        let mut d = Array::zeros(src.shape());
                        d.data_mut()[*start..start + len].copy_from_slice(g.data());
                        d
                    });
                }
                Op::Row(m, i) => {
                    let src = self.value(*m);
                    let c = src.cols();
                    acc(&mut grads, *m, || {
                        let mut d = Array::zeros(src.shape());
                        d.data_mut()[i * c..(i + 1) * c].copy_from_slice(g.data());
                        d
                    });
                }
                Op::Column(m, j) => {
                    let src = self.value(*m);
                    let c = src.cols();
                    acc(&mut grads, *m, || {
                        let mut d = Array::zeros(src.shape());
                        for (r, gv) in g.data().iter().enumerate() {
                            d.data_mut()[r * c + j] = *gv;
                        }
                        d
                    });
                }
                Op::StackRows(rows) => {
                    let n = g.cols();
                    for (r, &p) in rows.iter().enumerate() {
                        let shape = self.value(p).shape().to_vec();
                        let slice = g.data()[r * n..(r + 1) * n].to_vec();
                        acc(&mut grads, p, || Array::new(shape, slice));
                    }
                }
                Op::LogSoftmax(a) => {
                    let y = node.value.as_ref().unwrap();
                    let width = *y.shape().last().unwrap_or(&1);
                    acc(&mut grads, *a, || {
                        let mut d = Vec::with_capacity(y.len());
                        for (yr, gr) in y.data().chunks(width).zip(g.data().chunks(width)) {
                            let gsum: f64 = gr.iter().sum();
                            d.extend(yr.iter().zip(gr).map(|(yv, gv)| gv - yv.exp() * gsum));
                        }
                        Array::new(y.shape().to_vec(), d)
                    });
                }
                Op::Pick(a, i) => {
                    let src = self.value(*a);
                    acc(&mut grads, *a, || {
                        let mut d = Array::zeros(src.shape());
                        d.data_mut()[*i] = g.item();
                        d
                    });
                }
                Op::Sum(a) => {
                    let src = self.value(*a);
                    acc(&mut grads, *a, || Array::filled(src.shape(), g.item()));
                }
                Op::LogSumExp(a) => {
                    let x = self.value(*a);
                    let z = node.value.as_ref().unwrap().item();
                    let gv = g.item();
                    acc(&mut grads, *a, || {
                        Array::new(
                            x.shape().to_vec(),
                            x.data().iter().map(|v| gv * (v - z).exp()).collect(),
                        )
                    });
                }
                Op::CumLogSumExp(a) => {
                    // d y_i / d x_k = exp(x_k - y_i) for k <= i.
                    let x = self.value(*a).data();
                    let y = node.value.as_ref().unwrap().data();
                    let n = x.len();
                    acc(&mut grads, *a, || {
                        let d = (0..n)
                            .map(|k| {
                                (k..n)
                                    .map(|i| g.data()[i] * (x[k] - y[i]).exp())
                                    .sum::<f64>()
                            })
                            .collect();
                        Array::vector(d)
                    });
                }
                Op::RevCumLogSumExp(a) => {
                    // d y_i / d x_k = exp(x_k - y_i) for k >= i.
                    let x = self.value(*a).data();
                    let y = node.value.as_ref().unwrap().data();
                    let n = x.len();
                    acc(&mut grads, *a, || {
                        let d = (0..n)
                            .map(|k| {
                                (0..=k)
                                    .map(|i| g.data()[i] * (x[k] - y[i]).exp())
                                    .sum::<f64>()
                            })
                            .collect();
                        Array::vector(d)
                    });
                }
            }
        }
        out
    }

    /// Backward pass from a scalar output.
    pub fn backward(&self, output: NodeId) -> Result<Gradients> {
        let shape = self.shape(output).to_vec();
        if !self.value(output).is_scalar() {
            return Err(AutodiffError::NonScalarOutput {
                node: output.0,
                shape,
            });
        }
        if let Some((node, op)) = self.first_nonfinite() {
            if node <= output.0 {
                return Err(AutodiffError::NonFinite { node, op });
            }
        }
        Ok(self.backward_with_seed(output, Array::filled(&shape, 1.0)))
    }
}

/// Loss value and parameter gradients for a scalar node of `graph`.
pub fn evaluate_with_gradients(graph: &Graph<'_>, output: NodeId) -> Result<(f64, Gradients)> {
    let grads = graph.backward(output)?;
    Ok((graph.value(output).item(), grads))
}

fn acc(grads: &mut [Option<Array>], id: NodeId, make: impl FnOnce() -> Array) {
    let d = make();
    match &mut grads[id.0] {
        Some(g) => g.add_assign(&d),
        slot @ None => *slot = Some(d),
    }
}

fn negated(g: &Array) -> Array {
    let mut d = g.clone();
    d.scale_in_place(-1.0);
    d
}

fn hadamard(a: &Array, b: &Array) -> Array {
    elementwise(a, b, |x, y| x * y)
}

fn elementwise(a: &Array, b: &Array, f: impl Fn(f64, f64) -> f64) -> Array {
    Array::new(
        a.shape().to_vec(),
        a.data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| f(x, y))
            .collect(),
    )
}

fn transpose(a: &Array) -> Array {
    let (m, n) = (a.rows(), a.cols());
    let mut d = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            d[j * m + i] = a.get2(i, j);
        }
    }
    Array::matrix(n, m, d)
}
