use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::kernels::{log_softmax_into, log_sum_exp};
use super::{GradError, Tensor};

/// Handle to a node of one [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

impl NodeId {
    /// Placeholder used by errors that are not tied to a graph node.
    pub const NONE: NodeId = NodeId(usize::MAX);

    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == NodeId::NONE {
            f.write_str("-")
        } else {
            write!(f, "#{}", self.0)
        }
    }
}

/// Primitive operations.
#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    /// Input slot bound at evaluation time.
    Leaf { differentiable: bool },
    /// `input (B, n) · weight (n, m) + bias (m)`, the bias broadcast over rows.
    Affine {
        input: NodeId,
        weight: NodeId,
        bias: NodeId,
    },
    Relu(NodeId),
    Add(NodeId, NodeId),
    Scale(NodeId, f64),
    Mul(NodeId, NodeId),
    /// Sum of all elements, rank 0 result.
    Sum(NodeId),
    /// Mean of all elements, rank 0 result.
    Mean(NodeId),
    Log(NodeId),
    Exp(NodeId),
    /// Maximum along `axis` of a rank 1 or rank 2 tensor.
    MaxReduce { input: NodeId, axis: usize },
    /// Batch mean of `-log softmax(logits)[label]`. `labels` is a `(B,)` leaf of
    /// class indices stored as floats.
    SoftmaxCrossEntropy { logits: NodeId, labels: NodeId },
    /// Batch mean of `KL(softmax(teacher/τ) ‖ softmax(student/τ))`.
    KlTemperature {
        student: NodeId,
        teacher: NodeId,
        tau: f64,
    },
    Clamp { input: NodeId, lo: f64, hi: f64 },
}

impl Op {
    fn inputs(&self) -> Vec<NodeId> {
        match *self {
            Op::Leaf { .. } => Vec::new(),
            Op::Affine {
                input,
                weight,
                bias,
            } => vec![input, weight, bias],
            Op::Relu(a)
            | Op::Scale(a, _)
            | Op::Sum(a)
            | Op::Mean(a)
            | Op::Log(a)
            | Op::Exp(a)
            | Op::MaxReduce { input: a, .. }
            | Op::Clamp { input: a, .. } => vec![a],
            Op::Add(a, b) | Op::Mul(a, b) => vec![a, b],
            Op::SoftmaxCrossEntropy { logits, labels } => vec![logits, labels],
            Op::KlTemperature {
                student, teacher, ..
            } => vec![student, teacher],
        }
    }
}

#[derive(Clone, Debug)]
enum Saved {
    None,
    /// Row-wise softmax probabilities.
    Probs(Vec<f64>),
    /// Teacher/student log-probabilities and per-row divergences.
    Kl {
        log_teacher: Vec<f64>,
        log_student: Vec<f64>,
        rows: Vec<f64>,
    },
    Argmax(Vec<usize>),
}

/// Leaf values for one evaluation.
#[derive(Clone, Debug, Default)]
pub struct Bindings {
    entries: Vec<(NodeId, Tensor)>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Binds (or rebinds) `leaf` to `value`.
    pub fn bind(&mut self, leaf: NodeId, value: Tensor) -> &mut Self {
        match self.entries.iter_mut().find(|(id, _)| *id == leaf) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((leaf, value)),
        }
        self
    }

    pub fn with(mut self, leaf: NodeId, value: Tensor) -> Self {
        self.bind(leaf, value);
        self
    }

    pub fn get(&self, leaf: NodeId) -> Option<&Tensor> {
        self.entries.iter().find(|(id, _)| *id == leaf).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, leaf: NodeId) -> Option<&mut Tensor> {
        self.entries
            .iter_mut()
            .find(|(id, _)| *id == leaf)
            .map(|(_, t)| t)
    }
}

/// Gradients of a scalar loss keyed by differentiable leaf.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    by_leaf: BTreeMap<NodeId, Tensor>,
}

impl Gradients {
    pub fn get(&self, leaf: NodeId) -> Option<&Tensor> {
        self.by_leaf.get(&leaf)
    }

    pub fn take(&mut self, leaf: NodeId) -> Option<Tensor> {
        self.by_leaf.remove(&leaf)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &Tensor)> {
        self.by_leaf.iter()
    }

    pub fn len(&self) -> usize {
        self.by_leaf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_leaf.is_empty()
    }
}

/// Computation graph over [`Tensor`] values.
///
/// Nodes are appended in topological order, so a node's inputs always have
/// smaller ids. Shapes are only known once leaves are bound, which lets one
/// graph be reused across batch sizes.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    ops: Vec<Op>,
    needs_grad: Vec<bool>,
    values: Vec<Option<Tensor>>,
    saved: Vec<Saved>,
    evaluated: Option<usize>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn op(&self, node: NodeId) -> &Op {
        &self.ops[node.0]
    }

    /// Cached value of `node` from the last forward pass.
    pub fn value(&self, node: NodeId) -> Option<&Tensor> {
        match self.evaluated {
            Some(upto) if node.0 <= upto => self.values[node.0].as_ref(),
            _ => None,
        }
    }

    fn push(&mut self, op: Op) -> NodeId {
        let inputs = op.inputs();
        for id in &inputs {
            assert!(id.0 < self.ops.len(), "node {id} does not belong to this graph");
        }
        let needs = match op {
            Op::Leaf { differentiable } => differentiable,
            // Labels never carry gradient.
            Op::SoftmaxCrossEntropy { logits, .. } => self.needs_grad[logits.0],
            _ => inputs.iter().any(|id| self.needs_grad[id.0]),
        };
        self.ops.push(op);
        self.needs_grad.push(needs);
        self.values.push(None);
        self.saved.push(Saved::None);
        NodeId(self.ops.len() - 1)
    }

    pub fn leaf(&mut self, differentiable: bool) -> NodeId {
        self.push(Op::Leaf { differentiable })
    }

    pub fn affine(&mut self, input: NodeId, weight: NodeId, bias: NodeId) -> NodeId {
        self.push(Op::Affine {
            input,
            weight,
            bias,
        })
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        self.push(Op::Relu(x))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Add(a, b))
    }

    pub fn scale(&mut self, x: NodeId, factor: f64) -> NodeId {
        self.push(Op::Scale(x, factor))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Mul(a, b))
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        self.push(Op::Sum(x))
    }

    pub fn mean(&mut self, x: NodeId) -> NodeId {
        self.push(Op::Mean(x))
    }

    pub fn log(&mut self, x: NodeId) -> NodeId {
        self.push(Op::Log(x))
    }

    pub fn exp(&mut self, x: NodeId) -> NodeId {
        self.push(Op::Exp(x))
    }

    pub fn max_reduce(&mut self, x: NodeId, axis: usize) -> NodeId {
        self.push(Op::MaxReduce { input: x, axis })
    }

    pub fn softmax_cross_entropy(&mut self, logits: NodeId, labels: NodeId) -> NodeId {
        self.push(Op::SoftmaxCrossEntropy { logits, labels })
    }

    pub fn kl_temperature(&mut self, student: NodeId, teacher: NodeId, tau: f64) -> NodeId {
        self.push(Op::KlTemperature {
            student,
            teacher,
            tau,
        })
    }

    pub fn clamp(&mut self, x: NodeId, lo: f64, hi: f64) -> NodeId {
        self.push(Op::Clamp { input: x, lo, hi })
    }

    /// Evaluates every node up to and including `output` and returns its value.
    pub fn forward(&mut self, bindings: &Bindings, output: NodeId) -> Result<&Tensor, GradError> {
        assert!(output.0 < self.ops.len(), "node {output} does not belong to this graph");
        self.evaluated = None;
        for (leaf, _) in &bindings.entries {
            if leaf.0 >= self.ops.len() || !matches!(self.ops[leaf.0], Op::Leaf { .. }) {
                return Err(GradError::NotALeaf { node: *leaf });
            }
        }
        for i in 0..=output.0 {
            let id = NodeId(i);
            let (value, saved) = match self.ops[i] {
                Op::Leaf { .. } => match bindings.get(id) {
                    Some(t) => (t.clone(), Saved::None),
                    None => return Err(GradError::UnboundLeaf { node: id }),
                },
                _ => self.eval_node(id)?,
            };
            if !value.is_finite() {
                return Err(GradError::NumericalOverflow { node: id });
            }
            self.values[i] = Some(value);
            self.saved[i] = saved;
        }
        self.evaluated = Some(output.0);
        Ok(self.values[output.0].as_ref().expect("just evaluated"))
    }

    fn val(&self, id: NodeId) -> &Tensor {
        self.values[id.0].as_ref().expect("inputs are evaluated first")
    }

    fn eval_node(&self, id: NodeId) -> Result<(Tensor, Saved), GradError> {
        let mismatch = |a: &Tensor, b: &Tensor| GradError::ShapeMismatch {
            node: id,
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        };
        let map = |x: &Tensor, f: &dyn Fn(f64) -> f64| {
            let data = x.data().iter().map(|&v| f(v)).collect();
            Tensor::new(x.shape().to_vec(), data).expect("same shape")
        };
        let out = match self.ops[id.0] {
            Op::Leaf { .. } => unreachable!("leaves are bound, not evaluated"),
            Op::Affine {
                input,
                weight,
                bias,
            } => {
                let (x, w, b) = (self.val(input), self.val(weight), self.val(bias));
                if x.rank() != 2 || w.rank() != 2 || x.shape()[1] != w.shape()[0] {
                    return Err(mismatch(x, w));
                }
                let (rows, n, m) = (x.shape()[0], w.shape()[0], w.shape()[1]);
                if b.shape() != [m] {
                    return Err(mismatch(w, b));
                }
                let (xd, wd, bd) = (x.data(), w.data(), b.data());
                let mut out = vec![0.0; rows * m];
                for r in 0..rows {
                    let o = &mut out[r * m..(r + 1) * m];
                    o.copy_from_slice(bd);
                    for (k, &xv) in xd[r * n..(r + 1) * n].iter().enumerate() {
                        if xv == 0.0 {
                            continue;
                        }
                        for (ov, &wv) in o.iter_mut().zip(&wd[k * m..(k + 1) * m]) {
                            *ov += xv * wv;
                        }
                    }
                }
                (Tensor::new(vec![rows, m], out)?, Saved::None)
            }
            Op::Relu(a) => (map(self.val(a), &|v| if v > 0.0 { v } else { 0.0 }), Saved::None),
            Op::Add(a, b) | Op::Mul(a, b) => {
                let (x, y) = (self.val(a), self.val(b));
                if x.shape() != y.shape() {
                    return Err(mismatch(x, y));
                }
                let mul = matches!(self.ops[id.0], Op::Mul(..));
                let data = x
                    .data()
                    .iter()
                    .zip(y.data())
                    .map(|(p, q)| if mul { p * q } else { p + q })
                    .collect();
                (Tensor::new(x.shape().to_vec(), data)?, Saved::None)
            }
            Op::Scale(a, f) => (map(self.val(a), &|v| v * f), Saved::None),
            Op::Sum(a) => (Tensor::scalar(self.val(a).data().iter().sum()), Saved::None),
            Op::Mean(a) => {
                let x = self.val(a);
                if x.is_empty() {
                    return Err(GradError::InvalidArgument {
                        node: id,
                        reason: "mean of an empty tensor",
                    });
                }
                let s: f64 = x.data().iter().sum();
                (Tensor::scalar(s / x.len() as f64), Saved::None)
            }
            Op::Log(a) => (map(self.val(a), &libm::log), Saved::None),
            Op::Exp(a) => (map(self.val(a), &libm::exp), Saved::None),
            Op::MaxReduce { input, axis } => {
                let x = self.val(input);
                let (rows, cols) = match x.rank() {
                    1 => (1, x.len()),
                    2 => (x.shape()[0], x.shape()[1]),
                    _ => {
                        return Err(GradError::InvalidArgument {
                            node: id,
                            reason: "max-reduce expects rank 1 or 2",
                        })
                    }
                };
                let reduce_rows = match (x.rank(), axis) {
                    (1, 0) | (2, 0) => x.rank() == 2,
                    (2, 1) => false,
                    _ => {
                        return Err(GradError::InvalidArgument {
                            node: id,
                            reason: "max-reduce axis out of range",
                        })
                    }
                };
                if rows == 0 || cols == 0 {
                    return Err(GradError::InvalidArgument {
                        node: id,
                        reason: "max-reduce of an empty axis",
                    });
                }
                let d = x.data();
                let (outer, inner, idx): (usize, usize, fn(usize, usize, usize) -> usize) =
                    if reduce_rows {
                        (cols, rows, |o, i, c| i * c + o)
                    } else {
                        (rows, cols, |o, i, c| o * c + i)
                    };
                let mut values = Vec::with_capacity(outer);
                let mut arg = Vec::with_capacity(outer);
                for o in 0..outer {
                    let mut best = idx(o, 0, cols);
                    for i in 1..inner {
                        let j = idx(o, i, cols);
                        if d[j] > d[best] {
                            best = j;
                        }
                    }
                    values.push(d[best]);
                    arg.push(best);
                }
                let shape = if x.rank() == 1 { vec![] } else { vec![outer] };
                (Tensor::new(shape, values)?, Saved::Argmax(arg))
            }
            Op::SoftmaxCrossEntropy { logits, labels } => {
                let (z, y) = (self.val(logits), self.val(labels));
                if z.rank() != 2 || y.shape() != [z.shape()[0]] {
                    return Err(mismatch(z, y));
                }
                let (rows, classes) = (z.shape()[0], z.shape()[1]);
                if rows == 0 {
                    return Err(GradError::InvalidArgument {
                        node: id,
                        reason: "empty batch",
                    });
                }
                let labels = label_indices(id, y, classes)?;
                let mut probs = vec![0.0; rows * classes];
                let mut total = 0.0;
                for r in 0..rows {
                    let row = z.row(r);
                    let lse = log_sum_exp(row);
                    total += lse - row[labels[r]];
                    for (p, &v) in probs[r * classes..(r + 1) * classes].iter_mut().zip(row) {
                        *p = libm::exp(v - lse);
                    }
                }
                (Tensor::scalar(total / rows as f64), Saved::Probs(probs))
            }
            Op::KlTemperature {
                student,
                teacher,
                tau,
            } => {
                if !(tau > 0.0) {
                    return Err(GradError::InvalidArgument {
                        node: id,
                        reason: "temperature must be positive",
                    });
                }
                let (s, t) = (self.val(student), self.val(teacher));
                if s.shape() != t.shape() || s.rank() != 2 {
                    return Err(mismatch(s, t));
                }
                let (rows, classes) = (s.shape()[0], s.shape()[1]);
                if rows == 0 {
                    return Err(GradError::InvalidArgument {
                        node: id,
                        reason: "empty batch",
                    });
                }
                let mut log_s = vec![0.0; rows * classes];
                let mut log_t = vec![0.0; rows * classes];
                let mut per_row = Vec::with_capacity(rows);
                for r in 0..rows {
                    let span = r * classes..(r + 1) * classes;
                    log_softmax_into(s.row(r), tau, &mut log_s[span.clone()]);
                    log_softmax_into(t.row(r), tau, &mut log_t[span.clone()]);
                    let kl: f64 = log_t[span.clone()]
                        .iter()
                        .zip(&log_s[span])
                        .map(|(&lt, &ls)| libm::exp(lt) * (lt - ls))
                        .sum();
                    per_row.push(kl);
                }
                let total: f64 = per_row.iter().sum();
                (
                    Tensor::scalar(total / rows as f64),
                    Saved::Kl {
                        log_teacher: log_t,
                        log_student: log_s,
                        rows: per_row,
                    },
                )
            }
            Op::Clamp { input, lo, hi } => (map(self.val(input), &|v| v.clamp(lo, hi)), Saved::None),
        };
        Ok(out)
    }

    /// Gradient of the scalar `loss` with respect to every differentiable leaf.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients, GradError> {
        let value = self
            .value(loss)
            .ok_or(GradError::BackwardBeforeForward { node: loss })?;
        if value.len() != 1 {
            return Err(GradError::NonScalarLoss {
                node: loss,
                shape: value.shape().to_vec(),
            });
        }
        let mut adjoints: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        adjoints[loss.0] = Some(Tensor::full(value.shape(), 1.0));
        for i in (0..=loss.0).rev() {
            if !self.needs_grad[i] {
                continue;
            }
            let Some(adj) = adjoints[i].take() else {
                continue;
            };
            if let Op::Leaf { .. } = self.ops[i] {
                adjoints[i] = Some(adj);
                continue;
            }
            self.propagate(NodeId(i), &adj, &mut adjoints);
        }
        let mut grads = Gradients::default();
        for i in 0..=loss.0 {
            if let Op::Leaf {
                differentiable: true,
            } = self.ops[i]
            {
                let g = adjoints[i]
                    .take()
                    .unwrap_or_else(|| Tensor::zeros(self.val(NodeId(i)).shape()));
                grads.by_leaf.insert(NodeId(i), g);
            }
        }
        Ok(grads)
    }

    fn propagate(&self, id: NodeId, adj: &Tensor, adjoints: &mut [Option<Tensor>]) {
        let mut accumulate = |target: NodeId, g: Tensor| match &mut adjoints[target.0] {
            Some(existing) => existing.add_assign(&g),
            slot @ None => *slot = Some(g),
        };
        let like = |x: &Tensor, data: Vec<f64>| Tensor::new(x.shape().to_vec(), data).expect("same shape");
        let needs = |n: NodeId| self.needs_grad[n.0];
        match self.ops[id.0] {
            Op::Leaf { .. } => {}
            Op::Affine {
                input,
                weight,
                bias,
            } => {
                let (x, w) = (self.val(input), self.val(weight));
                let (rows, n, m) = (x.shape()[0], w.shape()[0], w.shape()[1]);
                let (xd, wd, gd) = (x.data(), w.data(), adj.data());
                if needs(input) {
                    let mut gx = vec![0.0; rows * n];
                    for r in 0..rows {
                        let gr = &gd[r * m..(r + 1) * m];
                        for (k, gxv) in gx[r * n..(r + 1) * n].iter_mut().enumerate() {
                            *gxv = gr.iter().zip(&wd[k * m..(k + 1) * m]).map(|(a, b)| a * b).sum();
                        }
                    }
                    accumulate(input, like(x, gx));
                }
                if needs(weight) {
                    let mut gw = vec![0.0; n * m];
                    for r in 0..rows {
                        let gr = &gd[r * m..(r + 1) * m];
                        for (k, &xv) in xd[r * n..(r + 1) * n].iter().enumerate() {
                            if xv == 0.0 {
                                continue;
                            }
                            for (gwv, &g) in gw[k * m..(k + 1) * m].iter_mut().zip(gr) {
                                *gwv += xv * g;
                            }
                        }
                    }
                    accumulate(weight, like(w, gw));
                }
                if needs(bias) {
                    let mut gb = vec![0.0; m];
                    for r in 0..rows {
                        for (b, &g) in gb.iter_mut().zip(&gd[r * m..(r + 1) * m]) {
                            *b += g;
                        }
                    }
                    accumulate(bias, Tensor::vector(gb));
                }
            }
            Op::Relu(a) => {
                let x = self.val(a);
                let g = x
                    .data()
                    .iter()
                    .zip(adj.data())
                    .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
                    .collect();
                accumulate(a, like(x, g));
            }
            Op::Add(a, b) => {
                if needs(a) {
                    accumulate(a, adj.clone());
                }
                if needs(b) {
                    accumulate(b, adj.clone());
                }
            }
            Op::Scale(a, f) => {
                let g = adj.data().iter().map(|&g| g * f).collect();
                accumulate(a, like(adj, g));
            }
            Op::Mul(a, b) => {
                let (x, y) = (self.val(a), self.val(b));
                if needs(a) {
                    let g = adj.data().iter().zip(y.data()).map(|(g, v)| g * v).collect();
                    accumulate(a, like(x, g));
                }
                if needs(b) {
                    let g = adj.data().iter().zip(x.data()).map(|(g, v)| g * v).collect();
                    accumulate(b, like(y, g));
                }
            }
            Op::Sum(a) | Op::Mean(a) => {
                let x = self.val(a);
                let mut g = adj.data()[0];
                if matches!(self.ops[id.0], Op::Mean(_)) {
                    g /= x.len() as f64;
                }
                accumulate(a, Tensor::full(x.shape(), g));
            }
            Op::Log(a) => {
                let x = self.val(a);
                let g = adj.data().iter().zip(x.data()).map(|(g, v)| g / v).collect();
                accumulate(a, like(x, g));
            }
            Op::Exp(a) => {
                let y = self.val(id);
                let g = adj.data().iter().zip(y.data()).map(|(g, v)| g * v).collect();
                accumulate(a, like(y, g));
            }
            Op::MaxReduce { input, .. } => {
                let x = self.val(input);
                let Saved::Argmax(arg) = &self.saved[id.0] else {
                    unreachable!("max-reduce saves its argmax")
                };
                let mut g = vec![0.0; x.len()];
                for (&j, &a) in arg.iter().zip(adj.data()) {
                    g[j] += a;
                }
                accumulate(input, like(x, g));
            }
            Op::SoftmaxCrossEntropy { logits, labels } => {
                let z = self.val(logits);
                let Saved::Probs(probs) = &self.saved[id.0] else {
                    unreachable!("cross-entropy saves its probabilities")
                };
                let (rows, classes) = (z.shape()[0], z.shape()[1]);
                let scale = adj.data()[0] / rows as f64;
                let y = self.val(labels).data();
                let mut g = probs.clone();
                for r in 0..rows {
                    g[r * classes + y[r] as usize] -= 1.0;
                }
                for v in &mut g {
                    *v *= scale;
                }
                accumulate(logits, like(z, g));
            }
            Op::KlTemperature {
                student,
                teacher,
                tau,
            } => {
                let s = self.val(student);
                let Saved::Kl {
                    log_teacher,
                    log_student,
                    rows: per_row,
                } = &self.saved[id.0]
                else {
                    unreachable!("kl saves its log-probabilities")
                };
                let (rows, classes) = (s.shape()[0], s.shape()[1]);
                let scale = adj.data()[0] / (rows as f64 * tau);
                if needs(student) {
                    let g = log_student
                        .iter()
                        .zip(log_teacher)
                        .map(|(&ls, &lt)| scale * (libm::exp(ls) - libm::exp(lt)))
                        .collect();
                    accumulate(student, like(s, g));
                }
                if needs(teacher) {
                    let mut g = vec![0.0; rows * classes];
                    for r in 0..rows {
                        for c in r * classes..(r + 1) * classes {
                            let pt = libm::exp(log_teacher[c]);
                            g[c] = scale * pt * (log_teacher[c] - log_student[c] - per_row[r]);
                        }
                    }
                    accumulate(teacher, like(s, g));
                }
            }
            Op::Clamp { input, lo, hi } => {
                let x = self.val(input);
                let g = x
                    .data()
                    .iter()
                    .zip(adj.data())
                    .map(|(&v, &g)| if v >= lo && v <= hi { g } else { 0.0 })
                    .collect();
                accumulate(input, like(x, g));
            }
        }
    }
}

fn label_indices(node: NodeId, labels: &Tensor, classes: usize) -> Result<Vec<usize>, GradError> {
    labels
        .data()
        .iter()
        .map(|&l| {
            if l >= 0.0 && libm::trunc(l) == l && (l as usize) < classes {
                Ok(l as usize)
            } else {
                Err(GradError::InvalidLabel {
                    node,
                    label: l,
                    classes,
                })
            }
        })
        .collect()
}
