//! Feedforward relu classifiers over flat parameter vectors.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::grad::{Bindings, GradError, Graph, NodeId, Tensor};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(&'static str),
    #[error("input has {found} features, network expects {expected}")]
    InputDim { expected: usize, found: usize },
    #[error("parameter layout does not match the network spec")]
    LayoutMismatch,
    #[error(transparent)]
    Grad(#[from] GradError),
}

/// Architecture of a relu MLP: `input_dim → hidden... → num_classes`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub num_classes: usize,
}

impl NetworkSpec {
    pub fn new(input_dim: usize, hidden: Vec<usize>, num_classes: usize) -> Result<Self, NetError> {
        let spec = NetworkSpec {
            input_dim,
            hidden,
            num_classes,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.input_dim == 0 {
            return Err(NetError::InvalidSpec("input_dim must be positive"));
        }
        if self.hidden.contains(&0) {
            return Err(NetError::InvalidSpec("hidden widths must be positive"));
        }
        if self.num_classes < 2 {
            return Err(NetError::InvalidSpec("num_classes must be at least 2"));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every affine layer, output layer last.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut widths = Vec::with_capacity(self.hidden.len() + 2);
        widths.push(self.input_dim);
        widths.extend_from_slice(&self.hidden);
        widths.push(self.num_classes);
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }

    pub fn layout(&self) -> Vec<LayoutEntry> {
        let mut offset = 0;
        let mut layout = Vec::new();
        for (layer, (fan_in, fan_out)) in self.layer_dims().into_iter().enumerate() {
            layout.push(LayoutEntry {
                layer,
                kind: ParamKind::Weight,
                offset,
                shape: vec![fan_in, fan_out],
            });
            offset += fan_in * fan_out;
            layout.push(LayoutEntry {
                layer,
                kind: ParamKind::Bias,
                offset,
                shape: vec![fan_out],
            });
            offset += fan_out;
        }
        layout
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
}

/// Placement of one parameter tensor inside a [`ParamVector`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayoutEntry {
    pub layer: usize,
    pub kind: ParamKind,
    pub offset: usize,
    pub shape: Vec<usize>,
}

impl LayoutEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> core::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// All parameters of a network in one flat vector. Weights are stored
/// `(fan_in, fan_out)` row-major, each followed by its bias.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    layout: Vec<LayoutEntry>,
}

impl ParamVector {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        ParamVector {
            values: vec![0.0; spec.param_count()],
            layout: spec.layout(),
        }
    }

    /// Wraps raw values in the layout of `spec`.
    pub fn from_values(spec: &NetworkSpec, values: Vec<f64>) -> Result<Self, NetError> {
        if values.len() != spec.param_count() {
            return Err(NetError::LayoutMismatch);
        }
        Ok(ParamVector {
            values,
            layout: spec.layout(),
        })
    }

    /// Flattens per-layer tensors (weight, bias, weight, bias, ...).
    pub fn flatten(spec: &NetworkSpec, tensors: &[Tensor]) -> Result<Self, NetError> {
        let layout = spec.layout();
        if tensors.len() != layout.len() {
            return Err(NetError::LayoutMismatch);
        }
        let mut values = Vec::with_capacity(spec.param_count());
        for (t, entry) in tensors.iter().zip(&layout) {
            if t.shape() != entry.shape.as_slice() {
                return Err(NetError::LayoutMismatch);
            }
            values.extend_from_slice(t.data());
        }
        Ok(ParamVector { values, layout })
    }

    /// Inverse of [`ParamVector::flatten`].
    pub fn unflatten(&self) -> Vec<Tensor> {
        self.layout.iter().map(|e| self.tensor(e)).collect()
    }

    pub fn tensor(&self, entry: &LayoutEntry) -> Tensor {
        Tensor::new(entry.shape.clone(), self.values[entry.range()].to_vec()).expect("layout covers values")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn layout(&self) -> &[LayoutEntry] {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_layout(&self, other: &ParamVector) -> bool {
        self.layout == other.layout
    }

    pub fn zeros_like(&self) -> Self {
        ParamVector {
            values: vec![0.0; self.values.len()],
            layout: self.layout.clone(),
        }
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum())
    }

    pub(crate) fn check_spec(&self, spec: &NetworkSpec) -> Result<(), NetError> {
        if self.values.len() != spec.param_count() || self.layout != spec.layout() {
            return Err(NetError::LayoutMismatch);
        }
        Ok(())
    }
}

/// Fan-in scaled normal weights (`std = sqrt(2 / fan_in)`) and zero biases.
pub fn init_params(spec: &NetworkSpec, seed: u64) -> Result<ParamVector, NetError> {
    spec.validate()?;
    let mut params = ParamVector::zeros(spec);
    let mut rng = seed::rng(seed);
    for entry in spec.layout() {
        if entry.kind == ParamKind::Bias {
            continue;
        }
        let std = libm::sqrt(2.0 / entry.shape[0] as f64);
        let normal = Normal::new(0.0, std).expect("finite std");
        for v in &mut params.values[entry.range()] {
            *v = normal.sample(&mut rng);
        }
    }
    Ok(params)
}

/// Leaves and output of a classifier forward chain inside a [`Graph`].
#[derive(Clone, Debug)]
pub struct ParamLeaves {
    /// One leaf per layout entry, in layout order.
    pub leaves: Vec<NodeId>,
}

impl ParamLeaves {
    pub fn new(graph: &mut Graph, spec: &NetworkSpec, differentiable: bool) -> Self {
        let leaves = spec.layout().iter().map(|_| graph.leaf(differentiable)).collect();
        ParamLeaves { leaves }
    }

    pub fn bind(&self, bindings: &mut Bindings, params: &ParamVector) {
        for (leaf, entry) in self.leaves.iter().zip(params.layout()) {
            bindings.bind(*leaf, params.tensor(entry));
        }
    }

    /// Gathers the per-leaf gradients back into a flat vector.
    pub fn collect(&self, grads: &mut crate::grad::Gradients, like: &ParamVector) -> ParamVector {
        let mut out = like.zeros_like();
        for (leaf, entry) in self.leaves.iter().zip(like.layout()) {
            if let Some(g) = grads.take(*leaf) {
                out.values[entry.range()].copy_from_slice(g.data());
            }
        }
        out
    }
}

/// Appends `affine → relu → ... → affine` to `graph` and returns the logits node.
pub fn build_logits(graph: &mut Graph, params: &ParamLeaves, input: NodeId) -> NodeId {
    let layers = params.leaves.len() / 2;
    let mut h = input;
    for l in 0..layers {
        h = graph.affine(h, params.leaves[2 * l], params.leaves[2 * l + 1]);
        if l + 1 < layers {
            h = graph.relu(h);
        }
    }
    h
}

pub(crate) fn check_inputs(spec: &NetworkSpec, inputs: &Tensor) -> Result<(), NetError> {
    if inputs.rank() != 2 || inputs.shape()[1] != spec.input_dim {
        return Err(NetError::InputDim {
            expected: spec.input_dim,
            found: if inputs.rank() == 2 { inputs.shape()[1] } else { inputs.len() },
        });
    }
    Ok(())
}

/// Logits `(B, num_classes)` for `batch_inputs` `(B, input_dim)`.
pub fn predict_logits(spec: &NetworkSpec, params: &ParamVector, batch_inputs: &Tensor) -> Result<Tensor, NetError> {
    params.check_spec(spec)?;
    check_inputs(spec, batch_inputs)?;
    let mut graph = Graph::new();
    let leaves = ParamLeaves::new(&mut graph, spec, false);
    let input = graph.leaf(false);
    let logits = build_logits(&mut graph, &leaves, input);
    let mut bindings = Bindings::new();
    leaves.bind(&mut bindings, params);
    bindings.bind(input, batch_inputs.clone());
    Ok(graph.forward(&bindings, logits)?.clone())
}

/// Labels as the `(B,)` float tensor expected by the cross-entropy primitive.
pub fn label_tensor(labels: &[usize]) -> Tensor {
    Tensor::vector(labels.iter().map(|&l| l as f64).collect())
}

/// Gradient of the batch-mean cross-entropy with respect to the inputs.
#[derive(Clone, Debug)]
pub struct InputGradient {
    pub logits: Tensor,
    pub loss: f64,
    pub grad: Tensor,
}

pub fn input_gradient(
    spec: &NetworkSpec,
    params: &ParamVector,
    inputs: &Tensor,
    labels: &[usize],
) -> Result<InputGradient, NetError> {
    params.check_spec(spec)?;
    check_inputs(spec, inputs)?;
    let mut graph = Graph::new();
    let leaves = ParamLeaves::new(&mut graph, spec, false);
    let input = graph.leaf(true);
    let targets = graph.leaf(false);
    let logits = build_logits(&mut graph, &leaves, input);
    let loss = graph.softmax_cross_entropy(logits, targets);
    let mut bindings = Bindings::new();
    leaves.bind(&mut bindings, params);
    bindings.bind(input, inputs.clone());
    bindings.bind(targets, label_tensor(labels));
    let loss_value = graph.forward(&bindings, loss)?.data()[0];
    let mut grads = graph.backward(loss)?;
    Ok(InputGradient {
        logits: graph.value(logits).expect("evaluated").clone(),
        loss: loss_value,
        grad: grads.take(input).expect("input is differentiable"),
    })
}

/// Serializable snapshot of a network.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub spec: NetworkSpec,
    pub params: ParamVector,
    /// Free-form run metadata (seed, epoch, trainer mode, γ, μ, τ, ...).
    pub metadata: BTreeMap<String, String>,
}

impl Checkpoint {
    pub const FORMAT_VERSION: u8 = 1;
    pub const DTYPE: &'static str = "f64";

    pub fn new(spec: NetworkSpec, params: ParamVector) -> Self {
        Checkpoint {
            spec,
            params,
            metadata: BTreeMap::new(),
        }
    }
}
