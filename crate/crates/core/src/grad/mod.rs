//! Dense tensors and reverse-mode differentiation.
//!
//! A [`Graph`] is built once from primitive nodes, evaluated with
//! [`Graph::forward`] against a set of leaf [`Bindings`], and differentiated
//! with [`Graph::backward`]. Gradients are available for every leaf flagged as
//! differentiable, so the same machinery serves parameter gradients (training)
//! and input gradients (attacks, saliency maps).
//!
//! Convolutions are not part of the primitive set. A new primitive needs a
//! variant in [`Op`], a forward rule in `Graph::eval_node` and a vector-Jacobian
//! rule in `Graph::propagate`.

mod check;
mod graph;
pub mod kernels;
mod tensor;

pub use check::finite_diff_check;
pub use graph::{Bindings, Gradients, Graph, NodeId, Op};
pub use tensor::Tensor;

use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GradError {
    #[error("element count {actual} does not match shape {shape:?}")]
    ElementCount { shape: Vec<usize>, actual: usize },
    #[error("node {node}: shape mismatch ({lhs:?} vs {rhs:?})")]
    ShapeMismatch {
        node: NodeId,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("node {node}: leaf is not bound")]
    UnboundLeaf { node: NodeId },
    #[error("node {node}: binding target is not a leaf")]
    NotALeaf { node: NodeId },
    #[error("node {node}: non-finite value (numerical overflow)")]
    NumericalOverflow { node: NodeId },
    #[error("node {node}: label {label} is not a class index in [0, {classes})")]
    InvalidLabel {
        node: NodeId,
        label: f64,
        classes: usize,
    },
    #[error("node {node}: invalid argument ({reason})")]
    InvalidArgument { node: NodeId, reason: &'static str },
    #[error("node {node}: loss must be a scalar, found shape {shape:?}")]
    NonScalarLoss { node: NodeId, shape: Vec<usize> },
    #[error("node {node}: backward requested before forward evaluation")]
    BackwardBeforeForward { node: NodeId },
    #[error("finite-difference probe produced a non-finite loss")]
    NonFiniteProbe,
    #[error("finite-difference step must be positive")]
    InvalidStep,
}
