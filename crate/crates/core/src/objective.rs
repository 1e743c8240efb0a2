//! Training and attack objectives.
//!
//! The value-only functions build the same graph nodes the trainers
//! differentiate, so a reported loss and the loss behind a gradient step are
//! computed by identical arithmetic.

use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::data::Batch;
use crate::grad::{Bindings, GradError, Graph, NodeId, Tensor};
use crate::net::{self, NetError, NetworkSpec, ParamLeaves, ParamVector};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("label {label} outside [0, {classes})")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("temperature must be positive, got {0}")]
    Temperature(f64),
    #[error("distillation coefficient must lie in [0, 1), got {0}")]
    Mu(f64),
    #[error("mixup coefficient must lie in [0.5, 1], got {0}")]
    MixupLambda(f64),
    #[error("shape mismatch: {0:?} vs {1:?}")]
    Shape(Vec<usize>, Vec<usize>),
    #[error(transparent)]
    Grad(#[from] GradError),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Self-distillation settings.
#[derive(Clone, Debug, PartialEq)]
pub struct SdConfig {
    /// Weight of the KL term, in `[0, 1)`.
    pub mu: f64,
    pub tau: f64,
    /// Treat the clean-branch soft targets as constants.
    pub detach_clean: bool,
    /// Multiply the KL term by `τ²`.
    pub tau_squared_scale: bool,
}

impl Default for SdConfig {
    fn default() -> Self {
        SdConfig {
            mu: 0.95,
            tau: 6.0,
            detach_clean: true,
            tau_squared_scale: false,
        }
    }
}

impl SdConfig {
    pub fn validate(&self) -> Result<(), ObjectiveError> {
        if !(0.0..1.0).contains(&self.mu) {
            return Err(ObjectiveError::Mu(self.mu));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(ObjectiveError::Temperature(self.tau));
        }
        Ok(())
    }
}

fn check_labels(logits: &Tensor, labels: &[usize]) -> Result<(), ObjectiveError> {
    if logits.rank() != 2 || logits.rows() != labels.len() {
        return Err(ObjectiveError::Shape(logits.shape().to_vec(), alloc::vec![labels.len()]));
    }
    let classes = logits.cols();
    match labels.iter().find(|&&l| l >= classes) {
        Some(&label) => Err(ObjectiveError::LabelOutOfRange { label, classes }),
        None => Ok(()),
    }
}

/// Appends the self-distillation loss on top of existing logits nodes:
/// `μ·KL(adv, clean; τ) [·τ²] + (1 − μ)·CE(adv, labels)`.
pub fn build_sd_loss(graph: &mut Graph, adv: NodeId, clean: NodeId, labels: NodeId, sd: &SdConfig) -> NodeId {
    let mut kl = graph.kl_temperature(adv, clean, sd.tau);
    if sd.tau_squared_scale {
        kl = graph.scale(kl, sd.tau * sd.tau);
    }
    let kl = graph.scale(kl, sd.mu);
    let ce = graph.softmax_cross_entropy(adv, labels);
    let ce = graph.scale(ce, 1.0 - sd.mu);
    graph.add(kl, ce)
}

/// Batch mean of `−log softmax(logits)[label]`.
pub fn cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<f64, ObjectiveError> {
    check_labels(logits, labels)?;
    let mut g = Graph::new();
    let (z, y) = (g.leaf(false), g.leaf(false));
    let loss = g.softmax_cross_entropy(z, y);
    let b = Bindings::new().with(z, logits.clone()).with(y, net::label_tensor(labels));
    Ok(g.forward(&b, loss)?.data()[0])
}

/// Per-example cross-entropy.
pub fn per_example_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<Vec<f64>, ObjectiveError> {
    check_labels(logits, labels)?;
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, &l)| crate::grad::kernels::cross_entropy_row(logits.row(i), l))
        .collect())
}

/// Batch mean of `KL(softmax(teacher/τ) ‖ softmax(student/τ))`.
pub fn kl_temperature(student: &Tensor, teacher: &Tensor, tau: f64) -> Result<f64, ObjectiveError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(ObjectiveError::Temperature(tau));
    }
    if student.shape() != teacher.shape() {
        return Err(ObjectiveError::Shape(student.shape().to_vec(), teacher.shape().to_vec()));
    }
    let mut g = Graph::new();
    let (s, t) = (g.leaf(false), g.leaf(false));
    let kl = g.kl_temperature(s, t, tau);
    let b = Bindings::new().with(s, student.clone()).with(t, teacher.clone());
    Ok(g.forward(&b, kl)?.data()[0])
}

/// Self-distillation loss on precomputed logits.
pub fn sd_loss(clean_logits: &Tensor, adv_logits: &Tensor, labels: &[usize], sd: &SdConfig) -> Result<f64, ObjectiveError> {
    sd.validate()?;
    check_labels(adv_logits, labels)?;
    if clean_logits.shape() != adv_logits.shape() {
        return Err(ObjectiveError::Shape(clean_logits.shape().to_vec(), adv_logits.shape().to_vec()));
    }
    let mut g = Graph::new();
    let (a, c, y) = (g.leaf(false), g.leaf(false), g.leaf(false));
    let loss = build_sd_loss(&mut g, a, c, y, sd);
    let b = Bindings::new()
        .with(a, adv_logits.clone())
        .with(c, clean_logits.clone())
        .with(y, net::label_tensor(labels));
    Ok(g.forward(&b, loss)?.data()[0])
}

/// Defense loss on `adv_inputs` and its gradient with respect to the parameters.
///
/// Without `sd` this is the plain cross-entropy. With `sd` the clean inputs
/// feed the soft-target branch; when `detach_clean` is set that branch is
/// evaluated first and bound as a constant.
pub fn defense_gradient(
    spec: &NetworkSpec,
    params: &ParamVector,
    clean_inputs: &Tensor,
    adv_inputs: &Tensor,
    labels: &[usize],
    sd: Option<&SdConfig>,
) -> Result<(f64, ParamVector), ObjectiveError> {
    let mut g = Graph::new();
    let leaves = ParamLeaves::new(&mut g, spec, true);
    let adv = g.leaf(false);
    let targets = g.leaf(false);
    let adv_logits = net::build_logits(&mut g, &leaves, adv);
    let mut bindings = Bindings::new();
    leaves.bind(&mut bindings, params);
    bindings.bind(adv, adv_inputs.clone());
    bindings.bind(targets, net::label_tensor(labels));
    let loss = match sd {
        None => g.softmax_cross_entropy(adv_logits, targets),
        Some(sd) => {
            sd.validate()?;
            let clean_logits = if sd.detach_clean {
                let teacher = g.leaf(false);
                bindings.bind(teacher, net::predict_logits(spec, params, clean_inputs)?);
                teacher
            } else {
                let clean = g.leaf(false);
                bindings.bind(clean, clean_inputs.clone());
                net::build_logits(&mut g, &leaves, clean)
            };
            build_sd_loss(&mut g, adv_logits, clean_logits, targets, sd)
        }
    };
    let value = g.forward(&bindings, loss)?.data()[0];
    let mut grads = g.backward(loss)?;
    Ok((value, leaves.collect(&mut grads, params)))
}

/// Convex mixes `λ·u_a + (1 − λ)·u_b` labelled by `batch_a`.
///
/// With `lambda = None` each example draws its own `λ ~ U[0.5, 1]`.
pub fn mixup_batch(batch_a: &Batch, batch_b: &Batch, lambda: Option<f64>, seed: u64) -> Result<Batch, ObjectiveError> {
    if batch_a.inputs.shape() != batch_b.inputs.shape() {
        return Err(ObjectiveError::Shape(
            batch_a.inputs.shape().to_vec(),
            batch_b.inputs.shape().to_vec(),
        ));
    }
    if let Some(l) = lambda {
        if !(0.5..=1.0).contains(&l) {
            return Err(ObjectiveError::MixupLambda(l));
        }
    }
    let mut rng = seed::rng(seed);
    let cols = batch_a.inputs.cols();
    let mut data = Vec::with_capacity(batch_a.inputs.len());
    for i in 0..batch_a.len() {
        let l = lambda.unwrap_or_else(|| rng.random_range(0.5..=1.0));
        for (&a, &b) in batch_a.inputs.row(i).iter().zip(batch_b.inputs.row(i)) {
            data.push(l * a + (1.0 - l) * b);
        }
    }
    debug_assert_eq!(data.len(), batch_a.len() * cols);
    Ok(Batch {
        inputs: Tensor::new(batch_a.inputs.shape().to_vec(), data)?,
        labels: batch_a.labels.clone(),
    })
}
