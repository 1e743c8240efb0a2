//! Measurement protocols: clean and robust accuracy, transfer matrices,
//! adversarial loss landscapes, input-gradient heat maps and mixup
//! out-of-distribution sets.
//!
//! Robust evaluation walks the dataset in fixed chunks of [`EVAL_CHUNK`]
//! examples; chunk `k` is attacked with seed `mix(seed, k)`, so chunks can be
//! evaluated in any order (or in parallel) and reduced to the same counts.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::attack::{self, AttackConfig, AttackError, Perturbation};
use crate::data::{Batch, DataError, Dataset, InputLayout};
use crate::grad::kernels::{argmax, cross_entropy_row, sign};
use crate::grad::{GradError, Tensor};
use crate::net::{self, NetError, NetworkSpec, ParamVector};
use crate::objective::{self, ObjectiveError};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("evaluation needs at least one example")]
    Empty,
    #[error("transfer matrix needs at least one model")]
    NoModels,
    #[error("model {index} takes inputs of dimension {found}, expected {expected}")]
    IncompatibleModel { index: usize, expected: usize, found: usize },
    #[error("landscape resolution must be at least 1")]
    Resolution,
    #[error("landscape range must be finite and non-negative, got {0}")]
    Range(f64),
    #[error("expected a single example, got {0}")]
    NotASample(usize),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Grad(#[from] GradError),
}

/// Examples per robust-evaluation chunk.
pub const EVAL_CHUNK: usize = 128;

fn percent(count: usize, total: usize) -> f64 {
    100.0 * count as f64 / total as f64
}

fn correct_count(logits: &Tensor, labels: &[usize]) -> usize {
    (0..labels.len()).filter(|&i| argmax(logits.row(i)) == labels[i]).count()
}

/// Percentage of examples whose argmax prediction matches the label.
pub fn standard_accuracy(spec: &NetworkSpec, params: &ParamVector, dataset: &Dataset) -> Result<f64, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut correct = 0;
    for k in 0..num_chunks(dataset) {
        let batch = chunk(dataset, k);
        correct += correct_count(&net::predict_logits(spec, params, &batch.inputs)?, &batch.labels);
    }
    Ok(percent(correct, dataset.len()))
}

/// Raw counts of one evaluation chunk.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RobustCounts {
    pub examples: usize,
    pub clean_correct: usize,
    pub robust_correct: usize,
    /// Sum over examples of the worst-restart cross-entropy.
    pub robust_loss_sum: f64,
}

impl RobustCounts {
    pub fn merge(self, other: RobustCounts) -> RobustCounts {
        RobustCounts {
            examples: self.examples + other.examples,
            clean_correct: self.clean_correct + other.clean_correct,
            robust_correct: self.robust_correct + other.robust_correct,
            robust_loss_sum: self.robust_loss_sum + other.robust_loss_sum,
        }
    }
}

/// Accuracy summary in percent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalSummary {
    pub standard_accuracy: f64,
    pub robust_accuracy: f64,
    /// Mean worst-restart cross-entropy.
    pub robust_loss: f64,
}

impl EvalSummary {
    pub fn from_counts(c: &RobustCounts) -> Self {
        EvalSummary {
            standard_accuracy: percent(c.clean_correct, c.examples),
            robust_accuracy: percent(c.robust_correct, c.examples),
            robust_loss: c.robust_loss_sum / c.examples as f64,
        }
    }
}

pub fn num_chunks(dataset: &Dataset) -> usize {
    dataset.len().div_ceil(EVAL_CHUNK)
}

fn chunk(dataset: &Dataset, k: usize) -> Batch {
    let start = k * EVAL_CHUNK;
    dataset.range(start, (start + EVAL_CHUNK).min(dataset.len()))
}

/// Clean and robust counts of chunk `k`.
pub fn evaluate_chunk(
    spec: &NetworkSpec,
    params: &ParamVector,
    dataset: &Dataset,
    attack_cfg: &AttackConfig,
    seed: u64,
    k: usize,
) -> Result<RobustCounts, EvalError> {
    let batch = chunk(dataset, k);
    let clean = net::predict_logits(spec, params, &batch.inputs)?;
    let report = attack::attack(spec, params, &batch, attack_cfg, seed::mix(seed, k as u64))?;
    let robust = report.robust();
    let robust_loss_sum = report.best_losses.iter().sum();
    Ok(RobustCounts {
        examples: batch.len(),
        clean_correct: correct_count(&clean, &batch.labels),
        robust_correct: robust.iter().filter(|&&r| r).count(),
        robust_loss_sum,
    })
}

/// Standard accuracy, robust accuracy and robust loss in one pass.
///
/// An example counts as robust only if it is classified correctly under
/// every restart of the attack.
pub fn evaluate(
    spec: &NetworkSpec,
    params: &ParamVector,
    dataset: &Dataset,
    attack_cfg: &AttackConfig,
    seed: u64,
) -> Result<EvalSummary, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::Empty);
    }
    attack_cfg.validate()?;
    let mut total = RobustCounts::default();
    for k in 0..num_chunks(dataset) {
        total = total.merge(evaluate_chunk(spec, params, dataset, attack_cfg, seed, k)?);
    }
    Ok(EvalSummary::from_counts(&total))
}

pub fn robust_accuracy(
    spec: &NetworkSpec,
    params: &ParamVector,
    dataset: &Dataset,
    attack_cfg: &AttackConfig,
    seed: u64,
) -> Result<f64, EvalError> {
    Ok(evaluate(spec, params, dataset, attack_cfg, seed)?.robust_accuracy)
}

/// Robust accuracy of each target (columns) against perturbations crafted on
/// each source (rows), in percent.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    pub ids: Vec<alloc::string::String>,
    pub ra: Vec<Vec<f64>>,
    pub attack: AttackConfig,
}

/// A model taking part in a transfer evaluation.
#[derive(Clone, Copy, Debug)]
pub struct ModelRef<'a> {
    pub id: &'a str,
    pub spec: &'a NetworkSpec,
    pub params: &'a ParamVector,
}

/// Every source attacks every chunk with the same seeds as [`evaluate`]; a
/// target example counts as robust if the target classifies it correctly
/// under every restart crafted on the source. The diagonal is therefore the
/// white-box robust accuracy.
pub fn transfer_matrix(
    models: &[ModelRef<'_>],
    dataset: &Dataset,
    attack_cfg: &AttackConfig,
    seed: u64,
) -> Result<TransferMatrix, EvalError> {
    let first = models.first().ok_or(EvalError::NoModels)?;
    if dataset.is_empty() {
        return Err(EvalError::Empty);
    }
    attack_cfg.validate()?;
    for (index, m) in models.iter().enumerate() {
        if m.spec.input_dim != first.spec.input_dim || m.spec.input_dim != dataset.dim() {
            return Err(EvalError::IncompatibleModel {
                index,
                expected: dataset.dim(),
                found: m.spec.input_dim,
            });
        }
    }
    let n = models.len();
    let mut counts = alloc::vec![alloc::vec![0usize; n]; n];
    for k in 0..num_chunks(dataset) {
        let batch = chunk(dataset, k);
        for (s, source) in models.iter().enumerate() {
            let report = attack::attack(source.spec, source.params, &batch, attack_cfg, seed::mix(seed, k as u64))?;
            for (t, target) in models.iter().enumerate() {
                let mut robust = alloc::vec![true; batch.len()];
                for restart in &report.restarts {
                    let delta = Perturbation {
                        delta: restart.delta.clone(),
                    };
                    let x = attack::apply_perturbation(&batch.inputs, &delta, attack_cfg.pixel_box)?;
                    let logits = net::predict_logits(target.spec, target.params, &x)?;
                    for (i, r) in robust.iter_mut().enumerate() {
                        *r &= argmax(logits.row(i)) == batch.labels[i];
                    }
                }
                counts[s][t] += robust.iter().filter(|&&r| r).count();
            }
        }
    }
    Ok(TransferMatrix {
        ids: models.iter().map(|m| m.id.into()).collect(),
        ra: counts
            .iter()
            .map(|row| row.iter().map(|&c| percent(c, dataset.len())).collect())
            .collect(),
        attack: attack_cfg.clone(),
    })
}

/// Attack loss over the plane `u + x·ι + y·o`.
#[derive(Clone, Debug, PartialEq)]
pub struct LandscapeGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `losses[i][j]` at `(xs[i], ys[j])`.
    pub losses: Vec<Vec<f64>>,
    pub gap: f64,
    /// Sign of the input gradient at the clean sample.
    pub iota: Tensor,
    /// Rademacher direction.
    pub o: Tensor,
    pub clean_loss: f64,
    pub seed: u64,
}

/// `n` evenly spaced points over `[−range, range]`; a single point is `0`.
/// Odd `n` puts an exact `0` in the middle.
pub fn grid_coefficients(range: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![0.0];
    }
    let m = (n - 1) as f64;
    (0..n).map(|i| range * (2.0 * i as f64 - m) / m).collect()
}

/// Samples the attack loss of one example on a `resolution × resolution`
/// grid. The probe is not clamped to the pixel box.
pub fn landscape_grid(
    spec: &NetworkSpec,
    params: &ParamVector,
    sample: &Batch,
    range: f64,
    resolution: usize,
    seed: u64,
) -> Result<LandscapeGrid, EvalError> {
    if sample.len() != 1 {
        return Err(EvalError::NotASample(sample.len()));
    }
    if resolution < 1 {
        return Err(EvalError::Resolution);
    }
    if !(range >= 0.0 && range.is_finite()) {
        return Err(EvalError::Range(range));
    }
    let u = &sample.inputs;
    let g = net::input_gradient(spec, params, u, &sample.labels)?;
    let clean_loss = g.loss;
    let iota: Vec<f64> = g.grad.data().iter().map(|&v| sign(v)).collect();
    let mut rng = seed::rng(seed);
    let o: Vec<f64> = (0..u.len()).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let xs = grid_coefficients(range, resolution);
    let ys = xs.clone();
    let label = sample.labels[0];
    let mut losses = Vec::with_capacity(resolution);
    let mut probe = Vec::with_capacity(resolution * u.len());
    for &x in &xs {
        probe.clear();
        for &y in &ys {
            probe.extend(u.data().iter().zip(&iota).zip(&o).map(|((&ui, &a), &b)| ui + x * a + y * b));
        }
        let logits = net::predict_logits(spec, params, &Tensor::new(alloc::vec![resolution, u.len()], probe.clone())?)?;
        losses.push((0..resolution).map(|j| cross_entropy_row(logits.row(j), label)).collect::<Vec<_>>());
    }
    let (lo, hi) = losses
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(LandscapeGrid {
        xs,
        ys,
        losses,
        gap: hi - lo,
        iota: Tensor::new(u.shape().to_vec(), iota)?,
        o: Tensor::new(u.shape().to_vec(), o)?,
        clean_loss,
        seed,
    })
}

/// `|∇_u L(u)|` of one example split into channels, each min-max scaled to
/// `[0, 1]`. Channels whose gradient range is below `1e-12` come out as
/// zeros. Image channels have shape `(height, width)`, a flat layout yields
/// one `(dim,)` channel.
pub fn input_gradient_map(
    spec: &NetworkSpec,
    params: &ParamVector,
    sample: &[f64],
    label: usize,
    layout: InputLayout,
) -> Result<Vec<Tensor>, EvalError> {
    let (channels, shape) = match layout {
        InputLayout::Flat => (1, alloc::vec![sample.len()]),
        InputLayout::Image { channels, height, width } => {
            if channels * height * width != sample.len() {
                return Err(DataError::Layout {
                    layout,
                    dim: sample.len(),
                }
                .into());
            }
            (channels, alloc::vec![height, width])
        }
    };
    let u = Tensor::new(alloc::vec![1, sample.len()], sample.to_vec())?;
    let grad = net::input_gradient(spec, params, &u, &[label])?.grad;
    let per = sample.len() / channels;
    let mut maps = Vec::with_capacity(channels);
    for c in 0..channels {
        let abs: Vec<f64> = grad.data()[c * per..(c + 1) * per].iter().map(|v| v.abs()).collect();
        let lo = abs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = abs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scaled = if hi - lo < 1e-12 {
            alloc::vec![0.0; per]
        } else {
            abs.iter().map(|v| (v - lo) / (hi - lo)).collect()
        };
        maps.push(Tensor::new(shape.clone(), scaled)?);
    }
    Ok(maps)
}

/// Mixes every example with a partner from a seeded permutation of the same
/// dataset and keeps the first example's label. `lambda = None` draws a
/// per-example `λ ~ U[0.5, 1]`.
pub fn mixup_dataset(dataset: &Dataset, lambda: Option<f64>, seed: u64) -> Result<Dataset, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut partners: Vec<usize> = (0..dataset.len()).collect();
    let mut rng = seed::rng(seed);
    partners.shuffle(&mut rng);
    let mixed = objective::mixup_batch(&dataset.as_batch(), &dataset.select(&partners), lambda, seed::mix(seed, 1))?;
    Ok(Dataset::new(
        mixed.inputs,
        mixed.labels,
        dataset.num_classes(),
        dataset.layout(),
        alloc::format!("{}-mixup", dataset.split),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn logistic(w: f64) -> (NetworkSpec, ParamVector) {
        let spec = NetworkSpec::new(1, vec![], 2).unwrap();
        let params = ParamVector::from_values(&spec, vec![0.0, w, 0.0, 0.0]).unwrap();
        (spec, params)
    }

    fn points(u: &[f64], labels: &[usize]) -> Dataset {
        Dataset::new(Tensor::new(vec![u.len(), 1], u.to_vec()).unwrap(), labels.to_vec(), 2, InputLayout::Flat, "test").unwrap()
    }

    #[test]
    fn constant_logits_tie_to_class_zero() {
        let spec = NetworkSpec::new(1, vec![], 3).unwrap();
        let params = ParamVector::zeros(&spec);
        let d = Dataset::new(Tensor::zeros(&[4, 1]), vec![0; 4], 3, InputLayout::Flat, "test").unwrap();
        assert_eq!(standard_accuracy(&spec, &params, &d).unwrap(), 100.0);
        assert_eq!(robust_accuracy(&spec, &params, &d, &AttackConfig::pgd10(0.3), 0).unwrap(), 100.0);
    }

    #[test]
    fn hand_placed_points() {
        // logits (0, 2u − 1): class 1 iff u > 0.5
        let spec = NetworkSpec::new(1, vec![], 2).unwrap();
        let params = ParamVector::from_values(&spec, vec![0.0, 2.0, 0.0, -1.0]).unwrap();
        let d = points(&[0.1, 0.4, 0.7, 0.9], &[0, 0, 1, 0]);
        assert_eq!(standard_accuracy(&spec, &params, &d).unwrap(), 75.0);
    }

    #[test]
    fn logistic_margin() {
        // logits (0, 4(u − 0.5)) on 0.25 / 0.75: robust while ε < 0.25
        let spec = NetworkSpec::new(1, vec![], 2).unwrap();
        let params = ParamVector::from_values(&spec, vec![0.0, 4.0, 0.0, -2.0]).unwrap();
        let d = points(&[0.25, 0.75], &[0, 1]);
        let cfg = |eps: f64| AttackConfig::pgd(eps, eps / 4.0, 10, 1).with_box(None);
        assert_eq!(robust_accuracy(&spec, &params, &d, &cfg(0.15), 0).unwrap(), 100.0);
        assert_eq!(robust_accuracy(&spec, &params, &d, &cfg(0.3), 0).unwrap(), 0.0);
    }

    #[test]
    fn zero_epsilon_matches_clean() {
        let spec = NetworkSpec::new(5, vec![7], 3).unwrap();
        let params = net::init_params(&spec, 3).unwrap();
        let d = crate::data::synth_blobs(3, 50, 5, 0.5, 9).unwrap();
        let s = evaluate(&spec, &params, &d, &AttackConfig::pgd10(0.0), 1).unwrap();
        assert_eq!(s.robust_accuracy, s.standard_accuracy);
        assert_eq!(s.standard_accuracy, standard_accuracy(&spec, &params, &d).unwrap());
    }

    #[test]
    fn transfer_of_identical_models_is_flat() {
        let spec = NetworkSpec::new(5, vec![7], 3).unwrap();
        let params = net::init_params(&spec, 3).unwrap();
        let d = crate::data::synth_blobs(3, 20, 5, 0.5, 9).unwrap();
        let cfg = AttackConfig::pgd10(0.1);
        let m = ModelRef {
            id: "a",
            spec: &spec,
            params: &params,
        };
        let t = transfer_matrix(&[m, ModelRef { id: "b", ..m }], &d, &cfg, 4).unwrap();
        let ra = robust_accuracy(&spec, &params, &d, &cfg, 4).unwrap();
        assert!(t.ra.iter().flatten().all(|&v| v == ra));
    }

    #[test]
    fn transfer_rejects_mismatched_inputs() {
        let a = NetworkSpec::new(5, vec![], 3).unwrap();
        let b = NetworkSpec::new(4, vec![], 3).unwrap();
        let (pa, pb) = (ParamVector::zeros(&a), ParamVector::zeros(&b));
        let d = crate::data::synth_blobs(3, 2, 5, 0.5, 9).unwrap();
        let models = [
            ModelRef { id: "a", spec: &a, params: &pa },
            ModelRef { id: "b", spec: &b, params: &pb },
        ];
        assert!(matches!(
            transfer_matrix(&models, &d, &AttackConfig::pgd10(0.1), 0),
            Err(EvalError::IncompatibleModel { index: 1, .. })
        ));
        assert_eq!(transfer_matrix(&[], &d, &AttackConfig::pgd10(0.1), 0), Err(EvalError::NoModels));
    }

    #[test]
    fn coefficients() {
        assert_eq!(grid_coefficients(0.25, 1), vec![0.0]);
        assert_eq!(grid_coefficients(0.5, 3), vec![-0.5, 0.0, 0.5]);
        let c = grid_coefficients(0.25, 5);
        assert_eq!(c[2], 0.0);
        assert_eq!((c[0], c[4]), (-0.25, 0.25));
    }

    #[test]
    fn degenerate_landscape() {
        let (spec, params) = logistic(4.0);
        let d = points(&[0.3], &[1]);
        let g = landscape_grid(&spec, &params, &d.as_batch(), 0.0, 1, 0).unwrap();
        assert_eq!(g.losses, vec![vec![g.clean_loss]]);
        assert_eq!(g.gap, 0.0);
        assert!(landscape_grid(&spec, &params, &d.as_batch(), 0.1, 0, 0).is_err());
    }

    #[test]
    fn landscape_center_is_clean_loss() {
        let spec = NetworkSpec::new(6, vec![5], 3).unwrap();
        let params = net::init_params(&spec, 1).unwrap();
        let d = crate::data::synth_blobs(3, 2, 6, 0.5, 2).unwrap();
        let g = landscape_grid(&spec, &params, &d.example(0), 0.25, 5, 7).unwrap();
        assert_eq!(g.losses[2][2], g.clean_loss);
        assert!(g.o.data().iter().all(|&v| v == 1.0 || v == -1.0));
        assert!(g.gap >= 0.0);
    }

    #[test]
    fn constant_model_gradmap_is_zero() {
        let spec = NetworkSpec::new(12, vec![], 2).unwrap();
        let params = ParamVector::zeros(&spec);
        let layout = InputLayout::Image {
            channels: 3,
            height: 2,
            width: 2,
        };
        let maps = input_gradient_map(&spec, &params, &[0.5; 12], 0, layout).unwrap();
        assert_eq!(maps.len(), 3);
        assert!(maps.iter().all(|m| m.shape() == [2, 2] && m.data().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn gradmap_channels_span_unit_interval() {
        let spec = NetworkSpec::new(12, vec![6], 2).unwrap();
        let params = net::init_params(&spec, 4).unwrap();
        let layout = InputLayout::Image {
            channels: 3,
            height: 2,
            width: 2,
        };
        let sample: Vec<f64> = (0..12).map(|i| i as f64 / 12.0).collect();
        for m in input_gradient_map(&spec, &params, &sample, 1, layout).unwrap() {
            let lo = m.data().iter().copied().fold(f64::INFINITY, f64::min);
            let hi = m.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!((lo, hi), (0.0, 1.0));
        }
    }

    #[test]
    fn mixup_with_unit_lambda_is_identity() {
        let d = crate::data::synth_blobs(3, 10, 5, 0.5, 2).unwrap();
        let m = mixup_dataset(&d, Some(1.0), 3).unwrap();
        assert_eq!(m.inputs(), d.inputs());
        assert_eq!(m.labels(), d.labels());
    }
}
