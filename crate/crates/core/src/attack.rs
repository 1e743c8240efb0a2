//! ℓ∞ sign-gradient attacks: FGSM (one step) and PGD-K with random restarts.
//!
//! Each step moves `δ ← clip(δ + α·sgn(∇_δ L), −ε, ε)` where `L` is the batch
//! cross-entropy of the attacked model, `sgn(0) = 0`. With a pixel box the
//! adversarial input `u + δ` is additionally clamped into the box after every
//! step (and after initialization) by adjusting `δ`.

use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::data::Batch;
use crate::grad::kernels::{argmax, cross_entropy_row, sign};
use crate::grad::Tensor;
use crate::net::{self, NetError, NetworkSpec, ParamVector};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttackError {
    #[error("epsilon must be finite and non-negative, got {0}")]
    Epsilon(f64),
    #[error("step size must be positive, got {0}")]
    Alpha(f64),
    #[error("attack needs at least one step")]
    Steps,
    #[error("attack needs at least one restart")]
    Restarts,
    #[error("perturbation shape {delta:?} does not match input shape {input:?}")]
    Shape { input: Vec<usize>, delta: Vec<usize> },
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Distribution of the starting perturbation `δ_0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttackInit {
    Zero,
    /// Independent `U(−ε, ε)` entries.
    Uniform,
}

/// The ℓ∞ threat model and the iteration schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub steps: usize,
    pub restarts: usize,
    pub init: AttackInit,
    /// Optional `[lo, hi]` box for `u + δ`.
    pub pixel_box: Option<(f64, f64)>,
}

impl AttackConfig {
    /// Single uniform-start step of size `1.25·ε` (the Fast-AT recipe).
    pub fn fgsm(epsilon: f64) -> Self {
        AttackConfig {
            epsilon,
            alpha: 1.25 * epsilon,
            steps: 1,
            restarts: 1,
            init: AttackInit::Uniform,
            pixel_box: Some((0.0, 1.0)),
        }
    }

    pub fn pgd(epsilon: f64, alpha: f64, steps: usize, restarts: usize) -> Self {
        AttackConfig {
            epsilon,
            alpha,
            steps,
            restarts,
            init: AttackInit::Uniform,
            pixel_box: Some((0.0, 1.0)),
        }
    }

    /// PGD-10: ten steps of `ε/4`, one restart.
    pub fn pgd10(epsilon: f64) -> Self {
        Self::pgd(epsilon, epsilon / 4.0, 10, 1)
    }

    /// PGD-50: fifty steps of `ε/4`, ten restarts.
    pub fn pgd50(epsilon: f64) -> Self {
        Self::pgd(epsilon, epsilon / 4.0, 50, 10)
    }

    pub fn with_box(mut self, pixel_box: Option<(f64, f64)>) -> Self {
        self.pixel_box = pixel_box;
        self
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(AttackError::Epsilon(self.epsilon));
        }
        // presets scale α with ε, so a zero-radius attack may carry α = 0
        let alpha_ok = self.alpha > 0.0 || (self.epsilon == 0.0 && self.alpha == 0.0);
        if !(alpha_ok && self.alpha.is_finite()) {
            return Err(AttackError::Alpha(self.alpha));
        }
        if self.steps < 1 {
            return Err(AttackError::Steps);
        }
        if self.restarts < 1 {
            return Err(AttackError::Restarts);
        }
        Ok(())
    }
}

/// A perturbation `δ` with the shape of the attacked batch.
#[derive(Clone, Debug, PartialEq)]
pub struct Perturbation {
    pub delta: Tensor,
}

/// Final iterate of one restart.
#[derive(Clone, Debug)]
pub struct RestartOutcome {
    pub delta: Tensor,
    /// Per-example attack loss at `u + δ`.
    pub losses: Vec<f64>,
    /// Whether the attacked model still classifies each example correctly.
    pub correct: Vec<bool>,
}

/// Everything an attack run produced.
#[derive(Clone, Debug)]
pub struct AttackReport {
    /// Per example, the restart with the highest attack loss.
    pub perturbation: Perturbation,
    pub best_losses: Vec<f64>,
    pub restarts: Vec<RestartOutcome>,
}

impl AttackReport {
    /// Correct under every restart.
    pub fn robust(&self) -> Vec<bool> {
        let n = self.best_losses.len();
        (0..n)
            .map(|i| self.restarts.iter().all(|r| r.correct[i]))
            .collect()
    }
}

/// `u + δ`, clamped to `pixel_box` when given.
pub fn apply_perturbation(
    inputs: &Tensor,
    perturbation: &Perturbation,
    pixel_box: Option<(f64, f64)>,
) -> Result<Tensor, AttackError> {
    let delta = &perturbation.delta;
    if inputs.shape() != delta.shape() {
        return Err(AttackError::Shape {
            input: inputs.shape().to_vec(),
            delta: delta.shape().to_vec(),
        });
    }
    let data = inputs
        .data()
        .iter()
        .zip(delta.data())
        .map(|(&u, &d)| match pixel_box {
            Some((lo, hi)) => (u + d).clamp(lo, hi),
            None => u + d,
        })
        .collect();
    Ok(Tensor::new(inputs.shape().to_vec(), data).expect("same shape"))
}

fn project(delta: &mut [f64], inputs: &[f64], cfg: &AttackConfig) {
    let eps = cfg.epsilon;
    for (d, &u) in delta.iter_mut().zip(inputs) {
        *d = d.clamp(-eps, eps);
        if let Some((lo, hi)) = cfg.pixel_box {
            *d = (u + *d).clamp(lo, hi) - u;
        }
    }
}

fn run_restart(
    spec: &NetworkSpec,
    params: &ParamVector,
    batch: &Batch,
    cfg: &AttackConfig,
    seed: u64,
) -> Result<Tensor, AttackError> {
    let u = &batch.inputs;
    let mut delta = Tensor::zeros(u.shape());
    if cfg.epsilon == 0.0 {
        return Ok(delta);
    }
    if cfg.init == AttackInit::Uniform {
        let mut rng = seed::rng(seed);
        for d in delta.data_mut() {
            *d = rng.random_range(-cfg.epsilon..=cfg.epsilon);
        }
    }
    project(delta.data_mut(), u.data(), cfg);
    for _ in 0..cfg.steps {
        let x = apply_perturbation(u, &Perturbation { delta: delta.clone() }, cfg.pixel_box)?;
        let g = net::input_gradient(spec, params, &x, &batch.labels)?.grad;
        for (d, &gv) in delta.data_mut().iter_mut().zip(g.data()) {
            *d += cfg.alpha * sign(gv);
        }
        project(delta.data_mut(), u.data(), cfg);
    }
    Ok(delta)
}

/// Runs every restart and keeps, per example, the iterate with the highest
/// attack loss (the first restart wins ties).
pub fn attack(
    spec: &NetworkSpec,
    params: &ParamVector,
    batch: &Batch,
    cfg: &AttackConfig,
    seed: u64,
) -> Result<AttackReport, AttackError> {
    cfg.validate()?;
    let n = batch.len();
    let cols = batch.inputs.cols();
    let mut restarts = Vec::with_capacity(cfg.restarts);
    for r in 0..cfg.restarts {
        let delta = run_restart(spec, params, batch, cfg, seed::mix(seed, r as u64))?;
        let x = apply_perturbation(&batch.inputs, &Perturbation { delta: delta.clone() }, cfg.pixel_box)?;
        let logits = net::predict_logits(spec, params, &x)?;
        let losses = (0..n)
            .map(|i| cross_entropy_row(logits.row(i), batch.labels[i]))
            .collect();
        let correct = (0..n).map(|i| argmax(logits.row(i)) == batch.labels[i]).collect();
        restarts.push(RestartOutcome {
            delta,
            losses,
            correct,
        });
    }
    let mut best = restarts[0].delta.clone();
    let mut best_losses = restarts[0].losses.clone();
    for outcome in &restarts[1..] {
        for i in 0..n {
            if outcome.losses[i] > best_losses[i] {
                best_losses[i] = outcome.losses[i];
                best.data_mut()[i * cols..(i + 1) * cols].copy_from_slice(outcome.delta.row(i));
            }
        }
    }
    Ok(AttackReport {
        perturbation: Perturbation { delta: best },
        best_losses,
        restarts,
    })
}

/// The perturbation of [`attack`]. A single restart skips the final loss
/// evaluation, which only matters for restart selection.
pub fn craft_perturbation(
    spec: &NetworkSpec,
    params: &ParamVector,
    batch: &Batch,
    cfg: &AttackConfig,
    seed: u64,
) -> Result<Perturbation, AttackError> {
    cfg.validate()?;
    if cfg.restarts == 1 {
        let delta = run_restart(spec, params, batch, cfg, seed::mix(seed, 0))?;
        return Ok(Perturbation { delta });
    }
    Ok(attack(spec, params, batch, cfg, seed)?.perturbation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Two-class linear model with logits `(0, w·u)`, i.e. `p(1) = σ(w·u)`.
    fn logistic(w: f64) -> (NetworkSpec, ParamVector) {
        let spec = NetworkSpec::new(1, vec![], 2).unwrap();
        let params = ParamVector::from_values(&spec, vec![0.0, w, 0.0, 0.0]).unwrap();
        (spec, params)
    }

    fn batch(u: &[f64], labels: &[usize]) -> Batch {
        Batch {
            inputs: Tensor::new(vec![u.len(), 1], u.to_vec()).unwrap(),
            labels: labels.to_vec(),
        }
    }

    #[test]
    fn zero_epsilon_gives_zero_delta() {
        let (s, p) = logistic(2.0);
        let cfg = AttackConfig::pgd(0.0, 0.1, 5, 3);
        let d = craft_perturbation(&s, &p, &batch(&[0.5, 0.2], &[1, 0]), &cfg, 4).unwrap();
        assert!(d.delta.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn one_unprojected_step_is_eps_sign() {
        let (s, p) = logistic(2.0);
        let cfg = AttackConfig {
            epsilon: 0.1,
            alpha: 0.1,
            steps: 1,
            restarts: 1,
            init: AttackInit::Zero,
            pixel_box: None,
        };
        let b = batch(&[0.5, 0.5], &[1, 0]);
        let d = craft_perturbation(&s, &p, &b, &cfg, 0).unwrap();
        // label 1 pushes u down, label 0 pushes u up
        assert_eq!(d.delta.data(), &[-0.1, 0.1]);
    }

    #[test]
    fn logistic_three_steps() {
        // dL/du = −(1 − σ(2u))·2 < 0 everywhere for label 1, so every sign is −1:
        // δ = −0.05, −0.10, −0.15 → projected to −0.1.
        let (s, p) = logistic(2.0);
        let cfg = AttackConfig {
            epsilon: 0.1,
            alpha: 0.05,
            steps: 3,
            restarts: 1,
            init: AttackInit::Zero,
            pixel_box: None,
        };
        let d = craft_perturbation(&s, &p, &batch(&[0.5], &[1]), &cfg, 0).unwrap();
        assert_eq!(d.delta.data(), &[-0.1]);
    }

    #[test]
    fn zero_gradient_coordinates_stay_put() {
        // weight 0 → logits constant → input gradient exactly 0
        let (s, p) = logistic(0.0);
        let cfg = AttackConfig {
            epsilon: 0.1,
            alpha: 0.05,
            steps: 4,
            restarts: 1,
            init: AttackInit::Zero,
            pixel_box: None,
        };
        let d = craft_perturbation(&s, &p, &batch(&[0.5], &[1]), &cfg, 0).unwrap();
        assert_eq!(d.delta.data(), &[0.0]);
    }

    #[test]
    fn box_is_respected() {
        let (s, p) = logistic(2.0);
        let cfg = AttackConfig::pgd(0.3, 0.1, 5, 2);
        let b = batch(&[0.05, 0.95, 1.0, 0.0], &[1, 0, 0, 1]);
        let report = attack(&s, &p, &b, &cfg, 1).unwrap();
        let x = apply_perturbation(&b.inputs, &report.perturbation, None).unwrap();
        assert!(x.data().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(report.perturbation.delta.max_abs() <= 0.3 + 1e-9);
    }

    #[test]
    fn apply_perturbation_cases() {
        let u = Tensor::new(vec![1, 3], vec![1.0, 0.2, 0.5]).unwrap();
        let zero = Perturbation { delta: Tensor::zeros(&[1, 3]) };
        assert_eq!(apply_perturbation(&u, &zero, Some((0.0, 1.0))).unwrap(), u);
        let d = Perturbation {
            delta: Tensor::new(vec![1, 3], vec![0.1, -0.3, 0.25]).unwrap(),
        };
        assert_eq!(apply_perturbation(&u, &d, Some((0.0, 1.0))).unwrap().data(), &[1.0, 0.0, 0.75]);
        assert_eq!(
            apply_perturbation(&u, &d, None).unwrap().data(),
            &[1.0 + 0.1, 0.2 - 0.3, 0.5 + 0.25]
        );
        let bad = Perturbation { delta: Tensor::zeros(&[3, 1]) };
        assert!(matches!(apply_perturbation(&u, &bad, None), Err(AttackError::Shape { .. })));
    }

    #[test]
    fn config_validation() {
        let (s, p) = logistic(1.0);
        let b = batch(&[0.5], &[0]);
        let mut cfg = AttackConfig::pgd10(0.1);
        cfg.steps = 0;
        assert_eq!(craft_perturbation(&s, &p, &b, &cfg, 0), Err(AttackError::Steps));
        let cfg = AttackConfig::pgd10(-0.1);
        assert!(matches!(craft_perturbation(&s, &p, &b, &cfg, 0), Err(AttackError::Epsilon(_))));
    }

    #[test]
    fn standard_attack_presets() {
        let a = AttackConfig::pgd10(8.0 / 255.0);
        assert_eq!((a.steps, a.restarts), (10, 1));
        let b = AttackConfig::pgd50(8.0 / 255.0);
        assert_eq!((b.steps, b.restarts), (50, 10));
    }
}
