use alloc::vec::Vec;

use super::TrainError;

/// SGD hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            momentum: 0.9,
            weight_decay: 5e-4,
        }
    }
}

/// One SGD step with heavy-ball momentum and L2 weight decay:
/// `g' = g + wd·p; buf = m·buf + g'; p ← p − lr·buf`.
pub fn sgd_step(
    params: &mut [f64],
    grads: &[f64],
    lr: f64,
    buffer: &mut [f64],
    opt: &OptimizerConfig,
) -> Result<(), TrainError> {
    if params.len() != grads.len() || params.len() != buffer.len() {
        return Err(TrainError::LayoutMismatch);
    }
    for ((p, &g), b) in params.iter_mut().zip(grads).zip(buffer.iter_mut()) {
        let g = g + opt.weight_decay * *p;
        *b = opt.momentum * *b + g;
        *p -= lr * *b;
    }
    Ok(())
}

/// Learning-rate schedules, evaluated at a (possibly fractional) epoch.
#[derive(Clone, Debug, PartialEq)]
pub enum Scheduler {
    Constant { lr: f64 },
    /// Triangle from 0 up to `max_lr` at `J/2` and back to 0 at `J`.
    Cyclic { max_lr: f64 },
    /// `base_lr · factor^(number of milestones ≤ epoch)`.
    MultiStep {
        base_lr: f64,
        milestones: Vec<usize>,
        factor: f64,
    },
}

impl Scheduler {
    pub fn peak_lr(&self) -> f64 {
        match *self {
            Scheduler::Constant { lr } => lr,
            Scheduler::Cyclic { max_lr } => max_lr,
            Scheduler::MultiStep { base_lr, .. } => base_lr,
        }
    }
}

pub fn schedule_lr(scheduler: &Scheduler, epoch: f64, epochs: usize) -> f64 {
    match scheduler {
        Scheduler::Constant { lr } => *lr,
        Scheduler::Cyclic { max_lr } => {
            let half = epochs as f64 / 2.0;
            if half <= 0.0 {
                return *max_lr;
            }
            let t = epoch.clamp(0.0, epochs as f64);
            if t <= half {
                max_lr * t / half
            } else {
                max_lr * (epochs as f64 - t) / half
            }
        }
        Scheduler::MultiStep {
            base_lr,
            milestones,
            factor,
        } => {
            let passed = milestones.iter().filter(|&&m| m as f64 <= epoch).count();
            base_lr * libm::pow(*factor, passed as f64)
        }
    }
}
