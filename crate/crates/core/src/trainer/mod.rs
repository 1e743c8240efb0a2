//! Adversarial trainers.
//!
//! - [`sat_step`]: attack the current parameters, then take an SGD step on the
//!   adversarial loss.
//! - [`last_step`]: attack the current (target) parameters, take the SGD step
//!   from the proxy parameters instead (the previous target state) to get fast
//!   weights `ω̃`, then move the target by `θ ← θ − γ(θ − ω̃)` and record the
//!   pre-step target as the next proxy.
//! - [`swa_update`]: running mean of epoch-end weights, the averaging baseline.
//!
//! [`train`] drives any of the three over a dataset and evaluates every epoch.

mod harness;
mod optim;

pub use harness::{cauchy_harness, HarnessStep, HarnessTrace, Quadratic, SmoothProblem, DIVERGENCE_RUN};
pub use optim::{schedule_lr, sgd_step, OptimizerConfig, Scheduler};

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::attack::{self, AttackConfig, AttackError};
use crate::data::{self, Batch, DataError, Dataset};
use crate::evaluator::{self, EvalError};
use crate::grad::GradError;
use crate::net::{self, Checkpoint, NetError, NetworkSpec, ParamVector};
use crate::objective::{self, ObjectiveError, SdConfig};
use crate::seed::{self, Stream};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("parameter layouts do not match")]
    LayoutMismatch,
    #[error("invalid training config: {0}")]
    Config(&'static str),
    #[error("step requires mode {expected:?}, trainer is in {found:?}")]
    Mode { expected: Mode, found: Mode },
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl TrainError {
    /// Whether the error is a numerical blow-up rather than a usage error.
    pub fn is_numerical(&self) -> bool {
        fn grad(e: &GradError) -> bool {
            matches!(e, GradError::NumericalOverflow { .. })
        }
        fn net(e: &NetError) -> bool {
            matches!(e, NetError::Grad(g) if grad(g))
        }
        match self {
            TrainError::Net(e) => net(e),
            TrainError::Attack(AttackError::Net(e)) => net(e),
            TrainError::Objective(ObjectiveError::Grad(g)) => grad(g),
            TrainError::Objective(ObjectiveError::Net(e)) => net(e),
            TrainError::Eval(EvalError::Net(e)) => net(e),
            TrainError::Eval(EvalError::Attack(AttackError::Net(e))) => net(e),
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Standard adversarial training.
    Sat,
    /// Proxy-guided training.
    Last,
    /// Standard adversarial training with weight averaging.
    SatSwa,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Sat => "sat",
            Mode::Last => "last",
            Mode::SatSwa => "sat+swa",
        }
    }
}

/// How the fast weights are obtained from the proxy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProxyStep {
    /// Through the configured SGD optimizer (momentum, weight decay).
    Optimizer,
    /// `ω̃ = ω − β∇L(ω)`.
    Bare,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    pub epochs: usize,
    pub batch_size: usize,
    pub scheduler: Scheduler,
    /// Aggregation coefficient of the proxy-guided update.
    pub gamma: f64,
    /// Attack used to craft training perturbations.
    pub attack: AttackConfig,
    /// Attack used for per-epoch robust evaluation.
    pub eval_attack: AttackConfig,
    pub sd: Option<SdConfig>,
    pub optimizer: OptimizerConfig,
    pub proxy_step: ProxyStep,
    /// First epoch (0-based) whose end-of-epoch weights enter the SWA mean.
    pub swa_start: usize,
    pub seed: u64,
}

impl TrainConfig {
    /// Defaults: γ = 0.8, SGD momentum 0.9, weight decay 5e-4, PGD-10 evaluation.
    pub fn new(mode: Mode, epochs: usize, batch_size: usize, scheduler: Scheduler, attack: AttackConfig) -> Self {
        let eval_attack = AttackConfig::pgd10(attack.epsilon).with_box(attack.pixel_box);
        TrainConfig {
            mode,
            epochs,
            batch_size,
            scheduler,
            gamma: 0.8,
            attack,
            eval_attack,
            sd: None,
            optimizer: OptimizerConfig::default(),
            proxy_step: ProxyStep::Optimizer,
            swa_start: 0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs < 1 {
            return Err(TrainError::Config("epochs must be at least 1"));
        }
        if self.batch_size < 1 {
            return Err(TrainError::Config("batch_size must be at least 1"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(TrainError::Config("gamma must lie in (0, 1]"));
        }
        if !(self.scheduler.peak_lr() > 0.0) {
            return Err(TrainError::Config("learning rate must be positive"));
        }
        self.attack.validate()?;
        self.eval_attack.validate()?;
        if let Some(sd) = &self.sd {
            sd.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwaState {
    pub average: ParamVector,
    pub count: usize,
}

/// Mutable trainer state. `omega` is present in proxy-guided mode and `swa`
/// in averaging mode.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainerState {
    pub mode: Mode,
    pub theta: ParamVector,
    pub omega: Option<ParamVector>,
    pub momentum: ParamVector,
    pub swa: Option<SwaState>,
    pub iteration: u64,
    pub epoch: usize,
}

impl TrainerState {
    /// Fresh state around `theta`; the proxy starts as a copy of it.
    pub fn new(mode: Mode, theta: ParamVector) -> Self {
        let momentum = theta.zeros_like();
        let omega = (mode == Mode::Last).then(|| theta.clone());
        TrainerState {
            mode,
            theta,
            omega,
            momentum,
            swa: None,
            iteration: 0,
            epoch: 0,
        }
    }

    /// Parameters used for evaluation: the SWA mean once it exists, else θ.
    pub fn eval_params(&self) -> &ParamVector {
        match &self.swa {
            Some(swa) => &swa.average,
            None => &self.theta,
        }
    }
}

/// Result of one training step.
#[derive(Clone, Debug)]
pub struct StepReport {
    pub loss: f64,
    /// `ω̃` of a proxy-guided step.
    pub fast_weights: Option<ParamVector>,
}

fn adversarial_inputs(
    spec: &NetworkSpec,
    params: &ParamVector,
    batch: &Batch,
    cfg: &AttackConfig,
    seed: u64,
) -> Result<crate::grad::Tensor, TrainError> {
    let delta = attack::craft_perturbation(spec, params, batch, cfg, seed)?;
    Ok(attack::apply_perturbation(&batch.inputs, &delta, cfg.pixel_box)?)
}

/// Standard adversarial step: perturb against θ, then SGD on θ.
pub fn sat_step(
    state: &mut TrainerState,
    spec: &NetworkSpec,
    batch: &Batch,
    cfg: &TrainConfig,
    lr: f64,
    attack_seed: u64,
) -> Result<StepReport, TrainError> {
    if state.mode == Mode::Last {
        return Err(TrainError::Mode {
            expected: Mode::Sat,
            found: state.mode,
        });
    }
    let adv = adversarial_inputs(spec, &state.theta, batch, &cfg.attack, attack_seed)?;
    sat_update(state, spec, batch, &adv, cfg, lr)
}

/// The SGD half of [`sat_step`] for an already crafted adversarial batch.
pub fn sat_update(
    state: &mut TrainerState,
    spec: &NetworkSpec,
    batch: &Batch,
    adv_inputs: &crate::grad::Tensor,
    cfg: &TrainConfig,
    lr: f64,
) -> Result<StepReport, TrainError> {
    let (loss, grad) =
        objective::defense_gradient(spec, &state.theta, &batch.inputs, adv_inputs, &batch.labels, cfg.sd.as_ref())?;
    sgd_step(state.theta.values_mut(), grad.values(), lr, state.momentum.values_mut(), &cfg.optimizer)?;
    state.iteration += 1;
    Ok(StepReport {
        loss,
        fast_weights: None,
    })
}

/// Proxy-guided step: perturb against θ, step the proxy to `ω̃`, then
/// `ω ← θ` and `θ ← θ − γ(θ − ω̃)`.
pub fn last_step(
    state: &mut TrainerState,
    spec: &NetworkSpec,
    batch: &Batch,
    cfg: &TrainConfig,
    lr: f64,
    attack_seed: u64,
) -> Result<StepReport, TrainError> {
    if state.mode != Mode::Last {
        return Err(TrainError::Mode {
            expected: Mode::Last,
            found: state.mode,
        });
    }
    let adv = adversarial_inputs(spec, &state.theta, batch, &cfg.attack, attack_seed)?;
    last_update(state, spec, batch, &adv, cfg, lr)
}

/// Everything of [`last_step`] after the perturbation is crafted.
pub fn last_update(
    state: &mut TrainerState,
    spec: &NetworkSpec,
    batch: &Batch,
    adv_inputs: &crate::grad::Tensor,
    cfg: &TrainConfig,
    lr: f64,
) -> Result<StepReport, TrainError> {
    if !(0.0..=1.0).contains(&cfg.gamma) {
        return Err(TrainError::Config("gamma must lie in [0, 1]"));
    }
    let omega = state.omega.as_ref().ok_or(TrainError::Config("proxy is not initialized"))?;
    if !omega.same_layout(&state.theta) {
        return Err(TrainError::LayoutMismatch);
    }
    let (loss, grad) =
        objective::defense_gradient(spec, omega, &batch.inputs, adv_inputs, &batch.labels, cfg.sd.as_ref())?;
    let mut fast = omega.clone();
    match cfg.proxy_step {
        ProxyStep::Optimizer => {
            sgd_step(fast.values_mut(), grad.values(), lr, state.momentum.values_mut(), &cfg.optimizer)?
        }
        ProxyStep::Bare => {
            for (w, g) in fast.values_mut().iter_mut().zip(grad.values()) {
                *w -= lr * g;
            }
        }
    }
    let differential: Vec<f64> = state
        .theta
        .values()
        .iter()
        .zip(fast.values())
        .map(|(t, f)| t - f)
        .collect();
    state.omega = Some(state.theta.clone());
    for (t, g) in state.theta.values_mut().iter_mut().zip(&differential) {
        *t -= cfg.gamma * g;
    }
    state.iteration += 1;
    Ok(StepReport {
        loss,
        fast_weights: Some(fast),
    })
}

/// Folds the current θ into the running mean.
pub fn swa_update(state: &mut TrainerState) {
    match &mut state.swa {
        None => {
            state.swa = Some(SwaState {
                average: state.theta.clone(),
                count: 1,
            })
        }
        Some(swa) => {
            let n = swa.count as f64;
            for (a, &t) in swa.average.values_mut().iter_mut().zip(state.theta.values()) {
                *a = (*a * n + t) / (n + 1.0);
            }
            swa.count += 1;
        }
    }
}

/// Per-epoch metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Percent.
    pub test_standard_accuracy: f64,
    /// Percent.
    pub test_robust_accuracy: f64,
    pub test_robust_loss: f64,
    /// Learning rate of the last step of the epoch.
    pub lr: f64,
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    /// Training stopped on a non-finite loss.
    Aborted {
        epoch: usize,
        iteration: u64,
        detail: String,
    },
}

/// Consecutive zero-RA epochs that raise the collapse flag.
pub const COLLAPSE_EPOCHS: usize = 3;

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub final_checkpoint: Checkpoint,
    /// Checkpoint of the epoch with the highest robust accuracy.
    pub best_checkpoint: Checkpoint,
    pub metrics: Vec<MetricsRecord>,
    pub status: RunStatus,
    /// Epoch at which robust accuracy had been zero for
    /// [`COLLAPSE_EPOCHS`] consecutive epochs.
    pub collapse_epoch: Option<usize>,
}

fn checkpoint(spec: &NetworkSpec, params: &ParamVector, cfg: &TrainConfig, epoch: usize) -> Checkpoint {
    let mut ck = Checkpoint::new(spec.clone(), params.clone());
    let meta = &mut ck.metadata;
    meta.insert("seed".into(), cfg.seed.to_string());
    meta.insert("epoch".into(), epoch.to_string());
    meta.insert("mode".into(), cfg.mode.as_str().into());
    meta.insert("gamma".into(), format!("{}", cfg.gamma));
    meta.insert("epsilon".into(), format!("{}", cfg.attack.epsilon));
    if let Some(sd) = &cfg.sd {
        meta.insert("mu".into(), format!("{}", sd.mu));
        meta.insert("tau".into(), format!("{}", sd.tau));
    }
    ck
}

/// Runs `cfg.epochs` epochs and evaluates on `test` after each one.
///
/// `clock` returns seconds elapsed since the start of the run.
pub fn train(
    spec: &NetworkSpec,
    cfg: &TrainConfig,
    train_set: &Dataset,
    test_set: &Dataset,
    clock: &mut dyn FnMut() -> f64,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    spec.validate()?;
    let theta0 = net::init_params(spec, seed::derive(cfg.seed, Stream::Init, 0))?;
    train_from(spec, cfg, train_set, test_set, TrainerState::new(cfg.mode, theta0), clock)
}

/// [`train`] from an explicit initial state.
pub fn train_from(
    spec: &NetworkSpec,
    cfg: &TrainConfig,
    train_set: &Dataset,
    test_set: &Dataset,
    mut state: TrainerState,
    clock: &mut dyn FnMut() -> f64,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let order_seed = seed::derive(cfg.seed, Stream::DataOrder, 0);
    let eval_seed = seed::derive(cfg.seed, Stream::Eval, 0);
    let mut metrics = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, Checkpoint)> = None;
    let mut zero_run = 0;
    let mut collapse_epoch = None;
    let mut status = RunStatus::Completed;

    'epochs: for epoch in 0..cfg.epochs {
        state.epoch = epoch;
        let batches = data::batch_iter(train_set, cfg.batch_size, order_seed, epoch as u64)?;
        let per_epoch = batches.num_batches();
        let (mut loss_sum, mut seen, mut lr) = (0.0, 0usize, 0.0);
        for (i, batch) in batches.enumerate() {
            let progress = epoch as f64 + (i as f64 + 0.5) / per_epoch as f64;
            lr = schedule_lr(&cfg.scheduler, progress, cfg.epochs);
            let attack_seed = seed::derive(cfg.seed, Stream::Attack, state.iteration);
            let step = match cfg.mode {
                Mode::Last => last_step(&mut state, spec, &batch, cfg, lr, attack_seed),
                Mode::Sat | Mode::SatSwa => sat_step(&mut state, spec, &batch, cfg, lr, attack_seed),
            };
            let report = match step {
                Ok(r) => r,
                Err(e) if e.is_numerical() => {
                    status = RunStatus::Aborted {
                        epoch,
                        iteration: state.iteration,
                        detail: format!("{e}"),
                    };
                    break 'epochs;
                }
                Err(e) => return Err(e),
            };
            if !report.loss.is_finite() {
                status = RunStatus::Aborted {
                    epoch,
                    iteration: state.iteration,
                    detail: format!("non-finite training loss {}", report.loss),
                };
                break 'epochs;
            }
            loss_sum += report.loss * batch.len() as f64;
            seen += batch.len();
        }
        if cfg.mode == Mode::SatSwa && epoch >= cfg.swa_start {
            swa_update(&mut state);
        }
        let params = state.eval_params();
        let summary = match evaluator::evaluate(spec, params, test_set, &cfg.eval_attack, eval_seed) {
            Ok(s) => s,
            Err(e) => {
                let e = TrainError::from(e);
                if e.is_numerical() {
                    status = RunStatus::Aborted {
                        epoch,
                        iteration: state.iteration,
                        detail: format!("{e}"),
                    };
                    break 'epochs;
                }
                return Err(e);
            }
        };
        metrics.push(MetricsRecord {
            epoch,
            train_loss: loss_sum / seen.max(1) as f64,
            test_standard_accuracy: summary.standard_accuracy,
            test_robust_accuracy: summary.robust_accuracy,
            test_robust_loss: summary.robust_loss,
            lr,
            wall_time: clock(),
        });
        if best.as_ref().is_none_or(|(ra, _)| summary.robust_accuracy > *ra) {
            best = Some((summary.robust_accuracy, checkpoint(spec, params, cfg, epoch)));
        }
        if summary.robust_accuracy == 0.0 {
            zero_run += 1;
            if zero_run >= COLLAPSE_EPOCHS && collapse_epoch.is_none() {
                collapse_epoch = Some(epoch);
            }
        } else {
            zero_run = 0;
        }
    }
    let last_epoch = metrics.last().map_or(0, |m| m.epoch);
    let final_checkpoint = checkpoint(spec, state.eval_params(), cfg, last_epoch);
    let best_checkpoint = best.map_or_else(|| final_checkpoint.clone(), |(_, ck)| ck);
    Ok(TrainOutcome {
        final_checkpoint,
        best_checkpoint,
        metrics,
        status,
        collapse_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_blobs;
    use alloc::vec;

    fn setup(mode: Mode) -> (NetworkSpec, TrainConfig, Dataset, Dataset) {
        let spec = NetworkSpec::new(6, vec![8], 3).unwrap();
        let train = synth_blobs(3, 20, 6, 0.6, 1).unwrap();
        let test = synth_blobs(3, 10, 6, 0.6, 2).unwrap();
        let cfg = TrainConfig::new(
            mode,
            2,
            16,
            Scheduler::Constant { lr: 0.05 },
            AttackConfig::fgsm(0.05),
        );
        (spec, cfg, train, test)
    }

    #[test]
    fn swa_means() {
        let spec = NetworkSpec::new(1, vec![], 2).unwrap();
        let mut state = TrainerState::new(Mode::SatSwa, ParamVector::zeros(&spec));
        for k in 1..=5 {
            for v in state.theta.values_mut() {
                *v = k as f64;
            }
            swa_update(&mut state);
            if k == 1 {
                assert_eq!(state.swa.as_ref().unwrap().average, state.theta);
            }
        }
        let swa = state.swa.unwrap();
        assert_eq!(swa.count, 5);
        assert!(swa.average.values().iter().all(|&v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn swa_of_two_snapshots() {
        let spec = NetworkSpec::new(1, vec![], 2).unwrap();
        let a = ParamVector::from_values(&spec, vec![1.0, -2.0, 0.5, 4.0]).unwrap();
        let b = ParamVector::from_values(&spec, vec![3.0, 2.0, -0.5, 0.0]).unwrap();
        let mut state = TrainerState::new(Mode::SatSwa, a);
        swa_update(&mut state);
        state.theta = b;
        swa_update(&mut state);
        assert_eq!(state.swa.unwrap().average.values(), &[2.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn zero_epsilon_sat_is_clean_sgd() {
        let (spec, mut cfg, train, _) = setup(Mode::Sat);
        cfg.attack = AttackConfig::fgsm(0.0);
        cfg.optimizer = OptimizerConfig {
            momentum: 0.0,
            weight_decay: 0.0,
        };
        let batch = train.range(0, 8);
        let theta0 = net::init_params(&spec, 5).unwrap();
        let mut state = TrainerState::new(Mode::Sat, theta0.clone());
        sat_step(&mut state, &spec, &batch, &cfg, 0.1, 3).unwrap();
        let (_, grad) = objective::defense_gradient(&spec, &theta0, &batch.inputs, &batch.inputs, &batch.labels, None).unwrap();
        for ((t, t0), g) in state.theta.values().iter().zip(theta0.values()).zip(grad.values()) {
            assert_eq!(*t, t0 - 0.1 * g);
        }
    }

    #[test]
    fn proxy_records_previous_target() {
        let (spec, cfg, train, _) = setup(Mode::Last);
        let theta0 = net::init_params(&spec, 5).unwrap();
        let mut state = TrainerState::new(Mode::Last, theta0);
        assert_eq!(state.omega.as_ref(), Some(&state.theta));
        for i in 0..3 {
            let before = state.theta.clone();
            let report = last_step(&mut state, &spec, &train.range(i * 8, i * 8 + 8), &cfg, 0.1, i as u64).unwrap();
            assert_eq!(state.omega.as_ref(), Some(&before));
            let fast = report.fast_weights.unwrap();
            for ((t1, t0), f) in state.theta.values().iter().zip(before.values()).zip(fast.values()) {
                let combo = (1.0 - cfg.gamma) * t0 + cfg.gamma * f;
                assert!((t1 - combo).abs() <= 1e-6 * t1.abs().max(combo.abs()).max(1e-300));
            }
        }
    }

    #[test]
    fn zero_gamma_freezes_target() {
        let (spec, mut cfg, train, _) = setup(Mode::Last);
        cfg.gamma = 0.0;
        let theta0 = net::init_params(&spec, 5).unwrap();
        let mut state = TrainerState::new(Mode::Last, theta0.clone());
        for i in 0..3 {
            last_step(&mut state, &spec, &train.range(i * 8, i * 8 + 8), &cfg, 0.1, 0).unwrap();
        }
        assert_eq!(state.theta, theta0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn wrong_mode_is_rejected() {
        let (spec, cfg, train, _) = setup(Mode::Sat);
        let mut state = TrainerState::new(Mode::Sat, net::init_params(&spec, 0).unwrap());
        assert!(matches!(
            last_step(&mut state, &spec, &train.range(0, 4), &cfg, 0.1, 0),
            Err(TrainError::Mode { .. })
        ));
    }

    #[test]
    fn train_is_deterministic() {
        for mode in [Mode::Sat, Mode::Last, Mode::SatSwa] {
            let (spec, cfg, train, test) = setup(mode);
            let a = super::train(&spec, &cfg, &train, &test, &mut || 0.0).unwrap();
            let b = super::train(&spec, &cfg, &train, &test, &mut || 0.0).unwrap();
            assert_eq!(a.metrics, b.metrics);
            assert_eq!(a.final_checkpoint, b.final_checkpoint);
            assert_eq!(a.metrics.len(), 2);
            assert_eq!(a.status, RunStatus::Completed);
        }
    }

    #[test]
    fn single_clean_step_run() {
        let (spec, mut cfg, train, test) = setup(Mode::Sat);
        cfg.epochs = 1;
        cfg.batch_size = train.len();
        cfg.attack = AttackConfig::fgsm(0.0);
        cfg.eval_attack = AttackConfig::pgd10(0.0);
        let out = super::train(&spec, &cfg, &train, &test, &mut || 0.0).unwrap();
        assert_eq!(out.metrics.len(), 1);
        let m = &out.metrics[0];
        assert_eq!(m.test_standard_accuracy, m.test_robust_accuracy);
        // one step from the seeded init
        let theta0 = net::init_params(&spec, seed::derive(cfg.seed, Stream::Init, 0)).unwrap();
        let mut state = TrainerState::new(Mode::Sat, theta0);
        let batch = data::batch_iter(&train, cfg.batch_size, seed::derive(cfg.seed, Stream::DataOrder, 0), 0)
            .unwrap()
            .next()
            .unwrap();
        let lr = schedule_lr(&cfg.scheduler, 0.5, 1);
        sat_step(&mut state, &spec, &batch, &cfg, lr, 0).unwrap();
        assert_eq!(out.final_checkpoint.params, state.theta);
    }

    #[test]
    fn exploding_run_is_aborted() {
        let (spec, mut cfg, train, test) = setup(Mode::Sat);
        cfg.scheduler = Scheduler::Constant { lr: 1e250 };
        let out = super::train(&spec, &cfg, &train, &test, &mut || 0.0).unwrap();
        assert!(matches!(out.status, RunStatus::Aborted { .. }));
    }
}
