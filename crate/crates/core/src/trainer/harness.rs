//! Numerical check of the proxy-guided update on smooth deterministic problems.
//!
//! The harness iterates
//!
//! ```text
//! ω̃ = ω − β ∇L(ω);  G = θ − ω̃;  ω ← θ;  θ ← θ − γ G
//! ```
//!
//! and records, per step, both sides of `‖θ_{i+1} − θ_i‖ = γ‖ω̃ − θ_i‖` along
//! with the iterate, then measures how tightly the tail of the sequence
//! clusters.

use alloc::vec::Vec;

/// A differentiable loss over a flat parameter vector.
pub trait SmoothProblem {
    fn dim(&self) -> usize;
    fn gradient(&self, params: &[f64], out: &mut [f64]);
}

/// `½ Σ h_k (θ_k − c_k)²`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    pub center: Vec<f64>,
    pub curvature: Vec<f64>,
}

impl Quadratic {
    /// `½‖θ − c‖²`.
    pub fn isotropic(center: Vec<f64>) -> Self {
        let curvature = alloc::vec![1.0; center.len()];
        Quadratic { center, curvature }
    }
}

impl SmoothProblem for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn gradient(&self, params: &[f64], out: &mut [f64]) {
        for k in 0..params.len() {
            out[k] = self.curvature[k] * (params[k] - self.center[k]);
        }
    }
}

#[derive(Clone, Debug)]
pub struct HarnessStep {
    /// `‖θ_{i+1} − θ_i‖` as computed from the stored iterates.
    pub theta_step: f64,
    /// `γ‖ω̃ − θ_i‖`.
    pub scaled_fast_gap: f64,
    /// `θ_{i+1}`.
    pub theta: Vec<f64>,
}

impl HarnessStep {
    /// Relative mismatch of the two sides of the step identity.
    pub fn identity_residual(&self) -> f64 {
        let scale = self.theta_step.max(self.scaled_fast_gap);
        if scale == 0.0 {
            0.0
        } else {
            (self.theta_step - self.scaled_fast_gap).abs() / scale
        }
    }
}

#[derive(Clone, Debug)]
pub struct HarnessTrace {
    pub steps: Vec<HarnessStep>,
    /// Largest [`HarnessStep::identity_residual`] over the run.
    pub max_identity_residual: f64,
    /// Largest pairwise distance among the last `window` iterates.
    pub trailing_window_distance: f64,
    /// First step (1-based) at which the trailing-window distance dropped
    /// below the requested tolerance.
    pub settled_at: Option<usize>,
    /// Set when step norms grew for `DIVERGENCE_RUN` consecutive steps; the
    /// run stops there.
    pub diverged_at: Option<usize>,
}

/// Consecutive growing steps treated as divergence.
pub const DIVERGENCE_RUN: usize = 50;

fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

fn window_diameter(iterates: &[&[f64]]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..iterates.len() {
        for j in i + 1..iterates.len() {
            d = d.max(distance(iterates[i], iterates[j]));
        }
    }
    d
}

/// Runs `steps` proxy-guided updates from `theta0` (with `ω_0 = θ_0`).
pub fn cauchy_harness(
    gamma: f64,
    beta: f64,
    steps: usize,
    problem: &dyn SmoothProblem,
    theta0: &[f64],
    window: usize,
    tolerance: f64,
) -> HarnessTrace {
    let n = problem.dim();
    assert_eq!(theta0.len(), n, "initial point has the wrong dimension");
    let mut theta = theta0.to_vec();
    let mut omega = theta0.to_vec();
    let mut grad = alloc::vec![0.0; n];
    let mut fast = alloc::vec![0.0; n];
    let mut trace = HarnessTrace {
        steps: Vec::with_capacity(steps),
        max_identity_residual: 0.0,
        trailing_window_distance: f64::INFINITY,
        settled_at: None,
        diverged_at: None,
    };
    let mut growing = 0;
    let window = window.max(2);
    for i in 0..steps {
        problem.gradient(&omega, &mut grad);
        for k in 0..n {
            fast[k] = omega[k] - beta * grad[k];
        }
        let differential: Vec<f64> = theta.iter().zip(&fast).map(|(t, f)| t - f).collect();
        let previous = theta.clone();
        omega.copy_from_slice(&theta);
        for k in 0..n {
            theta[k] -= gamma * differential[k];
        }
        let step = HarnessStep {
            theta_step: distance(&theta, &previous),
            scaled_fast_gap: gamma * distance(&fast, &previous),
            theta: theta.clone(),
        };
        trace.max_identity_residual = trace.max_identity_residual.max(step.identity_residual());
        if let Some(last) = trace.steps.last() {
            if step.theta_step > last.theta_step {
                growing += 1;
            } else {
                growing = 0;
            }
        }
        trace.steps.push(step);
        if trace.steps.len() >= window {
            let tail: Vec<&[f64]> = trace.steps[trace.steps.len() - window..]
                .iter()
                .map(|s| s.theta.as_slice())
                .collect();
            trace.trailing_window_distance = window_diameter(&tail);
            if trace.settled_at.is_none() && trace.trailing_window_distance < tolerance {
                trace.settled_at = Some(i + 1);
            }
        }
        if growing >= DIVERGENCE_RUN {
            trace.diverged_at = Some(i + 1);
            break;
        }
    }
    trace
}
