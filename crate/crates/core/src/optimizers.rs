//! Update rules and the trajectory runner.

use std::io::Write;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Result};
use crate::estimators::{minibatch_into, MomentumEstimator};
use crate::linalg;
use crate::noise::Oracle;
use crate::output::{fmt_float, CsvOut};
use crate::problems::Problem;
use crate::schedules::{BatchSchedule, ClipSchedule, MomentumSchedule, StepSchedule};

/// `x − η g/‖g‖`, or `x` when `g = 0`.
pub fn step_nsgd(x: &[f64], g: &[f64], eta: f64) -> Result<Vec<f64>> {
    check_step_inputs(x, g, eta)?;
    let mut out = x.to_vec();
    let n = linalg::norm(g);
    if n > 0.0 {
        linalg::axpy(-eta / n, g, &mut out);
    }
    Ok(out)
}

/// `x − η min{1, γ/‖g‖} g` and whether `‖g‖ > γ`.
pub fn step_clip(x: &[f64], g: &[f64], eta: f64, gamma: f64) -> Result<(Vec<f64>, bool)> {
    check_step_inputs(x, g, eta)?;
    if !(gamma > 0.0) {
        return Err(invalid(format!("clipping threshold must be positive, got {gamma}")));
    }
    let mut out = x.to_vec();
    let n = linalg::norm(g);
    let clipped = n > gamma;
    let factor = if clipped { gamma / n } else { 1.0 };
    linalg::axpy(-eta * factor, g, &mut out);
    Ok((out, clipped))
}

/// `x − η g`.
pub fn step_sgd(x: &[f64], g: &[f64], eta: f64) -> Result<Vec<f64>> {
    check_step_inputs(x, g, eta)?;
    let mut out = x.to_vec();
    linalg::axpy(-eta, g, &mut out);
    Ok(out)
}

fn check_step_inputs(x: &[f64], g: &[f64], eta: f64) -> Result<()> {
    ensure_finite("x", x)?;
    ensure_finite("g", g)?;
    if x.len() != g.len() {
        return Err(invalid("x and g differ in length"));
    }
    if !eta.is_finite() {
        return Err(invalid("step size is not finite"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum UpdateRule {
    Sgd,
    Nsgd,
    ClipSgd { clip: ClipSchedule },
}

impl UpdateRule {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Sgd => "sgd",
            Self::Nsgd => "nsgd",
            Self::ClipSgd { .. } => "clip_sgd",
        }
    }
}

/// How each step's gradient estimate is formed. A plain estimator is a
/// minibatch of constant size one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorSpec {
    Minibatch { batch: BatchSchedule },
    Momentum { momentum: MomentumSchedule },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    pub rule: UpdateRule,
    pub step: StepSchedule,
    pub estimator: EstimatorSpec,
}

impl OptimizerSpec {
    pub fn new(rule: UpdateRule, step: StepSchedule) -> Self {
        Self {
            rule,
            step,
            estimator: EstimatorSpec::Minibatch {
                batch: BatchSchedule::default(),
            },
        }
    }

    pub fn nsgd(step: StepSchedule) -> Self {
        Self::new(UpdateRule::Nsgd, step)
    }

    pub fn sgd(step: StepSchedule) -> Self {
        Self::new(UpdateRule::Sgd, step)
    }

    pub fn clip_sgd(step: StepSchedule, clip: ClipSchedule) -> Self {
        Self::new(UpdateRule::ClipSgd { clip }, step)
    }

    pub fn with_batch(mut self, batch: BatchSchedule) -> Self {
        self.estimator = EstimatorSpec::Minibatch { batch };
        self
    }

    pub fn with_momentum(mut self, momentum: MomentumSchedule) -> Self {
        self.estimator = EstimatorSpec::Momentum { momentum };
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.step.validate()?;
        if let UpdateRule::ClipSgd { clip } = &self.rule {
            clip.validate()?;
        }
        match &self.estimator {
            EstimatorSpec::Minibatch { batch } => batch.validate(),
            EstimatorSpec::Momentum { momentum } => momentum.validate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Keep every `record_stride`-th record (starting at `t = 1`); 0 keeps none.
    pub record_stride: usize,
    pub store_iterates: bool,
    /// The run stops as diverged once `‖x_t‖` exceeds this bound.
    pub divergence_bound: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            record_stride: 1,
            store_iterates: false,
            divergence_bound: 1e12,
        }
    }
}

impl RunOptions {
    pub fn summary_only() -> Self {
        Self {
            record_stride: 0,
            ..Self::default()
        }
    }
}

/// Metrics of one iteration. Gradient quantities use the exact gradient at
/// `x_t`, never the estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: u64,
    pub loss: f64,
    pub grad_norm: f64,
    pub grad_sq_norm: f64,
    /// Cosine between `∇F(x_t)` and `g_t`; 0 when either vanishes.
    pub cosine: f64,
    pub clipped: bool,
    pub step: f64,
    pub batch: u64,
    pub batch_raw: f64,
    /// Cumulative oracle calls including this iteration.
    pub oracle_calls: u64,
    pub estimate_norm: f64,
    /// `‖g_t − ∇F(x_t)‖`.
    pub estimate_error: f64,
    pub x: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub avg_grad_norm: f64,
    pub rms_grad_norm: f64,
    /// `F(x_T)`.
    pub final_loss: f64,
    pub clip_fraction: f64,
    pub total_oracle_calls: u64,
    /// Completed iterations (`T` unless the run diverged).
    pub iterations: u64,
}

/// Both sides of the descent inequality accumulated over a run:
/// `Σ η_t φ_t ‖∇F(x_t)‖` and `Σ η_t²`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DescentLedger {
    pub weighted_cosine_sum: f64,
    pub step_sq_sum: f64,
}

impl DescentLedger {
    pub fn rhs(&self, delta1: f64, smoothness: f64) -> f64 {
        delta1 + smoothness / 2.0 * self.step_sq_sum
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub summary: RunSummary,
    pub ledger: DescentLedger,
    pub diverged: bool,
}

/// Runs `horizon` iterations from `problem.x1`.
///
/// Divergence (non-finite iterate or `‖x‖` above the configured bound) ends
/// the run early with `diverged = true` and infinite summary statistics.
pub fn run_trajectory(
    problem: &Problem,
    oracle: &dyn Oracle,
    spec: &OptimizerSpec,
    horizon: u64,
    rng: &mut dyn RngCore,
    options: &RunOptions,
) -> Result<Trajectory> {
    spec.validate()?;
    if horizon == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    if oracle.dim() != problem.dim {
        return Err(invalid("oracle and problem dimensions differ"));
    }
    let dim = problem.dim;
    let mut x = problem.x1.clone();
    let mut grad = vec![0.0; dim];
    let mut est = vec![0.0; dim];
    let mut scratch = vec![0.0; dim];
    let mut momentum = match spec.estimator {
        EstimatorSpec::Momentum { .. } => Some(MomentumEstimator::new(dim)),
        EstimatorSpec::Minibatch { .. } => None,
    };

    let capacity = match options.record_stride {
        0 => 0,
        s => (horizon as usize).div_ceil(s),
    };
    let mut records = Vec::with_capacity(capacity);
    let mut ledger = DescentLedger::default();
    let (mut sum_norm, mut sum_sq, mut clips) = (0.0, 0.0, 0u64);
    let mut calls = 0u64;
    let mut last_loss = f64::NAN;
    let mut completed = 0u64;
    let mut diverged = false;

    for t in 1..=horizon {
        problem.gradient_into(&x, &mut grad);
        let grad_sq_norm = linalg::norm_sq(&grad);
        let grad_norm = grad_sq_norm.sqrt();
        let loss = problem.value(&x);

        let (batch, batch_raw) = match (&spec.estimator, momentum.as_mut()) {
            (EstimatorSpec::Minibatch { batch }, _) => {
                let b = batch.at(t, horizon);
                calls += minibatch_into(oracle, &x, b, rng, &mut scratch, &mut est)?;
                (b, batch.raw(t, horizon))
            }
            (EstimatorSpec::Momentum { momentum: schedule }, Some(state)) => {
                est.copy_from_slice(state.update(oracle, &x, schedule.at(t), rng)?);
                calls += 1;
                (1, 1.0)
            }
            (EstimatorSpec::Momentum { .. }, None) => unreachable!(),
        };

        let snapshot = (options.store_iterates && options.record_stride > 0).then(|| x.clone());
        let cosine = linalg::cosine(&grad, &est);
        let estimate_norm = linalg::norm(&est);
        let estimate_error = linalg::dist(&est, &grad);
        let eta = spec.step.at(t, horizon);
        let clipped = match spec.rule {
            UpdateRule::Sgd => {
                linalg::axpy(-eta, &est, &mut x);
                false
            }
            UpdateRule::Nsgd => {
                if estimate_norm > 0.0 {
                    linalg::axpy(-eta / estimate_norm, &est, &mut x);
                }
                false
            }
            UpdateRule::ClipSgd { clip } => {
                let gamma = clip.at(t);
                let clipped = estimate_norm > gamma;
                let factor = if clipped { gamma / estimate_norm } else { 1.0 };
                linalg::axpy(-eta * factor, &est, &mut x);
                clipped
            }
        };

        ledger.weighted_cosine_sum += eta * cosine * grad_norm;
        ledger.step_sq_sum += eta * eta;
        sum_norm += grad_norm;
        sum_sq += grad_sq_norm;
        clips += clipped as u64;
        last_loss = loss;
        completed = t;

        if options.record_stride > 0 && (t - 1) % options.record_stride as u64 == 0 {
            records.push(TrajectoryRecord {
                t,
                loss,
                grad_norm,
                grad_sq_norm,
                cosine,
                clipped,
                step: eta,
                batch,
                batch_raw,
                oracle_calls: calls,
                estimate_norm,
                estimate_error,
                x: snapshot,
            });
        }

        let norm_x = linalg::norm(&x);
        if !norm_x.is_finite() || norm_x > options.divergence_bound || !grad_norm.is_finite() {
            diverged = true;
            break;
        }
    }

    let summary = if diverged {
        RunSummary {
            avg_grad_norm: f64::INFINITY,
            rms_grad_norm: f64::INFINITY,
            final_loss: f64::INFINITY,
            clip_fraction: clips as f64 / completed as f64,
            total_oracle_calls: calls,
            iterations: completed,
        }
    } else {
        let n = horizon as f64;
        RunSummary {
            avg_grad_norm: sum_norm / n,
            rms_grad_norm: (sum_sq / n).sqrt(),
            final_loss: last_loss,
            clip_fraction: clips as f64 / n,
            total_oracle_calls: calls,
            iterations: completed,
        }
    };

    if matches!(spec.rule, UpdateRule::Nsgd) && !diverged {
        debug_assert!(
            ledger.weighted_cosine_sum
                <= ledger.rhs(problem.delta1, problem.smoothness) + 1e-8 * horizon as f64,
            "descent ledger violated: {} > {}",
            ledger.weighted_cosine_sum,
            ledger.rhs(problem.delta1, problem.smoothness)
        );
    }

    Ok(Trajectory {
        records,
        summary,
        ledger,
        diverged,
    })
}

/// Column header of trajectory CSV files.
pub const TRAJECTORY_COLUMNS: [&str; 12] = [
    "trial",
    "t",
    "loss",
    "grad_norm",
    "grad_sq_norm",
    "cosine",
    "clipped",
    "step",
    "batch",
    "oracle_calls",
    "estimate_norm",
    "estimate_error",
];

/// Appends one trial's records to a trajectory CSV.
pub fn write_trajectory_rows<W: Write>(out: &mut CsvOut<W>, trial: u64, records: &[TrajectoryRecord]) -> Result<()> {
    for r in records {
        out.row(&[
            trial.to_string(),
            r.t.to_string(),
            fmt_float(r.loss),
            fmt_float(r.grad_norm),
            fmt_float(r.grad_sq_norm),
            fmt_float(r.cosine),
            (r.clipped as u8).to_string(),
            fmt_float(r.step),
            r.batch.to_string(),
            r.oracle_calls.to_string(),
            fmt_float(r.estimate_norm),
            fmt_float(r.estimate_error),
        ])?;
    }
    Ok(())
}
