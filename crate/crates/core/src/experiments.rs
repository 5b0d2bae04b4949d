//! Monte-Carlo harnesses over independent seeded trials.
//!
//! Trial `i` of an experiment with base seed `s` always uses
//! [`trial_rng(s, i)`](crate::trial_rng), and results are collected in trial
//! order, so outputs do not depend on the worker count.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{measure_gap_lb, rate_tuned};
use crate::error::{invalid, Error, Result};
use crate::noise::{Oracle, OracleSpec};
use crate::optimizers::{run_trajectory, OptimizerSpec, RunOptions, RunSummary, Trajectory, UpdateRule};
use crate::output::{fmt_float, CsvOut};
use crate::problems::{make_1d_lb_quadratic, Problem, ProblemSpec};
use crate::schedules::{
    momentum_param_free_preset, param_free_preset, tuned_minibatch_preset, tuned_momentum_preset, StepSchedule,
};
use crate::{bounds::ProblemParams, noise::NoiseSpec, trial_rng};

/// Run-level statistic aggregated across trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    #[default]
    AvgGradNorm,
    RmsGradNorm,
    FinalLoss,
}

impl Statistic {
    pub fn of(&self, summary: &RunSummary) -> f64 {
        match self {
            Self::AvgGradNorm => summary.avg_grad_norm,
            Self::RmsGradNorm => summary.rms_grad_norm,
            Self::FinalLoss => summary.final_loss,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::AvgGradNorm => "avg_grad_norm",
            Self::RmsGradNorm => "rms_grad_norm",
            Self::FinalLoss => "final_loss",
        }
    }
}

/// Parameter presets resolved against the problem and oracle at run time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum PresetSpec {
    /// Tuned minibatch schedule; `sigma` defaults to the oracle's certified
    /// `p`-th moment bound.
    TunedMinibatch {
        p: f64,
        #[serde(default)]
        sigma: Option<f64>,
    },
    ParamFree { eta: f64, batch: f64 },
    TunedMomentum {
        p: f64,
        #[serde(default)]
        sigma: Option<f64>,
    },
    MomentumParamFree { eta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OptimizerChoice {
    Explicit(OptimizerSpec),
    Preset { rule: UpdateRule, preset: PresetSpec },
}

impl OptimizerChoice {
    pub fn resolve(&self, problem: &Problem, oracle: &OracleSpec, horizon: u64) -> Result<OptimizerSpec> {
        let sigma_for = |p: f64, sigma: Option<f64>| match sigma {
            Some(s) => Ok(s),
            None => oracle.certified_sigma(p, problem.dim),
        };
        match *self {
            Self::Explicit(spec) => Ok(spec),
            Self::Preset { rule, preset } => Ok(match preset {
                PresetSpec::TunedMinibatch { p, sigma } => {
                    let (step, batch) =
                        tuned_minibatch_preset(problem.delta1, problem.smoothness, sigma_for(p, sigma)?, p, horizon)?;
                    OptimizerSpec::new(rule, step).with_batch(batch)
                }
                PresetSpec::ParamFree { eta, batch } => {
                    let (step, batch) = param_free_preset(eta, batch);
                    OptimizerSpec::new(rule, step).with_batch(batch)
                }
                PresetSpec::TunedMomentum { p, sigma } => {
                    let (step, momentum) =
                        tuned_momentum_preset(problem.delta1, problem.smoothness, sigma_for(p, sigma)?, p, horizon)?;
                    OptimizerSpec::new(rule, step).with_momentum(momentum)
                }
                PresetSpec::MomentumParamFree { eta } => {
                    let (step, momentum) = momentum_param_free_preset(eta);
                    OptimizerSpec::new(rule, step).with_momentum(momentum)
                }
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub oracle: OracleSpec,
    pub optimizer: OptimizerChoice,
    pub horizon: u64,
    pub trials: u64,
    pub seed: u64,
    pub statistic: Statistic,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    pub divergence_bound: f64,
}

impl ExperimentConfig {
    pub fn new(problem: ProblemSpec, oracle: OracleSpec, optimizer: OptimizerChoice, horizon: u64, trials: u64, seed: u64) -> Self {
        Self {
            problem,
            oracle,
            optimizer,
            horizon,
            trials,
            seed,
            statistic: Statistic::AvgGradNorm,
            jobs: 0,
            divergence_bound: RunOptions::default().divergence_bound,
        }
    }

    pub fn with_statistic(mut self, statistic: Statistic) -> Self {
        self.statistic = statistic;
        self
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs;
        self
    }

    /// Builds the problem and oracle and resolves any preset.
    pub fn prepare(&self) -> Result<Prepared> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        let problem = self.problem.build()?;
        let oracle = self.oracle.build(&problem)?;
        let spec = self.optimizer.resolve(&problem, &self.oracle, self.horizon)?;
        spec.validate()?;
        Ok(Prepared { problem, oracle, spec })
    }

    fn run_options(&self, record_stride: usize) -> RunOptions {
        RunOptions {
            record_stride,
            store_iterates: false,
            divergence_bound: self.divergence_bound,
        }
    }
}

pub struct Prepared {
    pub problem: Problem,
    pub oracle: Box<dyn Oracle>,
    pub spec: OptimizerSpec,
}

/// Runs every trial of `config` on a pool of `config.jobs` workers and maps
/// each trajectory through `f`. Results are ordered by trial index.
pub fn run_trials<T, F>(config: &ExperimentConfig, record_stride: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, Trajectory) -> T + Sync,
{
    let prepared = config.prepare()?;
    let options = config.run_options(record_stride);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| invalid(format!("cannot build worker pool: {e}")))?;
    pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(config.seed, trial);
                let traj = run_trajectory(
                    &prepared.problem,
                    prepared.oracle.as_ref(),
                    &prepared.spec,
                    config.horizon,
                    &mut rng,
                    &options,
                )?;
                Ok(f(trial, traj))
            })
            .collect()
    })
}

/// Per-trial value of the configured statistic, `+∞` for diverged trials.
pub fn trial_statistics(config: &ExperimentConfig) -> Result<Vec<f64>> {
    let stat = config.statistic;
    run_trials(config, 0, |_, t| if t.diverged { f64::INFINITY } else { stat.of(&t.summary) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationResult {
    pub statistic: Statistic,
    /// Mean over completed (non-diverged) trials.
    pub mean: f64,
    /// Standard error of the mean; `None` with fewer than two completed trials.
    pub std_error: Option<f64>,
    pub trials: u64,
    pub completed: u64,
    pub diverged: u64,
}

impl ExpectationResult {
    pub fn from_values(statistic: Statistic, values: &[f64]) -> Self {
        let done: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        let n = done.len();
        let mean = if n == 0 {
            f64::INFINITY
        } else {
            done.iter().sum::<f64>() / n as f64
        };
        let std_error = (n >= 2).then(|| {
            let var = done.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            (var / n as f64).sqrt()
        });
        Self {
            statistic,
            mean,
            std_error,
            trials: values.len() as u64,
            completed: n as u64,
            diverged: (values.len() - n) as u64,
        }
    }

    pub const COLUMNS: [&'static str; 6] = ["statistic", "mean", "std_error", "trials", "completed", "diverged"];

    pub fn write_csv<W: Write>(&self, sink: W, config_hash: &str) -> Result<()> {
        let mut out = CsvOut::new(sink, config_hash, &Self::COLUMNS)?;
        out.row(&[
            self.statistic.name().to_string(),
            fmt_float(self.mean),
            self.std_error.map(fmt_float).unwrap_or_default(),
            self.trials.to_string(),
            self.completed.to_string(),
            self.diverged.to_string(),
        ])?;
        out.finish()
    }
}

/// Sample mean and standard error of the configured statistic.
pub fn estimate_expectation(config: &ExperimentConfig) -> Result<ExpectationResult> {
    let values = trial_statistics(config)?;
    Ok(ExpectationResult::from_values(config.statistic, &values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub delta: f64,
    pub log_inv_delta: f64,
    pub quantile: f64,
    /// `δ ≥ 2/k` and the quantile is finite.
    pub stable: bool,
}

/// Empirical `(1 − δ)`-quantiles of a run statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    /// Sorted per-trial statistics; diverged trials are `+∞` and sort last.
    pub sorted: Vec<f64>,
    /// Rows ordered by increasing `log(1/δ)`.
    pub rows: Vec<QuantileRow>,
}

fn validate_deltas(deltas: &[f64]) -> Result<Vec<f64>> {
    if deltas.is_empty() {
        return Err(invalid("delta grid is empty"));
    }
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
        return Err(invalid(format!("delta {d} lies outside (0, 1)")));
    }
    let mut sorted = deltas.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("delta grid contains duplicates"));
    }
    Ok(sorted)
}

/// Order statistic `s_(⌈(1−δ)k⌉)` (1-based) of sorted values.
pub fn order_statistic(sorted: &[f64], delta: f64) -> f64 {
    let k = sorted.len() as f64;
    // The small offset keeps exact products like 0.9 * 10 from rounding up.
    let idx = ((1.0 - delta) * k - 1e-9).ceil().clamp(1.0, k) as usize;
    sorted[idx - 1]
}

impl QuantileTable {
    pub fn from_samples(mut samples: Vec<f64>, deltas: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("no samples"));
        }
        if samples.iter().any(|v| v.is_nan()) {
            return Err(invalid("samples contain NaN"));
        }
        samples.sort_by(f64::total_cmp);
        let k = samples.len() as f64;
        let rows = validate_deltas(deltas)?
            .into_iter()
            .map(|delta| {
                let quantile = order_statistic(&samples, delta);
                QuantileRow {
                    delta,
                    log_inv_delta: (1.0 / delta).ln(),
                    quantile,
                    stable: delta >= 2.0 / k && quantile.is_finite(),
                }
            })
            .collect();
        Ok(Self { sorted: samples, rows })
    }

    /// A table from given `(δ, quantile)` pairs, for synthetic curves.
    pub fn from_curve(deltas: &[f64], quantiles: &[f64]) -> Result<Self> {
        if deltas.len() != quantiles.len() {
            return Err(invalid("deltas and quantiles differ in length"));
        }
        validate_deltas(deltas)?;
        let mut rows: Vec<QuantileRow> = deltas
            .iter()
            .zip(quantiles)
            .map(|(&delta, &quantile)| QuantileRow {
                delta,
                log_inv_delta: (1.0 / delta).ln(),
                quantile,
                stable: quantile.is_finite(),
            })
            .collect();
        rows.sort_by(|a, b| a.log_inv_delta.total_cmp(&b.log_inv_delta));
        Ok(Self { sorted: Vec::new(), rows })
    }

    /// Empirical `(1 − δ)`-quantile of the stored samples.
    pub fn query(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("delta {delta} lies outside (0, 1)")));
        }
        if self.sorted.is_empty() {
            return Err(invalid("table holds no samples"));
        }
        Ok(order_statistic(&self.sorted, delta))
    }

    pub const COLUMNS: [&'static str; 4] = ["delta", "log_inv_delta", "quantile", "stable"];

    pub fn write_csv<W: Write>(&self, sink: W, config_hash: &str) -> Result<()> {
        let mut out = CsvOut::new(sink, config_hash, &Self::COLUMNS)?;
        for r in &self.rows {
            out.row(&[
                fmt_float(r.delta),
                fmt_float(r.log_inv_delta),
                fmt_float(r.quantile),
                r.stable.to_string(),
            ])?;
        }
        out.finish()
    }
}

/// Quantiles of the configured statistic across `config.trials` trials.
pub fn quantile_curve(config: &ExperimentConfig, deltas: &[f64]) -> Result<QuantileTable> {
    validate_deltas(deltas)?;
    QuantileTable::from_samples(trial_statistics(config)?, deltas)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeClass {
    Sublinear,
    Linear,
    Superlinear,
}

impl SlopeClass {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Sublinear => "sublinear",
            Self::Linear => "linear",
            Self::Superlinear => "superlinear",
        }
    }
}

/// Tolerances of the slope-change vote.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeVote {
    /// A slope change counts only if it exceeds this fraction of the larger
    /// of the two adjacent slopes.
    pub rel_tol: f64,
    /// Slopes at or below this are treated as zero.
    pub abs_tol: f64,
}

impl Default for SlopeVote {
    fn default() -> Self {
        Self {
            rel_tol: 0.1,
            abs_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeProfile {
    pub slopes: Vec<f64>,
    pub class: SlopeClass,
}

/// Finite-difference slopes of quantile against `log(1/δ)`, classified by a
/// majority vote over successive slope changes.
///
/// An infinite quantile (diverged trials in the tail) classifies as
/// superlinear.
pub fn slope_profile(table: &QuantileTable, vote: &SlopeVote) -> Result<SlopeProfile> {
    let rows = &table.rows;
    if rows.len() < 3 {
        return Err(invalid(format!("need at least 3 grid points, got {}", rows.len())));
    }
    let slopes: Vec<f64> = rows
        .windows(2)
        .map(|w| (w[1].quantile - w[0].quantile) / (w[1].log_inv_delta - w[0].log_inv_delta))
        .collect();
    if rows.iter().any(|r| !r.quantile.is_finite()) {
        return Ok(SlopeProfile {
            slopes,
            class: SlopeClass::Superlinear,
        });
    }
    let scale = slopes.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if scale <= vote.abs_tol {
        return Ok(SlopeProfile {
            slopes,
            class: SlopeClass::Sublinear,
        });
    }
    let (mut up, mut down) = (0usize, 0usize);
    for w in slopes.windows(2) {
        let tol = vote.rel_tol * w[0].abs().max(w[1].abs()).max(vote.abs_tol);
        let change = w[1] - w[0];
        if change > tol {
            up += 1;
        } else if change < -tol {
            down += 1;
        }
    }
    let votes = slopes.len() - 1;
    let class = if 2 * up > votes {
        SlopeClass::Superlinear
    } else if 2 * down > votes {
        SlopeClass::Sublinear
    } else {
        SlopeClass::Linear
    };
    Ok(SlopeProfile { slopes, class })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipWindow {
    /// First iteration of the window (1-based, inclusive).
    pub start: u64,
    /// Last iteration of the window (inclusive).
    pub end: u64,
    pub clip_fraction: f64,
    /// Mean `‖g_t‖` of the estimates in the window.
    pub mean_estimate_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipFractionTable {
    pub windows: Vec<ClipWindow>,
    /// Trials that diverged; their completed iterations still count.
    pub diverged: u64,
}

impl ClipFractionTable {
    pub const COLUMNS: [&'static str; 4] = ["window_start", "window_end", "clip_fraction", "mean_estimate_norm"];

    pub fn write_csv<W: Write>(&self, sink: W, config_hash: &str) -> Result<()> {
        let mut out = CsvOut::new(sink, config_hash, &Self::COLUMNS)?;
        for w in &self.windows {
            out.row(&[
                w.start.to_string(),
                w.end.to_string(),
                fmt_float(w.clip_fraction),
                fmt_float(w.mean_estimate_norm),
            ])?;
        }
        out.finish()
    }
}

/// Per-window clipping frequency and mean estimate norm, pooled over trials.
pub fn clip_fraction_study(config: &ExperimentConfig, window: u64) -> Result<ClipFractionTable> {
    if window == 0 || window > config.horizon {
        return Err(invalid(format!("window {window} must lie in 1..={}", config.horizon)));
    }
    let prepared = config.prepare()?;
    if !matches!(prepared.spec.rule, UpdateRule::ClipSgd { .. }) {
        return Err(invalid("clip-fraction study needs the clip_sgd rule"));
    }
    let n_windows = config.horizon.div_ceil(window) as usize;
    let per_trial = run_trials(config, 1, |_, traj| {
        let mut clips = vec![0u64; n_windows];
        let mut norms = vec![0.0f64; n_windows];
        let mut counts = vec![0u64; n_windows];
        for r in &traj.records {
            let w = ((r.t - 1) / window) as usize;
            clips[w] += r.clipped as u64;
            norms[w] += r.estimate_norm;
            counts[w] += 1;
        }
        (clips, norms, counts, traj.diverged)
    })?;

    let mut clips = vec![0u64; n_windows];
    let mut norms = vec![0.0f64; n_windows];
    let mut counts = vec![0u64; n_windows];
    let mut diverged = 0;
    for (c, n, k, d) in per_trial {
        for w in 0..n_windows {
            clips[w] += c[w];
            norms[w] += n[w];
            counts[w] += k[w];
        }
        diverged += d as u64;
    }
    let windows = (0..n_windows)
        .map(|w| {
            let start = w as u64 * window + 1;
            let end = ((w as u64 + 1) * window).min(config.horizon);
            let k = counts[w].max(1) as f64;
            ClipWindow {
                start,
                end,
                clip_fraction: clips[w] as f64 / k,
                mean_estimate_norm: norms[w] / k,
            }
        })
        .collect();
    Ok(ClipFractionTable { windows, diverged })
}

/// Grid over `η_t = η t^{-r}` and, for Clip-SGD, the threshold scale `γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub eta: Vec<f64>,
    #[serde(default = "default_r_grid")]
    pub r: Vec<f64>,
    /// Empty keeps the template's clipping schedule.
    #[serde(default)]
    pub gamma: Vec<f64>,
}

fn default_r_grid() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub eta: f64,
    pub r: f64,
    pub gamma: Option<f64>,
    /// Mean statistic, `+∞` if any trial diverged.
    pub score: f64,
    pub std_error: Option<f64>,
    pub diverged: u64,
}

impl GridCell {
    fn key(&self) -> (f64, f64, f64) {
        (self.eta, self.r, self.gamma.unwrap_or(0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: GridCell,
    /// All cells in lexicographic `(η, r, γ)` order.
    pub cells: Vec<GridCell>,
}

impl GridResult {
    pub const COLUMNS: [&'static str; 7] = ["eta", "r", "gamma", "score", "std_error", "diverged", "best"];

    pub fn write_csv<W: Write>(&self, sink: W, config_hash: &str) -> Result<()> {
        let mut out = CsvOut::new(sink, config_hash, &Self::COLUMNS)?;
        for c in &self.cells {
            out.row(&[
                fmt_float(c.eta),
                fmt_float(c.r),
                c.gamma.map(fmt_float).unwrap_or_default(),
                fmt_float(c.score),
                c.std_error.map(fmt_float).unwrap_or_default(),
                c.diverged.to_string(),
                (c.key() == self.best.key()).to_string(),
            ])?;
        }
        out.finish()
    }
}

fn sorted_grid(values: &[f64], name: &str) -> Result<Vec<f64>> {
    let mut v = values.to_vec();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(invalid(format!("{name} grid has non-finite values")));
    }
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

/// Evaluates every grid cell with the template's seed (common random numbers
/// across cells) and returns the cell with the smallest score, ties going to
/// the lexicographically smallest `(η, r, γ)`.
pub fn grid_search(template: &ExperimentConfig, grid: &GridSpec) -> Result<GridResult> {
    let OptimizerChoice::Explicit(base) = template.optimizer else {
        return Err(invalid("grid search needs an explicit optimizer, not a preset"));
    };
    let etas = sorted_grid(&grid.eta, "eta")?;
    let rs = sorted_grid(&grid.r, "r")?;
    let gammas = sorted_grid(&grid.gamma, "gamma")?;
    if etas.is_empty() || rs.is_empty() {
        return Err(invalid("grid is empty"));
    }
    if !gammas.is_empty() && !matches!(base.rule, UpdateRule::ClipSgd { .. }) {
        return Err(invalid("a gamma grid needs the clip_sgd rule"));
    }
    let gamma_axis: Vec<Option<f64>> = if gammas.is_empty() {
        vec![None]
    } else {
        gammas.into_iter().map(Some).collect()
    };

    let mut cells = Vec::new();
    for &eta in &etas {
        for &r in &rs {
            for &gamma in &gamma_axis {
                let mut spec = base;
                spec.step = StepSchedule::IteratePower { eta, r };
                if let (Some(g), UpdateRule::ClipSgd { clip }) = (gamma, spec.rule) {
                    spec.rule = UpdateRule::ClipSgd { clip: clip.with_gamma(g) };
                }
                let config = ExperimentConfig {
                    optimizer: OptimizerChoice::Explicit(spec),
                    ..template.clone()
                };
                let res = estimate_expectation(&config)?;
                let score = if res.diverged > 0 || res.mean.is_nan() {
                    f64::INFINITY
                } else {
                    res.mean
                };
                cells.push(GridCell {
                    eta,
                    r,
                    gamma,
                    score,
                    std_error: res.std_error,
                    diverged: res.diverged,
                });
            }
        }
    }
    let mut best = cells[0].clone();
    for c in &cells[1..] {
        if c.score < best.score {
            best = c.clone();
        }
    }
    Ok(GridResult { best, cells })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureGapRow {
    pub horizon: u64,
    pub avg_grad_norm: f64,
    pub rms_grad_norm: f64,
    /// `None` below `T = 18`, where the lower bound does not apply.
    pub lower_bound: Option<f64>,
    pub rate_bound: f64,
    pub rms_above_lb: Option<bool>,
    pub avg_below_rate: bool,
}

impl MeasureGapRow {
    pub const COLUMNS: [&'static str; 7] = [
        "horizon",
        "avg_grad_norm",
        "rms_grad_norm",
        "lower_bound",
        "rate_bound",
        "rms_above_lb",
        "avg_below_rate",
    ];
}

/// Zero-noise tuned NSGD on `½x²` from `x1` for each horizon.
pub fn measure_gap_experiment(x1: f64, horizons: &[u64]) -> Result<Vec<MeasureGapRow>> {
    let problem = make_1d_lb_quadratic(x1)?;
    let oracle = crate::noise::AdditiveOracle::new(problem.clone(), NoiseSpec::none());
    horizons
        .iter()
        .map(|&t| {
            if t == 0 {
                return Err(invalid("horizon must be at least 1"));
            }
            let eta = (problem.delta1 / (problem.smoothness * t as f64)).sqrt();
            let spec = OptimizerSpec::nsgd(StepSchedule::Constant { eta });
            let run = run_trajectory(&problem, &oracle, &spec, t, &mut trial_rng(0, 0), &RunOptions::summary_only())?;
            let lower_bound = match measure_gap_lb(problem.delta1, problem.smoothness, t) {
                Ok(v) => Some(v),
                Err(Error::Precondition(_)) => None,
                Err(e) => return Err(e),
            };
            let rate_bound = rate_tuned(&ProblemParams::new(problem.delta1, problem.smoothness, 0.0, 2.0, t));
            let s = run.summary;
            Ok(MeasureGapRow {
                horizon: t,
                avg_grad_norm: s.avg_grad_norm,
                rms_grad_norm: s.rms_grad_norm,
                lower_bound,
                rate_bound,
                rms_above_lb: lower_bound.map(|lb| s.rms_grad_norm >= lb),
                avg_below_rate: s.avg_grad_norm <= rate_bound,
            })
        })
        .collect()
}

pub fn write_measure_gap_csv<W: Write>(rows: &[MeasureGapRow], sink: W, config_hash: &str) -> Result<()> {
    let mut out = CsvOut::new(sink, config_hash, &MeasureGapRow::COLUMNS)?;
    for r in rows {
        out.row(&[
            r.horizon.to_string(),
            fmt_float(r.avg_grad_norm),
            fmt_float(r.rms_grad_norm),
            r.lower_bound.map(fmt_float).unwrap_or_default(),
            fmt_float(r.rate_bound),
            r.rms_above_lb.map(|b| b.to_string()).unwrap_or_default(),
            r.avg_below_rate.to_string(),
        ])?;
    }
    out.finish()
}
