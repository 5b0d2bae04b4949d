//! Executable versions of the standalone inequalities the analysis relies on.
//!
//! Each check returns a [`CheckReport`] with `passed ⇔ observed ≤ bound +
//! tolerance`. Monte-Carlo checks use a three-standard-error band on paired
//! differences.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::minibatch_into;
use crate::linalg;
use crate::noise::{
    adversarial_bias, adversarial_delta, adversarial_p_moment, AdditiveOracle, AdversarialSpec, NoiseKind, NoiseSpec,
    Oracle,
};
use crate::optimizers::{run_trajectory, OptimizerSpec, RunOptions, Trajectory};
use crate::schedules::{BatchSchedule, MomentumSchedule, StepSchedule};
use crate::problems::Problem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub samples: u64,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, observed: f64, bound: f64, tolerance: f64, samples: u64) -> Self {
        Self {
            name: name.into(),
            passed: observed <= bound + tolerance,
            observed,
            bound,
            tolerance,
            samples,
        }
    }
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n as f64 - 1.0) / self.n as f64).sqrt()
    }
}

/// `aᵀb/‖b‖ ≥ ‖a‖ − 2‖a − b‖`.
pub fn check_cosine_lemma(a: &[f64], b: &[f64]) -> Result<CheckReport> {
    if a.len() != b.len() {
        return Err(invalid("a and b differ in length"));
    }
    let nb = linalg::norm(b);
    if nb == 0.0 {
        return Err(invalid("b must be nonzero"));
    }
    let lhs = linalg::dot(a, b) / nb;
    let rhs = linalg::norm(a) - 2.0 * linalg::dist(a, b);
    Ok(CheckReport::new("cosine_lemma", rhs, lhs, 1e-12 * (1.0 + linalg::norm(a)), 1))
}

/// `E‖S_n‖^p ≤ 2 Σ E‖X_j‖^p` for i.i.d. zero-mean `X_j ∈ R^dim` drawn from
/// `noise`.
pub fn check_von_bahr_esseen(
    noise: &NoiseSpec,
    dim: usize,
    n: usize,
    p: f64,
    mc_samples: u64,
    rng: &mut dyn RngCore,
) -> Result<CheckReport> {
    noise.validate()?;
    if !(1.0..=2.0).contains(&p) {
        return Err(invalid(format!("p must lie in [1, 2], got {p}")));
    }
    if n == 0 || dim == 0 || mc_samples < 2 {
        return Err(invalid("need n >= 1, dim >= 1 and at least two samples"));
    }
    if noise.component_abs_moment(p).is_infinite() {
        return Err(Error::Precondition(format!(
            "the {p}-th moment of the noise is infinite (tail index {})",
            noise.tail_index
        )));
    }
    let mut sum = vec![0.0; dim];
    let mut x = vec![0.0; dim];
    let (mut lhs, mut diff) = (Moments::default(), Moments::default());
    for _ in 0..mc_samples {
        sum.fill(0.0);
        let mut parts = 0.0;
        for _ in 0..n {
            x.fill(0.0);
            noise.add_noise(rng, &mut x);
            parts += linalg::norm(&x).powf(p);
            linalg::axpy(1.0, &x, &mut sum);
        }
        let l = linalg::norm(&sum).powf(p);
        lhs.push(l);
        diff.push(l - 2.0 * parts);
    }
    Ok(CheckReport::new(
        format!("von_bahr_esseen(n={n},p={p})"),
        lhs.mean,
        lhs.mean - diff.mean,
        3.0 * diff.std_error(),
        mc_samples,
    ))
}

/// `Σ η_t φ_t ‖∇F(x_t)‖ ≤ Δ₁ + (L/2) Σ η_t²` from a fully recorded run.
pub fn check_descent_ledger(trajectory: &Trajectory, problem: &Problem) -> Result<CheckReport> {
    let records = &trajectory.records;
    if (records.len() as u64) < trajectory.summary.iterations
        || records.iter().enumerate().any(|(i, r)| r.t != i as u64 + 1)
    {
        return Err(Error::Precondition("the descent ledger needs every iteration recorded (stride 1)".into()));
    }
    let lhs: f64 = records.iter().map(|r| r.step * r.cosine * r.grad_norm).sum();
    let steps_sq: f64 = records.iter().map(|r| r.step * r.step).sum();
    let bound = problem.delta1 + problem.smoothness / 2.0 * steps_sq;
    Ok(CheckReport::new(
        "descent_ledger",
        lhs,
        bound,
        1e-8 * records.len() as f64,
        records.len() as u64,
    ))
}

/// Unbiasedness residual and `p`-th central moment of the adversarial oracle
/// on a grid of gradient norms.
///
/// `observed` is the largest of `moment/σ^p` and `residual/1e-12` over grid
/// points with `δ < 1`, so the check passes iff every moment is at most `σ^p`
/// and every residual at most `1e-12`.
pub fn check_adversarial_oracle(spec: &AdversarialSpec, grad_norms: &[f64]) -> Result<CheckReport> {
    if grad_norms.iter().any(|g| !(*g >= 0.0)) {
        return Err(invalid("gradient norms must be nonnegative"));
    }
    let sigma_p = spec.sigma.powf(spec.p);
    let mut worst: f64 = 0.0;
    let mut used = 0;
    for &g in grad_norms {
        if adversarial_delta(spec, g) >= 1.0 {
            continue;
        }
        used += 1;
        let moment = adversarial_p_moment(spec, g) / sigma_p;
        let residual = adversarial_bias(spec, g).abs() / 1e-12;
        worst = worst.max(moment).max(residual);
    }
    Ok(CheckReport::new(
        format!("adversarial_oracle(p={},rho={},sigma={})", spec.p, spec.rho, spec.sigma),
        worst,
        1.0,
        0.0,
        used,
    ))
}

/// Grid of `points` gradient norms spanning `[0, 1.2 σ/(2(1+ρ))]`, which
/// covers the whole `δ < 1` range and a little beyond.
pub fn adversarial_grid(spec: &AdversarialSpec, points: usize) -> Vec<f64> {
    let top = 1.2 * spec.sigma / (2.0 * (1.0 + spec.rho));
    (0..points).map(|i| top * i as f64 / (points.max(2) - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchDeviation {
    pub batch: u64,
    pub mean_deviation: f64,
    pub std_error: f64,
    pub bound: f64,
    pub passed: bool,
}

/// `E‖ĝ_B − ∇F(x)‖ ≤ 2σ_p / B^{(p−1)/p}` for each batch size, with `σ_p` the
/// oracle's certified bound at `p_eval`.
///
/// The overall report carries the worst ratio of observed deviation (minus
/// three standard errors) to bound.
pub fn check_minibatch_deviation(
    oracle: &AdditiveOracle,
    x: &[f64],
    p_eval: f64,
    batches: &[u64],
    mc_samples: u64,
    rng: &mut dyn RngCore,
) -> Result<(CheckReport, Vec<BatchDeviation>)> {
    if batches.is_empty() || mc_samples < 2 {
        return Err(invalid("need a nonempty batch grid and at least two samples"));
    }
    let sigma = oracle.noise.certified_sigma(p_eval, oracle.dim())?;
    let grad = oracle.problem.gradient(x);
    let mut est = vec![0.0; oracle.dim()];
    let mut scratch = vec![0.0; oracle.dim()];
    let mut details = Vec::with_capacity(batches.len());
    let mut worst: f64 = 0.0;
    for &b in batches {
        let mut m = Moments::default();
        for _ in 0..mc_samples {
            minibatch_into(oracle, x, b, rng, &mut scratch, &mut est)?;
            m.push(linalg::dist(&est, &grad));
        }
        let bound = 2.0 * sigma / (b as f64).powf((p_eval - 1.0) / p_eval);
        let se = m.std_error();
        let passed = m.mean <= bound + 3.0 * se;
        let ratio = if bound > 0.0 {
            (m.mean - 3.0 * se) / bound
        } else if m.mean == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(ratio);
        details.push(BatchDeviation {
            batch: b,
            mean_deviation: m.mean,
            std_error: se,
            bound,
            passed,
        });
    }
    let report = CheckReport::new(
        format!("minibatch_deviation(p={p_eval})"),
        worst,
        1.0,
        0.0,
        mc_samples * batches.len() as u64,
    );
    Ok((report, details))
}

/// Expected-angle bound `E cos(∇F, g) ≥ 1 − 2 E‖g − ∇F‖ / ‖∇F‖` at a fixed
/// point with minibatch estimates.
pub fn check_expected_angle(
    oracle: &dyn Oracle,
    problem: &Problem,
    x: &[f64],
    batch: u64,
    mc_samples: u64,
    rng: &mut dyn RngCore,
) -> Result<CheckReport> {
    let grad = problem.gradient(x);
    let gn = linalg::norm(&grad);
    if gn == 0.0 {
        return Err(Error::Precondition("the angle bound needs a nonzero gradient".into()));
    }
    if mc_samples < 2 {
        return Err(invalid("need at least two samples"));
    }
    let mut est = vec![0.0; problem.dim];
    let mut scratch = vec![0.0; problem.dim];
    let (mut cos, mut diff) = (Moments::default(), Moments::default());
    for _ in 0..mc_samples {
        minibatch_into(oracle, x, batch, rng, &mut scratch, &mut est)?;
        let c = linalg::cosine(&grad, &est);
        let lower = 1.0 - 2.0 * linalg::dist(&est, &grad) / gn;
        cos.push(c);
        diff.push(lower - c);
    }
    // observed: the lower bound; bound: the mean cosine.
    Ok(CheckReport::new(
        format!("expected_angle(B={batch})"),
        cos.mean + diff.mean,
        cos.mean,
        3.0 * diff.std_error(),
        mc_samples,
    ))
}

/// Named groups of checks run by `nsgd-lab verify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Cosine,
    Vbe,
    Adversarial,
    Descent,
    Minibatch,
    Angle,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 7] = ["cosine", "vbe", "adversarial", "descent", "minibatch", "angle", "all"];

    fn parts(self) -> Vec<Suite> {
        match self {
            Self::All => vec![Self::Cosine, Self::Vbe, Self::Adversarial, Self::Descent, Self::Minibatch, Self::Angle],
            s => vec![s],
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "cosine" => Self::Cosine,
            "vbe" => Self::Vbe,
            "adversarial" => Self::Adversarial,
            "descent" => Self::Descent,
            "minibatch" => Self::Minibatch,
            "angle" => Self::Angle,
            "all" => Self::All,
            _ => return Err(format!("unknown suite `{s}`, expected one of {}", Self::NAMES.join(", "))),
        })
    }
}

/// Runs a suite. Each part draws from its own stream of `seed`, so adding or
/// removing parts never changes the others. `mc_samples` sets the Monte-Carlo
/// budget of the statistical checks.
pub fn run_suite(suite: Suite, seed: u64, mc_samples: u64) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    for part in suite.parts() {
        let mut rng = crate::trial_rng(seed, part as u64);
        match part {
            Suite::Cosine => out.push(cosine_batch(100_000, &mut rng)?),
            Suite::Vbe => {
                for noise in [NoiseSpec::gaussian(1.0), NoiseSpec::symmetrized_pareto(2.5, 1.0)] {
                    for n in [1, 8, 64] {
                        for p in [1.5, 2.0] {
                            let mut r = check_von_bahr_esseen(&noise, 1, n, p, mc_samples, &mut rng)?;
                            r.name = format!("{}[{}]", r.name, noise_label(&noise));
                            out.push(r);
                        }
                    }
                }
            }
            Suite::Adversarial => {
                for p in [1.1, 1.5, 2.0] {
                    for rho in [0.0, 1.0 / 6.0] {
                        for sigma in [1.0, 4.0] {
                            let spec = AdversarialSpec::new(p, sigma, rho)?;
                            out.push(check_adversarial_oracle(&spec, &adversarial_grid(&spec, 100))?);
                        }
                    }
                }
            }
            Suite::Descent => out.push(descent_batch(50, &mut rng)?),
            Suite::Minibatch => {
                let problem = crate::problems::make_quadratic(3, vec![1.0, -0.5, 0.25])?;
                let x = [0.3, 0.1, -0.2];
                for (noise, p) in [
                    (NoiseSpec::gaussian(1.0), 2.0),
                    (NoiseSpec::symmetrized_pareto(2.5, 0.5), 1.5),
                    (NoiseSpec::symmetrized_pareto(1.5, 0.5), 1.2),
                ] {
                    let oracle = AdditiveOracle::new(problem.clone(), noise);
                    let (mut r, _) = check_minibatch_deviation(&oracle, &x, p, &[1, 4, 16, 64], mc_samples, &mut rng)?;
                    r.name = format!("{}[{}]", r.name, noise_label(&noise));
                    out.push(r);
                }
            }
            Suite::Angle => {
                let problem = crate::problems::make_quadratic(5, vec![1.0; 5])?;
                for noise in [NoiseSpec::gaussian(0.7), NoiseSpec::symmetrized_pareto(1.5, 0.3)] {
                    let oracle = AdditiveOracle::new(problem.clone(), noise);
                    for b in [1, 8] {
                        let mut r = check_expected_angle(&oracle, &problem, &[0.5; 5], b, mc_samples, &mut rng)?;
                        r.name = format!("{}[{}]", r.name, noise_label(&noise));
                        out.push(r);
                    }
                }
            }
            Suite::All => unreachable!(),
        }
    }
    Ok(out)
}

fn noise_label(noise: &NoiseSpec) -> String {
    match noise.kind {
        NoiseKind::None => "none".into(),
        NoiseKind::Gaussian => format!("gaussian({})", noise.scale),
        NoiseKind::SymmetrizedPareto => format!("pareto({},{})", noise.tail_index, noise.scale),
    }
}

/// The cosine inequality on `pairs` random pairs in dimensions 1 to 5.
/// `observed` is the largest excess of the right side over the left.
pub fn cosine_batch(pairs: u64, rng: &mut dyn RngCore) -> Result<CheckReport> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..pairs {
        let d = rng.random_range(1..6);
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        let a: Vec<f64> = (0..d).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let mut b: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        if linalg::norm(&b) == 0.0 {
            b[0] = 1.0;
        }
        let r = check_cosine_lemma(&a, &b)?;
        worst = worst.max(r.observed - r.bound - r.tolerance);
    }
    Ok(CheckReport::new(format!("cosine_lemma({pairs} pairs)"), worst, 0.0, 0.0, pairs))
}

/// One random NSGD configuration for the descent-ledger batch.
#[derive(Debug, Clone)]
pub struct RandomRun {
    pub problem: Problem,
    pub noise: NoiseSpec,
    pub spec: OptimizerSpec,
    pub horizon: u64,
}

/// Draws a random smooth problem (quadratic, Cauchy-type or the hard
/// instance), noise model, step schedule and estimator.
pub fn random_nsgd_run(rng: &mut dyn RngCore) -> Result<RandomRun> {
    let dim = rng.random_range(1..=8usize);
    let x1: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
    let problem = match rng.random_range(0..3) {
        0 => crate::problems::make_quadratic(dim, x1)?,
        1 => crate::problems::make_cauchy(dim, x1)?,
        _ => crate::problems::make_hard_deterministic(&crate::problems::HardInstanceSpec {
            eps: 0.1,
            step: rng.random_range(0.05..0.5),
            delta1: 1.0,
            smoothness: 1.0,
            horizon_cap: crate::bounds::DEFAULT_TSTAR_CAP,
        })?,
    };
    let noise = match rng.random_range(0..4) {
        0 => NoiseSpec::none(),
        1 => NoiseSpec::gaussian(rng.random_range(0.1..2.0)),
        2 => NoiseSpec::symmetrized_pareto(1.5, rng.random_range(0.1..2.0)),
        _ => NoiseSpec::symmetrized_pareto(2.5, rng.random_range(0.1..2.0)),
    };
    let eta = 10f64.powf(rng.random_range(-2.0..0.0));
    let step = match rng.random_range(0..3) {
        0 => StepSchedule::Constant { eta },
        1 => StepSchedule::IteratePower { eta, r: rng.random_range(0.0..1.0) },
        _ => StepSchedule::HorizonPower { eta, r: rng.random_range(0.0..1.0) },
    };
    let spec = OptimizerSpec::nsgd(step);
    let spec = if rng.random_bool(0.5) {
        spec.with_batch(BatchSchedule::Constant { b: rng.random_range(1..=8) as f64 })
    } else {
        spec.with_momentum(MomentumSchedule::Constant { beta: rng.random_range(0.0..0.95) })
    };
    Ok(RandomRun {
        problem,
        noise,
        spec,
        horizon: rng.random_range(20..=300),
    })
}

/// The descent ledger on `runs` random NSGD runs. `observed` is the largest
/// excess of the left side over the right side plus tolerance.
pub fn descent_batch(runs: u64, rng: &mut dyn RngCore) -> Result<CheckReport> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..runs {
        let run = random_nsgd_run(rng)?;
        let oracle = AdditiveOracle::new(run.problem.clone(), run.noise);
        let traj = run_trajectory(&run.problem, &oracle, &run.spec, run.horizon, rng, &RunOptions::default())?;
        let r = check_descent_ledger(&traj, &run.problem)?;
        worst = worst.max(r.observed - r.bound - r.tolerance);
    }
    Ok(CheckReport::new(format!("descent_ledger({runs} runs)"), worst, 0.0, 0.0, runs))
}
