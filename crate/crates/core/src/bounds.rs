//! Closed-form convergence bounds, complexity expressions and lower-bound horizons.
//!
//! Everything here is a pure function of problem constants and algorithm
//! parameters. The Monte-Carlo harnesses compare measured statistics against
//! these values.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default scan cap for [`tstar_deterministic`].
pub const DEFAULT_TSTAR_CAP: u64 = 100_000_000;

/// Complexity exponents above this are reported as infinite.
pub const EXPONENT_GUARD: f64 = 1.0e3;

/// Problem constants shared by the bound calculators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub delta1: f64,
    pub smoothness: f64,
    pub sigma: f64,
    /// Tail index of the noise moment bound, in (1, 2].
    pub p: f64,
    pub eps: f64,
    /// Failure probability for high-probability bounds.
    pub delta_fail: f64,
    pub horizon: u64,
}

impl ProblemParams {
    pub fn new(delta1: f64, smoothness: f64, sigma: f64, p: f64, horizon: u64) -> Self {
        Self {
            delta1,
            smoothness,
            sigma,
            p,
            eps: 1.0,
            delta_fail: 0.5,
            horizon,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_delta_fail(mut self, delta_fail: f64) -> Self {
        self.delta_fail = delta_fail;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta1 >= 0.0 && self.smoothness >= 0.0 && self.sigma >= 0.0) {
            return Err(invalid("delta1, smoothness and sigma must be nonnegative"));
        }
        check_tail_index(self.p)?;
        if !(self.eps > 0.0) {
            return Err(invalid("eps must be positive"));
        }
        if self.horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        Ok(())
    }

    fn t(&self) -> f64 {
        self.horizon as f64
    }

    fn sqrt_dl_over_t(&self) -> f64 {
        (self.delta1 * self.smoothness / self.t()).sqrt()
    }
}

pub(crate) fn check_tail_index(p: f64) -> Result<()> {
    if p > 1.0 && p <= 2.0 {
        Ok(())
    } else {
        Err(invalid(format!("tail index p must lie in (1, 2], got {p}")))
    }
}

fn check_delta_fail(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("failure probability must lie in (0, 1], got {delta}")))
    }
}

/// In-expectation rate of minibatch-NSGD with `η_t ≡ η T^{-r}` and
/// `B_t ≡ ⌈max{1, B T^q}⌉`.
pub fn rate_general(params: &ProblemParams, eta: f64, r: f64, batch: f64, q: f64) -> Result<f64> {
    params.validate()?;
    if !(r > 0.0 && r < 1.0) {
        return Err(invalid(format!("r must lie in (0, 1), got {r}")));
    }
    if !(q >= 0.0) || !(eta > 0.0) || !(batch > 0.0) {
        return Err(invalid("eta, batch must be positive and q nonnegative"));
    }
    let t = params.t();
    let p = params.p;
    let bt = (batch * t.powf(q)).max(1.0);
    Ok(params.delta1 / (eta * t.powf(1.0 - r))
        + eta * params.smoothness / (2.0 * t.powf(r))
        + 4.0 * params.sigma / bt.powf((p - 1.0) / p))
}

/// Tuned minibatch-NSGD: `6 √(Δ₁L/T)`.
pub fn rate_tuned(params: &ProblemParams) -> f64 {
    6.0 * params.sqrt_dl_over_t()
}

/// Tuned minibatch-NSGD with probability `1 - δ`: `(11 + 30 ln(1/δ)) √(Δ₁L/T)`.
pub fn rate_tuned_hp(params: &ProblemParams) -> Result<f64> {
    check_delta_fail(params.delta_fail)?;
    Ok((11.0 + 30.0 * (1.0 / params.delta_fail).ln()) * params.sqrt_dl_over_t())
}

/// Parameter-free minibatch-NSGD with probability `1 - δ`.
pub fn rate_param_free_hp(
    params: &ProblemParams,
    eta: f64,
    r: f64,
    batch: f64,
    q: f64,
) -> Result<f64> {
    params.validate()?;
    check_delta_fail(params.delta_fail)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(invalid(format!("r must lie in (0, 1), got {r}")));
    }
    let t = params.t();
    let p = params.p;
    let log_term = (1.0 / params.delta_fail).ln();
    let bt = (batch * t.powf(q)).max(1.0);
    Ok(2.0 * params.delta1 / (eta * t.powf(1.0 - r))
        + eta * params.smoothness / t.powf(r) * (1.0 + 12.0 * log_term)
        + 17.0 * (params.delta1 * params.smoothness).sqrt() / t * log_term
        + 8.0 * params.sigma / bt.powf((p - 1.0) / p))
}

/// Inputs of the unified high-probability bound for NSGD with an arbitrary
/// estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct HighProbInputs<'a> {
    pub delta1: f64,
    pub smoothness: f64,
    pub grad_norm_x1: f64,
    pub steps: &'a [f64],
    /// Conditional first-moment deviations `E‖g_t − ∇F(x_t)‖`.
    pub deviations: &'a [f64],
    pub delta_fail: f64,
}

/// Right-hand side of the unified high-probability bound on the
/// step-weighted average gradient norm.
pub fn rate_general_hp(inputs: &HighProbInputs<'_>) -> Result<f64> {
    let steps = inputs.steps;
    if steps.is_empty() {
        return Err(invalid("step sequence is empty"));
    }
    if steps.len() != inputs.deviations.len() {
        return Err(invalid("steps and deviations must have equal length"));
    }
    if steps.iter().any(|&s| !(s > 0.0)) {
        return Err(invalid("all steps must be positive"));
    }
    if inputs.deviations.iter().any(|s| !s.is_finite()) {
        return Err(invalid("deviations must be finite"));
    }
    check_delta_fail(inputs.delta_fail)?;

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut weighted_dev = 0.0;
    let mut c_t: f64 = 0.0;
    let mut eta_max: f64 = 0.0;
    for (&eta, &dev) in steps.iter().zip(inputs.deviations) {
        // `sum` still holds Σ_{τ<t} η_τ here.
        c_t = c_t.max(eta * sum);
        eta_max = eta_max.max(eta);
        sum += eta;
        sum_sq += eta * eta;
        weighted_dev += eta * dev;
    }
    let log_term = (1.0 / inputs.delta_fail).ln();
    Ok((2.0 * inputs.delta1
        + inputs.smoothness * sum_sq
        + 4.0 * weighted_dev
        + 12.0 * (eta_max * inputs.grad_norm_x1 + c_t * inputs.smoothness) * log_term)
        / sum)
}

/// Deviation bound `E‖g_t − ∇F(x_t)‖` of the momentum estimator at
/// iteration `t = betas.len()`.
///
/// `steps` holds `η_1, …, η_{t-1}` (extra entries are ignored) and `betas`
/// holds `β_1, …, β_t` with `β_1 = 0`.
pub fn momentum_deviation_rhs(
    smoothness: f64,
    steps: &[f64],
    betas: &[f64],
    sigma: f64,
    p: f64,
) -> Result<f64> {
    let t = betas.len();
    if t == 0 {
        return Err(invalid("betas must contain at least beta_1"));
    }
    if steps.len() + 1 < t {
        return Err(invalid(format!(
            "need {} steps for t = {t}, got {}",
            t - 1,
            steps.len()
        )));
    }
    if betas.iter().any(|b| !(0.0..1.0).contains(b)) {
        return Err(invalid("betas must lie in [0, 1)"));
    }
    if !(1.0..=2.0).contains(&p) {
        return Err(invalid(format!("p must lie in [1, 2], got {p}")));
    }

    // suffix[i] = Π_{κ=i..t} β_κ (1-based), suffix[t+1] = 1.
    let mut suffix = vec![1.0; t + 2];
    for i in (1..=t).rev() {
        suffix[i] = suffix[i + 1] * betas[i - 1];
    }
    let drift: f64 = (2..=t).map(|tau| steps[tau - 2] * suffix[tau]).sum();
    let noise: f64 = (1..=t)
        .map(|tau| (suffix[tau + 1] * (1.0 - betas[tau - 1])).powf(p))
        .sum();
    Ok(smoothness * drift + 2.0 * sigma * noise.powf(1.0 / p))
}

/// Step sequences accepted by [`tstar_deterministic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum StepSequence {
    /// An explicit finite sequence; the scan stops when it runs out.
    Explicit { steps: Vec<f64> },
    Constant { eta: f64 },
    /// `η_t = η t^{-r}`.
    Decaying { eta: f64, r: f64 },
    /// `η_t ≡ η T^{-r}` for a run with horizon `T`.
    HorizonPower { eta: f64, r: f64 },
}

/// Smallest horizon `T` with `ε > (Δ₁ − ε/L) / (2 Σ η_t) + L Σ η_t² / (8 Σ η_t)`.
///
/// Below this horizon normalized gradient descent with the given steps keeps
/// `|F'(x_t)| > ε` on the hard one-dimensional instance.
pub fn tstar_deterministic(
    eps: f64,
    delta1: f64,
    smoothness: f64,
    steps: &StepSequence,
    cap: u64,
) -> Result<u64> {
    if !(eps > 0.0) || !(smoothness > 0.0) || !(delta1 >= 0.0) {
        return Err(invalid("need eps > 0, L > 0 and delta1 >= 0"));
    }
    if eps > delta1 * smoothness / 2.0 {
        return Err(Error::Precondition(format!(
            "eps = {eps} exceeds delta1 * L / 2 = {}",
            delta1 * smoothness / 2.0
        )));
    }
    let gap = delta1 - eps / smoothness;
    let holds = |s1: f64, s2: f64| s1 > 0.0 && eps > gap / (2.0 * s1) + smoothness * s2 / (8.0 * s1);

    match steps {
        StepSequence::HorizonPower { eta, r } => {
            check_positive_step(*eta)?;
            for t in 1..=cap {
                let tf = t as f64;
                let step = eta * tf.powf(-r);
                if holds(tf * step, tf * step * step) {
                    return Ok(t);
                }
            }
            Err(Error::HorizonTooLarge { cap })
        }
        _ => {
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for t in 1..=cap {
                let step = match steps {
                    StepSequence::Explicit { steps } => match steps.get(t as usize - 1) {
                        Some(&s) => s,
                        None => return Err(Error::HorizonTooLarge { cap: steps.len() as u64 }),
                    },
                    StepSequence::Constant { eta } => *eta,
                    StepSequence::Decaying { eta, r } => eta * (t as f64).powf(-r),
                    StepSequence::HorizonPower { .. } => unreachable!(),
                };
                if !(step >= 0.0) {
                    return Err(invalid("steps must be nonnegative"));
                }
                s1 += step;
                s2 += step * step;
                if holds(s1, s2) {
                    return Ok(t);
                }
            }
            Err(Error::HorizonTooLarge { cap })
        }
    }
}

fn check_positive_step(eta: f64) -> Result<()> {
    if eta > 0.0 {
        Ok(())
    } else {
        Err(invalid("eta must be positive"))
    }
}

/// Lower bound on the iteration complexity of normalized gradient descent with
/// polynomial steps, `(ηL/(4ε))^{1/r} + ((1−r)Δ₁/(8ηε))^{1/(1−r)}` for `r ∈ (0, 1)`.
pub fn deterministic_iteration_lb(eps: f64, delta1: f64, smoothness: f64, eta: f64, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(invalid(format!("r must lie in (0, 1), got {r}")));
    }
    if !(eps > 0.0 && eta > 0.0) {
        return Err(invalid("eps and eta must be positive"));
    }
    Ok((eta * smoothness / (4.0 * eps)).powf(1.0 / r)
        + ((1.0 - r) * delta1 / (8.0 * eta * eps)).powf(1.0 / (1.0 - r)))
}

/// `(2/3) √(Δ₁L/T) T^{1/4}`: lower bound on the root-mean-square gradient norm
/// of tuned NSGD on `½x²`.
pub fn measure_gap_lb(delta1: f64, smoothness: f64, horizon: u64) -> Result<f64> {
    if horizon < 18 {
        return Err(Error::Precondition(format!(
            "measure-gap bound needs T >= 18, got {horizon}"
        )));
    }
    let t = horizon as f64;
    Ok(2.0 / 3.0 * (delta1 * smoothness / t).sqrt() * t.powf(0.25))
}

/// NSGD with momentum, `β_t = 1 − t^{-1/2}`, `η_t = η t^{-3/4}`, in expectation.
pub fn rate_nsgdm_param_free(params: &ProblemParams, eta: f64) -> Result<f64> {
    params.validate()?;
    if params.horizon < 3 {
        return Err(Error::Precondition("needs T >= 3".into()));
    }
    let t = params.t();
    let p = params.p;
    let noise_growth = if (2.0 - p).abs() < 1e-12 {
        t.ln()
    } else {
        let e = (2.0 - p) / (4.0 * p);
        (t.powf(e) - 1.0) / e
    };
    Ok((params.delta1 / eta
        + 120.0 * eta * params.smoothness * t.ln()
        + 120.0 * params.sigma * noise_growth)
        / t.powf(0.25))
}

/// Tuned NSGD with momentum in expectation.
pub fn rate_nsgdm_tuned(params: &ProblemParams) -> Result<f64> {
    params.validate()?;
    let p = params.p;
    let t = params.t();
    let dl = params.delta1 * params.smoothness;
    Ok(6.0 * (dl / t).sqrt()
        + 6.0 * (dl * params.sigma.powf(p / (p - 1.0)) / t).powf((p - 1.0) / (3.0 * p - 2.0)))
}

/// Named complexity expressions for [`sample_complexity_table`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComplexityPreset {
    /// Upper bound for the parameter-free choice `r = 1/2`, `q = 1`.
    ParamFree,
    /// Upper bound for tuned minibatch-NSGD (also tuned NSGD-M).
    Tuned,
    /// Upper bound for general `(r, q)`.
    General { r: f64, q: f64 },
    /// Lower bound for any first-order method under bounded p-th moments.
    FirstOrderLowerBound,
    /// Algorithm-specific lower bound, constants dropped (exponents only).
    NsgdLowerBoundSimplified { r: f64, q: f64 },
    /// Algorithm-specific lower bound with explicit constants 6/12/28.
    NsgdLowerBoundExtended { eta: f64, batch: f64, r: f64, q: f64 },
    /// Clip-SGD in expectation (prior work comparator).
    ClipSgdExpectation,
    /// Clip-SGD with high probability (prior work comparator).
    ClipSgdHighProb,
}

impl ComplexityPreset {
    pub fn label(&self) -> String {
        match self {
            Self::ParamFree => "param_free".into(),
            Self::Tuned => "tuned".into(),
            Self::General { r, q } => format!("general(r={r},q={q})"),
            Self::FirstOrderLowerBound => "first_order_lower_bound".into(),
            Self::NsgdLowerBoundSimplified { r, q } => format!("nsgd_lower_bound(r={r},q={q})"),
            Self::NsgdLowerBoundExtended { eta, batch, r, q } => {
                format!("nsgd_lower_bound_extended(eta={eta},B={batch},r={r},q={q})")
            }
            Self::ClipSgdExpectation => "clip_sgd_expectation".into(),
            Self::ClipSgdHighProb => "clip_sgd_high_prob".into(),
        }
    }
}

/// One evaluated complexity expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub label: String,
    pub value: f64,
    /// Exponent of `1/ε` of each additive (or max-ed) term, in order.
    pub eps_exponents: Vec<f64>,
    /// Whether terms combine by sum (`false`) or max (`true`).
    pub is_max: bool,
}

struct Term {
    coeff: f64,
    base: f64,
    exponent: f64,
}

impl Term {
    fn new(coeff: f64, base: f64, exponent: f64) -> Self {
        Self { coeff, base, exponent }
    }

    fn value(&self) -> f64 {
        if !self.exponent.is_finite() || self.exponent > EXPONENT_GUARD {
            return f64::INFINITY;
        }
        self.coeff * self.base.powf(self.exponent)
    }
}

fn row(label: String, terms: Vec<Term>, eps_exponents: Vec<f64>, is_max: bool) -> ComplexityRow {
    let values = terms.iter().map(Term::value);
    let value = if is_max {
        values.fold(0.0, f64::max)
    } else {
        values.sum()
    };
    ComplexityRow {
        label,
        value,
        eps_exponents,
        is_max,
    }
}

/// Evaluates each requested complexity expression with O(·) constants dropped
/// and exponents kept exact.
pub fn sample_complexity_table(
    params: &ProblemParams,
    presets: &[ComplexityPreset],
) -> Result<Vec<ComplexityRow>> {
    params.validate()?;
    let ProblemParams {
        delta1: d,
        smoothness: l,
        sigma: s,
        p,
        eps: e,
        ..
    } = *params;
    let dl = d * l;
    let noise_exp = p / (p - 1.0);

    presets
        .iter()
        .map(|preset| {
            let label = preset.label();
            let out = match preset {
                ComplexityPreset::ParamFree => {
                    let ne = 2.0 * p / (p - 1.0);
                    row(
                        label,
                        vec![
                            Term::new(d.powi(4) + l.powi(4), 1.0 / e, 4.0),
                            Term::new(1.0, s / e, ne),
                        ],
                        vec![4.0, ne],
                        false,
                    )
                }
                ComplexityPreset::Tuned | ComplexityPreset::FirstOrderLowerBound => row(
                    label,
                    vec![
                        Term::new(dl, 1.0 / e, 2.0),
                        Term::new(dl / (e * e), s / e, noise_exp),
                    ],
                    vec![2.0, 2.0 + noise_exp],
                    false,
                ),
                ComplexityPreset::General { r, q } | ComplexityPreset::NsgdLowerBoundSimplified { r, q } => {
                    check_rq(*r, *q)?;
                    let (a, b, c) = ((1.0 + q) / (1.0 - r), (1.0 + q) / r, p * (1.0 + q) / (q * (p - 1.0)));
                    row(
                        label,
                        vec![Term::new(1.0, d / e, a), Term::new(1.0, l / e, b), Term::new(1.0, s / e, c)],
                        vec![a, b, c],
                        false,
                    )
                }
                ComplexityPreset::NsgdLowerBoundExtended { eta, batch, r, q } => {
                    check_rq(*r, *q)?;
                    let (eta, batch) = (*eta, *batch);
                    let a = 1.0 / (1.0 - r);
                    let b = 1.0 / r;
                    let c = p * (q + 1.0) / (q * (p - 1.0));
                    row(
                        label,
                        vec![
                            Term::new(1.0, d / (6.0 * eta * e), a),
                            Term::new(1.0, eta * l / (12.0 * e), b),
                            Term::new(batch, d / (6.0 * eta * e), (1.0 + q) * a),
                            Term::new(batch, eta * l / (12.0 * e), (1.0 + q) * b),
                            Term::new(batch.powf(-1.0 / q), s / (28.0 * e), c),
                        ],
                        vec![a, b, (1.0 + q) * a, (1.0 + q) * b, c],
                        true,
                    )
                }
                ComplexityPreset::ClipSgdExpectation => {
                    let k = (3.0 * p - 2.0) / (p - 1.0);
                    row(
                        label,
                        vec![
                            Term::new(dl, s, p * p / (p - 1.0)).scaled(e.powf(-2.0)),
                            Term::new(1.0, dl * s.powf(p), (3.0 * p - 2.0) / (2.0 * p - 2.0)).scaled(e.powf(-k)),
                            Term::new(1.0, s, k).scaled(e.powf(-k)),
                        ],
                        vec![2.0, k, k],
                        false,
                    )
                }
                ComplexityPreset::ClipSgdHighProb => {
                    let k = (3.0 * p - 2.0) / (p - 1.0);
                    let lead = (6.0 * p - 4.0) / (2.0 * p - 1.0);
                    let w = (3.0 * p - 2.0) / (4.0 * p - 4.0);
                    row(
                        label,
                        vec![
                            Term::new(1.0, dl, w).scaled(e.powf(-lead)),
                            Term::new(1.0, s.powf(2.0 * p) / dl.powf(2.0 - p), k).scaled(e.powf(-k)),
                            Term::new(1.0, dl * s * s, w).scaled(e.powf(-k)),
                        ],
                        vec![lead, k, k],
                        false,
                    )
                }
            };
            Ok(out)
        })
        .collect()
}

impl Term {
    fn scaled(mut self, factor: f64) -> Self {
        self.coeff *= factor;
        self
    }
}

fn check_rq(r: f64, q: f64) -> Result<()> {
    if !(r > 0.0 && r < 1.0) || !(q > 0.0) {
        return Err(invalid(format!("need r in (0, 1) and q > 0, got r={r}, q={q}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit(t: u64) -> ProblemParams {
        ProblemParams::new(1.0, 1.0, 0.0, 2.0, t)
    }

    #[test]
    fn general_rate_examples() {
        // η = √(Δ₁/L) with σ = 0: √(Δ₁L/T) + ½√(Δ₁L/T).
        let params = ProblemParams::new(2.0, 3.0, 0.0, 2.0, 50);
        let eta = (2.0f64 / 3.0).sqrt();
        let v = rate_general(&params, eta, 0.5, 1.0, 1.0).unwrap();
        assert_relative_eq!(v, 1.5 * (6.0f64 / 50.0).sqrt(), max_relative = 1e-12);

        let v = rate_general(&unit(100), 1.0, 0.5, 1.0, 0.0).unwrap();
        assert_relative_eq!(v, 0.15, max_relative = 1e-12);

        let mut prev = f64::INFINITY;
        for t in [1, 2, 5, 10, 100, 1000, 10_000] {
            let params = ProblemParams::new(1.0, 1.0, 1.0, 1.5, t);
            let v = rate_general(&params, 0.7, 0.5, 2.0, 1.0).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(rate_general(&unit(10), 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(rate_general(&unit(10), 1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn tuned_rate_examples() {
        assert_relative_eq!(rate_tuned(&unit(100)), 0.6, max_relative = 1e-12);
        assert_eq!(rate_tuned(&ProblemParams::new(0.0, 1.0, 1.0, 2.0, 10)), 0.0);
        assert_relative_eq!(rate_tuned(&unit(36)), 1.0, max_relative = 1e-12);
        let mut prev = f64::INFINITY;
        for t in 1..200 {
            let v = rate_tuned(&unit(t));
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn tuned_hp_rate_examples() {
        let p = unit(100).with_delta_fail((-1.0f64).exp());
        assert_relative_eq!(rate_tuned_hp(&p).unwrap(), 41.0 * 0.1, max_relative = 1e-12);
        let p = unit(100).with_delta_fail(1.0);
        assert_relative_eq!(rate_tuned_hp(&p).unwrap(), 1.1, max_relative = 1e-12);
        let p = unit(100).with_delta_fail(0.01);
        let expected = (11.0 + 30.0 * 100f64.ln()) / 10.0;
        assert_relative_eq!(rate_tuned_hp(&p).unwrap(), expected, max_relative = 1e-12);
        assert_relative_eq!(expected, 14.915, epsilon = 1e-3);
        assert!(rate_tuned_hp(&unit(100).with_delta_fail(0.0)).is_err());
    }

    #[test]
    fn general_hp_constant_parameters() {
        let t = 40;
        let eta = 0.05;
        let sigma_bar = 0.3;
        let steps = vec![eta; t];
        let devs = vec![sigma_bar; t];
        let inputs = HighProbInputs {
            delta1: 2.0,
            smoothness: 1.5,
            grad_norm_x1: 0.8,
            steps: &steps,
            deviations: &devs,
            delta_fail: 0.05,
        };
        let v = rate_general_hp(&inputs).unwrap();
        let tf = t as f64;
        let log = (1.0f64 / 0.05).ln();
        // C_T = η²(T − 1) exactly; the simplified display bounds (T − 1)/T by 1.
        let exact = 2.0 * 2.0 / (eta * tf)
            + eta * 1.5
            + 4.0 * sigma_bar
            + 12.0 * (0.8 / tf + eta * 1.5 * (tf - 1.0) / tf) * log;
        assert_relative_eq!(v, exact, max_relative = 1e-12);
        let simplified = 2.0 * 2.0 / (eta * tf) + eta * 1.5 + 4.0 * sigma_bar + 12.0 * (0.8 / tf + eta * 1.5) * log;
        assert!(v <= simplified);

        let one = HighProbInputs {
            steps: &steps[..1],
            deviations: &devs[..1],
            delta_fail: 1.0,
            ..inputs.clone()
        };
        // T = 1: C_T = 0, and δ = 1 kills the log term.
        let v1 = rate_general_hp(&one).unwrap();
        assert_relative_eq!(v1, (4.0 + 1.5 * eta * eta + 4.0 * eta * sigma_bar) / eta, max_relative = 1e-12);

        let empty = HighProbInputs {
            steps: &[],
            deviations: &[],
            ..inputs
        };
        assert!(rate_general_hp(&empty).is_err());
    }

    #[test]
    fn momentum_rhs_examples() {
        // β ≡ 0: only τ = t survives in the noise sum.
        let v = momentum_deviation_rhs(1.0, &[0.1; 9], &[0.0; 10], 1.5, 1.5).unwrap();
        assert_relative_eq!(v, 3.0, max_relative = 1e-12);
        let v = momentum_deviation_rhs(7.0, &[], &[0.0], 0.5, 2.0).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-12);

        // σ = 0, constant β and η: geometric drift sum.
        let (beta, eta, l, t) = (0.6, 0.2, 3.0, 12usize);
        let mut betas = vec![beta; t];
        betas[0] = 0.0;
        let v = momentum_deviation_rhs(l, &vec![eta; t - 1], &betas, 0.0, 2.0).unwrap();
        let expected = l * eta * beta * (1.0 - beta.powi(t as i32 - 1)) / (1.0 - beta);
        assert_relative_eq!(v, expected, max_relative = 1e-12);

        assert!(momentum_deviation_rhs(1.0, &[], &[], 1.0, 2.0).is_err());
        assert!(momentum_deviation_rhs(1.0, &[0.1], &[0.0, 1.0], 1.0, 2.0).is_err());
    }

    #[test]
    fn momentum_rhs_matches_brute_force_products() {
        let betas = [0.0, 0.3, 0.7, 0.5, 0.9];
        let steps = [0.1, 0.2, 0.05, 0.4];
        let (l, sigma, p) = (2.0, 0.7, 1.3);
        let t = betas.len();
        let prod = |a: usize, b: usize| (a..=b).map(|k| betas[k - 1]).product::<f64>();
        let drift: f64 = (2..=t).map(|tau| steps[tau - 2] * prod(tau, t)).sum();
        let noise: f64 = (1..=t)
            .map(|tau| (prod(tau + 1, t) * (1.0 - betas[tau - 1])).powf(p))
            .sum();
        let expected = l * drift + 2.0 * sigma * noise.powf(1.0 / p);
        let v = momentum_deviation_rhs(l, &steps, &betas, sigma, p).unwrap();
        assert_relative_eq!(v, expected, max_relative = 1e-12);
    }

    #[test]
    fn tstar_examples() {
        let t = tstar_deterministic(0.1, 1.0, 1.0, &StepSequence::Constant { eta: 0.1 }, DEFAULT_TSTAR_CAP).unwrap();
        assert_eq!(t, 52);
        // Brute-force scan of 4.5/T + 0.0125 < 0.1.
        let brute = (1..).find(|&t| 0.1 > 4.5 / t as f64 + 0.0125).unwrap();
        assert_eq!(brute, 52);

        let t = tstar_deterministic(0.5, 1.0, 1.0, &StepSequence::Constant { eta: 1.0 }, 10).unwrap();
        assert_eq!(t, 1);

        let err = tstar_deterministic(0.1, 1.0, 1.0, &StepSequence::Constant { eta: 0.8 }, 1000).unwrap_err();
        assert_eq!(err, Error::HorizonTooLarge { cap: 1000 });

        // Explicit sequence reproduces the constant case.
        let explicit = StepSequence::Explicit { steps: vec![0.1; 60] };
        assert_eq!(tstar_deterministic(0.1, 1.0, 1.0, &explicit, DEFAULT_TSTAR_CAP).unwrap(), 52);
        let short = StepSequence::Explicit { steps: vec![0.1; 20] };
        assert!(matches!(
            tstar_deterministic(0.1, 1.0, 1.0, &short, DEFAULT_TSTAR_CAP),
            Err(Error::HorizonTooLarge { .. })
        ));

        assert!(matches!(
            tstar_deterministic(0.6, 1.0, 1.0, &StepSequence::Constant { eta: 0.1 }, 10),
            Err(Error::Precondition(_))
        ));

        // r = 1 decaying steps blow up exponentially; the cap trips.
        assert!(matches!(
            tstar_deterministic(0.01, 1.0, 1.0, &StepSequence::Decaying { eta: 0.01, r: 1.0 }, 100_000),
            Err(Error::HorizonTooLarge { .. })
        ));
    }

    #[test]
    fn tstar_nondecreasing_in_delta1() {
        let mut prev = 0;
        for d in [0.3, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let t = tstar_deterministic(0.1, d, 1.0, &StepSequence::Decaying { eta: 0.2, r: 0.5 }, DEFAULT_TSTAR_CAP).unwrap();
            assert!(t >= prev);
            prev = t;
        }
    }

    #[test]
    fn tstar_horizon_power_dominates_polynomial_lb() {
        let (eps, d, l, eta, r) = (0.05, 1.0, 1.0, 1.0, 0.5);
        let t = tstar_deterministic(eps, d, l, &StepSequence::HorizonPower { eta, r }, DEFAULT_TSTAR_CAP).unwrap();
        let max_term = ((d / (4.0 * eta * eps)).powf(1.0 / (1.0 - r))).max((eta * l / (8.0 * eps)).powf(1.0 / r));
        assert!(t as f64 >= max_term);
        assert!(deterministic_iteration_lb(eps, d, l, eta, r).unwrap() > 0.0);
    }

    #[test]
    fn measure_gap_examples() {
        let v = measure_gap_lb(1.0, 1.0, 100).unwrap();
        assert_relative_eq!(v, 2.0 / 3.0 * 0.1 * 100f64.powf(0.25), max_relative = 1e-12);
        assert_relative_eq!(v, 0.2108, epsilon = 1e-4);
        assert!(measure_gap_lb(1.0, 1.0, 18).is_ok());
        assert!(matches!(measure_gap_lb(1.0, 1.0, 17), Err(Error::Precondition(_))));
        let ratio = measure_gap_lb(1.0, 1.0, 400).unwrap() / measure_gap_lb(1.0, 1.0, 100).unwrap();
        assert_relative_eq!(ratio, 4f64.powf(-0.25), max_relative = 1e-12);
    }

    #[test]
    fn complexity_table_examples() {
        let params = ProblemParams::new(1.5, 2.0, 0.1, 2.0, 10).with_eps(0.1);
        let rows = sample_complexity_table(&params, &[ComplexityPreset::ParamFree, ComplexityPreset::Tuned]).unwrap();
        assert_eq!(rows[0].eps_exponents, vec![4.0, 4.0]);
        // σ = ε at p = 2.
        let e: f64 = 0.1;
        assert_relative_eq!(rows[0].value, (1.5f64.powi(4) + 16.0) / e.powi(4) + 1.0, max_relative = 1e-12);
        assert_relative_eq!(rows[1].value, 2.0 * 3.0 / (e * e), max_relative = 1e-12);

        let heavy = ProblemParams::new(1.0, 1.0, 1.0, 1.0005, 10).with_eps(0.5);
        let rows = sample_complexity_table(&heavy, &[ComplexityPreset::ParamFree]).unwrap();
        assert!(rows[0].eps_exponents[1] > EXPONENT_GUARD);
        assert!(rows[0].value.is_infinite());
    }

    #[test]
    fn complexity_lower_bounds_below_upper_bounds_in_exponent() {
        let params = ProblemParams::new(1.0, 1.0, 1.0, 1.5, 10).with_eps(0.01);
        let rows = sample_complexity_table(
            &params,
            &[
                ComplexityPreset::General { r: 0.5, q: 1.0 },
                ComplexityPreset::NsgdLowerBoundSimplified { r: 0.5, q: 1.0 },
                ComplexityPreset::ParamFree,
                ComplexityPreset::NsgdLowerBoundExtended { eta: 1.0, batch: 1.0, r: 0.5, q: 1.0 },
                ComplexityPreset::ClipSgdExpectation,
                ComplexityPreset::ClipSgdHighProb,
                ComplexityPreset::FirstOrderLowerBound,
            ],
        )
        .unwrap();
        // r = 1/2, q = 1 reproduces the parameter-free exponents.
        assert_eq!(rows[0].eps_exponents, vec![4.0, 4.0, 6.0]);
        assert_eq!(rows[2].eps_exponents, vec![4.0, 6.0]);
        assert!(rows[3].is_max);
        assert!(rows.iter().all(|r| r.value > 0.0));
        // Tuned exponent (3p−2)/(p−1) = 5 at p = 1.5.
        assert_relative_eq!(rows[6].eps_exponents[1], 5.0, max_relative = 1e-12);
    }

    #[test]
    fn nsgdm_rates() {
        let params = ProblemParams::new(1.0, 1.0, 0.0, 2.0, 100);
        assert_relative_eq!(rate_nsgdm_tuned(&params).unwrap(), 0.6, max_relative = 1e-12);
        let p2 = rate_nsgdm_param_free(&ProblemParams::new(1.0, 1.0, 1.0, 2.0, 100), 1.0).unwrap();
        let near = rate_nsgdm_param_free(&ProblemParams::new(1.0, 1.0, 1.0, 2.0 - 1e-9, 100), 1.0).unwrap();
        assert_relative_eq!(p2, near, max_relative = 1e-6);
        assert!(rate_nsgdm_param_free(&ProblemParams::new(1.0, 1.0, 1.0, 2.0, 2), 1.0).is_err());
    }

    #[test]
    fn param_free_hp_dominates_expectation_terms() {
        let params = ProblemParams::new(1.0, 1.0, 1.0, 1.5, 100).with_delta_fail(0.1);
        let hp = rate_param_free_hp(&params, 1.0, 0.5, 1.0, 1.0).unwrap();
        let ex = rate_general(&params, 1.0, 0.5, 1.0, 1.0).unwrap();
        assert!(hp > ex);
    }
}
