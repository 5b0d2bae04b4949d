//! Stochastic gradient oracles.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::problems::Problem;

/// A stochastic first-order oracle. Each call consumes one raw sample.
pub trait Oracle: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes one stochastic gradient at `x` into `out`.
    fn sample_into(&self, x: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()>;

    fn sample(&self, x: &[f64], rng: &mut dyn RngCore) -> Result<OracleSample> {
        let mut grad = vec![0.0; self.dim()];
        self.sample_into(x, rng, &mut grad)?;
        Ok(OracleSample { grad, cost: 1 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSample {
    pub grad: Vec<f64>,
    /// Raw oracle calls consumed.
    pub cost: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    Gaussian,
    SymmetrizedPareto,
}

/// Additive noise with i.i.d. components.
///
/// Symmetrized Pareto components are `±scale · U^{-1/a}` with `U` uniform
/// on `(0, 1]` and an independent fair sign, so `|ξ_i| ≥ scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub scale: f64,
    /// Tail index `a > 1`; only read for symmetrized Pareto noise.
    pub tail_index: f64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            scale: 0.0,
            tail_index: f64::INFINITY,
        }
    }

    pub fn gaussian(scale: f64) -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            scale,
            tail_index: f64::INFINITY,
        }
    }

    pub fn symmetrized_pareto(tail_index: f64, scale: f64) -> Self {
        Self {
            kind: NoiseKind::SymmetrizedPareto,
            scale,
            tail_index,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale >= 0.0) || !self.scale.is_finite() {
            return Err(invalid(format!("noise scale must be finite and >= 0, got {}", self.scale)));
        }
        if self.kind == NoiseKind::SymmetrizedPareto && !(self.tail_index > 1.0) {
            return Err(invalid(format!("Pareto tail index must exceed 1, got {}", self.tail_index)));
        }
        Ok(())
    }

    /// Adds one noise draw to every entry of `out`.
    pub fn add_noise(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        match self.kind {
            NoiseKind::None => {}
            NoiseKind::Gaussian => {
                if self.scale > 0.0 {
                    for o in out.iter_mut() {
                        let z: f64 = StandardNormal.sample(rng);
                        *o += self.scale * z;
                    }
                }
            }
            NoiseKind::SymmetrizedPareto => {
                let exponent = -1.0 / self.tail_index;
                for o in out.iter_mut() {
                    let u = 1.0 - rng.random::<f64>();
                    let magnitude = self.scale * u.powf(exponent);
                    *o += if rng.random::<bool>() { magnitude } else { -magnitude };
                }
            }
        }
    }

    /// Certified bound `σ_p` with `E‖ξ‖^p ≤ σ_p^p` for a `dim`-dimensional
    /// noise vector.
    ///
    /// Gaussian: `(E‖ξ‖²)^{1/2} = √d · scale`. Pareto: `‖ξ‖^p ≤ Σ|ξ_i|^p`
    /// for `p ≤ 2`, giving `scale · (d a / (a − p))^{1/p}`.
    pub fn certified_sigma(&self, p: f64, dim: usize) -> Result<f64> {
        if !(1.0..=2.0).contains(&p) {
            return Err(invalid(format!("p must lie in [1, 2], got {p}")));
        }
        let d = dim as f64;
        match self.kind {
            NoiseKind::None => Ok(0.0),
            NoiseKind::Gaussian => Ok(d.sqrt() * self.scale),
            NoiseKind::SymmetrizedPareto => {
                let m = pareto_abs_moment(self.tail_index, 1.0, p);
                if m.is_infinite() {
                    return Err(Error::Precondition(format!(
                        "p = {p} is not below the tail index {}; the p-th moment is infinite",
                        self.tail_index
                    )));
                }
                Ok(self.scale * (d * m).powf(1.0 / p))
            }
        }
    }

    /// `E|ξ_i|^q` of one noise component, infinite when it diverges.
    pub fn component_abs_moment(&self, q: f64) -> f64 {
        match self.kind {
            NoiseKind::None => {
                if q == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            NoiseKind::Gaussian => {
                // E|Z|^q = 2^{q/2} Γ((q+1)/2) / √π; only q ∈ {0, 1, 2} are needed here.
                let base = if q == 0.0 {
                    1.0
                } else if q == 1.0 {
                    (2.0 / std::f64::consts::PI).sqrt()
                } else if q == 2.0 {
                    1.0
                } else {
                    return f64::NAN;
                };
                base * self.scale.powf(q)
            }
            NoiseKind::SymmetrizedPareto => pareto_abs_moment(self.tail_index, self.scale, q),
        }
    }
}

/// `E|ξ|^q` for `|ξ| = scale · U^{-1/a}`: `scale^q · a / (a − q)` when
/// `q < a`, infinite otherwise.
pub fn pareto_abs_moment(tail_index: f64, scale: f64, q: f64) -> f64 {
    if q < tail_index {
        scale.powf(q) * tail_index / (tail_index - q)
    } else {
        f64::INFINITY
    }
}

/// `∇F(x) + ξ` with `ξ` drawn from `spec`.
pub fn sample_additive(problem: &Problem, spec: &NoiseSpec, x: &[f64], rng: &mut dyn RngCore) -> Result<OracleSample> {
    AdditiveOracle::new(problem.clone(), *spec).sample(x, rng)
}

/// Exact gradient plus additive noise.
#[derive(Debug, Clone)]
pub struct AdditiveOracle {
    pub problem: Problem,
    pub noise: NoiseSpec,
}

impl AdditiveOracle {
    pub fn new(problem: Problem, noise: NoiseSpec) -> Self {
        Self { problem, noise }
    }
}

impl Oracle for AdditiveOracle {
    fn dim(&self) -> usize {
        self.problem.dim
    }

    fn sample_into(&self, x: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        ensure_finite("x", x)?;
        self.problem.gradient_into(x, out);
        self.noise.add_noise(rng, out);
        Ok(())
    }
}

/// Parameters of the two-point adversarial oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdversarialSpec {
    pub p: f64,
    pub sigma: f64,
    pub rho: f64,
    /// `p / (p − 1)`.
    pub alpha: f64,
}

impl AdversarialSpec {
    pub fn new(p: f64, sigma: f64, rho: f64) -> Result<Self> {
        crate::bounds::check_tail_index(p)?;
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(invalid(format!("sigma must be positive, got {sigma}")));
        }
        if !(0.0..=1.0 / 6.0).contains(&rho) {
            return Err(invalid(format!("rho must lie in [0, 1/6], got {rho}")));
        }
        Ok(Self {
            p,
            sigma,
            rho,
            alpha: p / (p - 1.0),
        })
    }

    /// The lower-bound argument also needs `ρ ≤ 1 / B̄` for batch size `B̄`.
    pub fn check_batch(&self, batch: u64) -> Result<()> {
        if self.rho * batch as f64 > 1.0 {
            return Err(invalid(format!("rho = {} exceeds 1 / B = {}", self.rho, 1.0 / batch as f64)));
        }
        Ok(())
    }
}

/// `δ = min{1, (2(1+ρ)‖∇F‖/σ)^α}`.
pub fn adversarial_delta(spec: &AdversarialSpec, grad_norm: f64) -> f64 {
    if grad_norm <= 0.0 {
        return 0.0;
    }
    (2.0 * (1.0 + spec.rho) * grad_norm / spec.sigma).powf(spec.alpha).min(1.0)
}

/// Coefficient of `∇F` in the rare branch, `1 + (1−δ)(1+ρ)/δ`.
fn rare_coefficient(spec: &AdversarialSpec, delta: f64) -> f64 {
    1.0 + (1.0 - delta) * (1.0 + spec.rho) / delta
}

/// One adversarial sample: `−ρ∇F` with probability `1 − δ`, otherwise
/// `(1 + (1−δ)(1+ρ)/δ) ∇F`. Draws nothing when `δ = 0`.
pub fn sample_adversarial(spec: &AdversarialSpec, true_grad: &[f64], rng: &mut dyn RngCore) -> OracleSample {
    let mut grad = true_grad.to_vec();
    adversarial_into(spec, rng, &mut grad);
    OracleSample { grad, cost: 1 }
}

fn adversarial_into(spec: &AdversarialSpec, rng: &mut dyn RngCore, grad: &mut [f64]) {
    let delta = adversarial_delta(spec, crate::linalg::norm(grad));
    let coeff = if delta == 0.0 {
        -spec.rho
    } else if rng.random::<f64>() < delta {
        rare_coefficient(spec, delta)
    } else {
        -spec.rho
    };
    crate::linalg::scale(coeff, grad);
}

/// `E‖g − ∇F‖^p` of the adversarial oracle, in closed form.
pub fn adversarial_p_moment(spec: &AdversarialSpec, grad_norm: f64) -> f64 {
    let delta = adversarial_delta(spec, grad_norm);
    if delta == 0.0 || delta == 1.0 {
        return 0.0;
    }
    let p = spec.p;
    let g = grad_norm.powf(p);
    (1.0 - delta) * (1.0 + spec.rho).powf(p) * g + delta * ((1.0 - delta) * (1.0 + spec.rho) / delta).powf(p) * g
}

/// Exact mean of the two outcomes along a unit direction, minus `‖∇F‖`.
pub fn adversarial_bias(spec: &AdversarialSpec, grad_norm: f64) -> f64 {
    let delta = adversarial_delta(spec, grad_norm);
    if delta == 0.0 {
        return -(1.0 + spec.rho) * grad_norm;
    }
    let mean = (1.0 - delta) * (-spec.rho) * grad_norm + delta * rare_coefficient(spec, delta) * grad_norm;
    mean - grad_norm
}

/// Adversarial oracle over a problem's exact gradient.
#[derive(Debug, Clone)]
pub struct AdversarialOracle {
    pub spec: AdversarialSpec,
    pub problem: Problem,
}

impl Oracle for AdversarialOracle {
    fn dim(&self) -> usize {
        self.problem.dim
    }

    fn sample_into(&self, x: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        ensure_finite("x", x)?;
        self.problem.gradient_into(x, out);
        adversarial_into(&self.spec, rng, out);
        Ok(())
    }
}

/// Serializable oracle description used in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleSpec {
    None,
    Gaussian { scale: f64 },
    SymmetrizedPareto { tail_index: f64, scale: f64 },
    Adversarial { p: f64, sigma: f64, rho: f64 },
}

impl OracleSpec {
    pub fn noise(&self) -> Option<NoiseSpec> {
        match *self {
            Self::None => Some(NoiseSpec::none()),
            Self::Gaussian { scale } => Some(NoiseSpec::gaussian(scale)),
            Self::SymmetrizedPareto { tail_index, scale } => Some(NoiseSpec::symmetrized_pareto(tail_index, scale)),
            Self::Adversarial { .. } => None,
        }
    }

    pub fn build(&self, problem: &Problem) -> Result<Box<dyn Oracle>> {
        match *self {
            Self::Adversarial { p, sigma, rho } => Ok(Box::new(AdversarialOracle {
                spec: AdversarialSpec::new(p, sigma, rho)?,
                problem: problem.clone(),
            })),
            _ => {
                let noise = self.noise().expect("additive variant");
                noise.validate()?;
                Ok(Box::new(AdditiveOracle::new(problem.clone(), noise)))
            }
        }
    }

    /// Certified `p`-th central moment bound for a `dim`-dimensional problem.
    pub fn certified_sigma(&self, p: f64, dim: usize) -> Result<f64> {
        match (self, self.noise()) {
            (Self::Adversarial { p: q, sigma, .. }, _) => {
                if p <= *q {
                    Ok(*sigma)
                } else {
                    Err(Error::Precondition(format!("adversarial oracle is only certified up to p = {q}")))
                }
            }
            (_, Some(noise)) => noise.certified_sigma(p, dim),
            _ => unreachable!(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_quadratic;
    use crate::trial_rng;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_noise_returns_exact_gradient() {
        let p = make_quadratic(2, vec![1.0, -2.0]).unwrap();
        let mut rng = trial_rng(1, 0);
        let s = sample_additive(&p, &NoiseSpec::none(), &[0.3, 0.4], &mut rng).unwrap();
        assert_eq!(s.grad, vec![0.3, 0.4]);
        assert_eq!(s.cost, 1);
        let s = sample_additive(&p, &NoiseSpec::gaussian(0.0), &[0.3, 0.4], &mut rng).unwrap();
        assert_eq!(s.grad, vec![0.3, 0.4]);
        assert!(sample_additive(&p, &NoiseSpec::none(), &[f64::NAN, 0.0], &mut rng).is_err());
    }

    #[test]
    fn pareto_mean_is_zero() {
        let noise = NoiseSpec::symmetrized_pareto(1.5, 1.0);
        let mut rng = trial_rng(11, 0);
        let n = 1_000_000;
        let mut buf = [0.0];
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            buf[0] = 0.0;
            noise.add_noise(&mut rng, &mut buf);
            samples.push(buf[0]);
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!(mean.abs() <= 5.0 * se, "mean {mean}, se {se}");
        assert!(samples.iter().all(|s| s.abs() >= 1.0));
    }

    #[test]
    fn gaussian_is_unbiased() {
        let p = make_quadratic(1, vec![1.0]).unwrap();
        let oracle = AdditiveOracle::new(p, NoiseSpec::gaussian(2.0));
        let mut rng = trial_rng(3, 0);
        let n = 200_000;
        let mut sum = 0.0;
        let mut out = [0.0];
        for _ in 0..n {
            oracle.sample_into(&[0.7], &mut rng, &mut out).unwrap();
            sum += out[0];
        }
        assert!((sum / n as f64 - 0.7).abs() < 5.0 * 2.0 / (n as f64).sqrt());
    }

    #[test]
    fn pareto_moment_examples() {
        assert_relative_eq!(pareto_abs_moment(1.5, 1.0, 1.0), 3.0, max_relative = 1e-12);
        assert!(pareto_abs_moment(1.5, 1.0, 1.5).is_infinite());
        assert_eq!(pareto_abs_moment(1.5, 2.0, 0.0), 1.0);
    }

    #[test]
    fn pareto_moment_matches_monte_carlo() {
        let noise = NoiseSpec::symmetrized_pareto(2.5, 0.5);
        let mut rng = trial_rng(5, 0);
        let n = 400_000;
        let mut buf = [0.0];
        let mut acc = 0.0;
        for _ in 0..n {
            buf[0] = 0.0;
            noise.add_noise(&mut rng, &mut buf);
            acc += buf[0].abs();
        }
        let exact = pareto_abs_moment(2.5, 0.5, 1.0);
        assert_relative_eq!(acc / n as f64, exact, max_relative = 0.01);
    }

    #[test]
    fn certified_sigma_values() {
        assert_relative_eq!(NoiseSpec::gaussian(1.0).certified_sigma(2.0, 4).unwrap(), 2.0);
        let s = NoiseSpec::symmetrized_pareto(2.5, 1.0).certified_sigma(1.5, 1).unwrap();
        assert_relative_eq!(s, 2.5f64.powf(2.0 / 3.0), max_relative = 1e-12);
        assert!(matches!(
            NoiseSpec::symmetrized_pareto(1.5, 1.0).certified_sigma(1.5, 1),
            Err(Error::Precondition(_))
        ));
        assert_eq!(NoiseSpec::none().certified_sigma(2.0, 10).unwrap(), 0.0);
    }

    #[test]
    fn adversarial_examples() {
        let spec = AdversarialSpec::new(2.0, 4.0, 0.0).unwrap();
        assert_eq!(spec.alpha, 2.0);
        assert_relative_eq!(adversarial_delta(&spec, 1.0), 0.25, max_relative = 1e-12);
        assert_eq!(adversarial_delta(&spec, 0.0), 0.0);
        assert_eq!(adversarial_delta(&spec, 100.0), 1.0);
        assert_relative_eq!(adversarial_p_moment(&spec, 1.0), 3.0, max_relative = 1e-12);
        assert_eq!(adversarial_p_moment(&spec, 0.0), 0.0);
        assert_eq!(adversarial_p_moment(&spec, 100.0), 0.0);

        let mut rng = trial_rng(2, 0);
        let s = sample_adversarial(&spec, &[30.0, 40.0], &mut rng);
        assert_eq!(s.grad, vec![30.0, 40.0]);

        // ρ = 0, δ < 1: the common branch returns zero.
        let mut zeros = 0;
        for _ in 0..1000 {
            let s = sample_adversarial(&spec, &[0.6, 0.8], &mut rng);
            if s.grad == vec![0.0, 0.0] || s.grad == vec![-0.0, -0.0] {
                zeros += 1;
            }
        }
        assert!(zeros > 600 && zeros < 900);

        assert!(AdversarialSpec::new(2.0, 1.0, 0.2).is_err());
        assert!(AdversarialSpec::new(1.0, 1.0, 0.0).is_err());
        assert!(AdversarialSpec::new(2.0, 1.0, 0.1).unwrap().check_batch(20).is_err());
    }

    #[test]
    fn adversarial_zero_gradient_draws_nothing() {
        let spec = AdversarialSpec::new(1.5, 1.0, 0.1).unwrap();
        let mut a = trial_rng(9, 0);
        let b = trial_rng(9, 0);
        let s = sample_adversarial(&spec, &[0.0, 0.0], &mut a);
        assert_eq!(s.grad, vec![-0.0, -0.0]);
        assert_eq!(a, b);
    }

    #[test]
    fn adversarial_empirical_mean() {
        let spec = AdversarialSpec::new(1.5, 1.0, 1.0 / 6.0).unwrap();
        let mut rng = trial_rng(4, 0);
        let g = 0.2;
        let n = 400_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample_adversarial(&spec, &[g], &mut rng).grad[0];
        }
        assert!((sum / n as f64 - g).abs() < 0.01);
    }

    proptest! {
        #[test]
        fn adversarial_two_point_identities(
            p in 1.05f64..=2.0,
            sigma in 0.1f64..10.0,
            rho in 0.0f64..=(1.0 / 6.0),
            frac in 0.0f64..1.5,
        ) {
            let spec = AdversarialSpec::new(p, sigma, rho).unwrap();
            let g = frac * sigma / (2.0 * (1.0 + rho));
            prop_assert!(adversarial_bias(&spec, g).abs() < 1e-12 * sigma.max(1.0));
            if adversarial_delta(&spec, g) < 1.0 {
                prop_assert!(adversarial_p_moment(&spec, g) <= sigma.powf(p) * (1.0 + 1e-12));
            }
        }
    }
}
