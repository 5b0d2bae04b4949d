//! Smooth test objectives with exact gradients.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bounds::{tstar_deterministic, StepSequence};
use crate::error::{ensure_finite, invalid, Error, Result};
use crate::linalg;

/// A user-supplied smooth objective.
pub trait SmoothObjective: Send + Sync + fmt::Debug {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone)]
pub enum Objective {
    /// `½‖x‖²`
    Quadratic,
    /// `Σ ln(1 + x_i²)`, nonconvex with `L = 2`.
    Cauchy,
    Hard(HardInstance),
    Custom(Arc<dyn SmoothObjective>),
}

/// A smooth objective with its smoothness constant, initial point and
/// optimal value.
#[derive(Debug, Clone)]
pub struct Problem {
    pub dim: usize,
    pub smoothness: f64,
    /// Upper bound on `F(x₁) − F*`.
    pub delta1: f64,
    pub f_star: f64,
    pub x1: Vec<f64>,
    pub objective: Objective,
}

impl Problem {
    /// Wraps a custom objective. Fails if `F(x₁) − f_star > delta1`.
    pub fn custom(
        objective: Arc<dyn SmoothObjective>,
        x1: Vec<f64>,
        smoothness: f64,
        f_star: f64,
        delta1: f64,
    ) -> Result<Self> {
        if x1.is_empty() {
            return Err(invalid("dimension must be at least 1"));
        }
        ensure_finite("x1", &x1)?;
        let problem = Self {
            dim: x1.len(),
            smoothness,
            delta1,
            f_star,
            x1,
            objective: Objective::Custom(objective),
        };
        problem.check_initial_gap()?;
        Ok(problem)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.objective {
            Objective::Quadratic => 0.5 * linalg::norm_sq(x),
            Objective::Cauchy => x.iter().map(|v| (v * v).ln_1p()).sum(),
            Objective::Hard(h) => h.value(x[0]),
            Objective::Custom(f) => f.value(x),
        }
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.objective {
            Objective::Quadratic => out.copy_from_slice(x),
            Objective::Cauchy => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = 2.0 * v / (1.0 + v * v);
                }
            }
            Objective::Hard(h) => out[0] = h.derivative(x[0]),
            Objective::Custom(f) => f.gradient_into(x, out),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.gradient_into(x, &mut out);
        out
    }

    pub fn hard_instance(&self) -> Option<&HardInstance> {
        match &self.objective {
            Objective::Hard(h) => Some(h),
            _ => None,
        }
    }

    fn check_initial_gap(&self) -> Result<()> {
        let gap = self.value(&self.x1) - self.f_star;
        if gap > self.delta1 * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::ConstructionInvalid(format!(
                "F(x1) - f_star = {gap} exceeds delta1 = {}",
                self.delta1
            )));
        }
        Ok(())
    }
}

/// `F(x) = ½‖x‖²` started at `x1`.
pub fn make_quadratic(dim: usize, x1: Vec<f64>) -> Result<Problem> {
    if dim == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if x1.len() != dim {
        return Err(invalid(format!("x1 has length {}, expected {dim}", x1.len())));
    }
    ensure_finite("x1", &x1)?;
    Ok(Problem {
        dim,
        smoothness: 1.0,
        delta1: 0.5 * linalg::norm_sq(&x1),
        f_star: 0.0,
        x1,
        objective: Objective::Quadratic,
    })
}

/// One-dimensional `F(x) = ½x²` started at `x1 > 0`.
pub fn make_1d_lb_quadratic(x1: f64) -> Result<Problem> {
    if !(x1 > 0.0) || !x1.is_finite() {
        return Err(invalid(format!("x1 must be positive and finite, got {x1}")));
    }
    make_quadratic(1, vec![x1])
}

/// `F(x) = Σ ln(1 + x_i²)`: smooth (`L = 2`), nonconvex, `F* = 0`.
pub fn make_cauchy(dim: usize, x1: Vec<f64>) -> Result<Problem> {
    if dim == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if x1.len() != dim {
        return Err(invalid(format!("x1 has length {}, expected {dim}", x1.len())));
    }
    ensure_finite("x1", &x1)?;
    let delta1 = x1.iter().map(|v| (v * v).ln_1p()).sum();
    Ok(Problem {
        dim,
        smoothness: 2.0,
        delta1,
        f_star: 0.0,
        x1,
        objective: Objective::Cauchy,
    })
}

/// Parameters of the one-dimensional hard instance for normalized gradient
/// descent with constant step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardInstanceSpec {
    pub eps: f64,
    /// Constant step `η̄`.
    pub step: f64,
    pub delta1: f64,
    pub smoothness: f64,
    #[serde(default = "default_horizon_cap")]
    pub horizon_cap: u64,
}

fn default_horizon_cap() -> u64 {
    crate::bounds::DEFAULT_TSTAR_CAP
}

/// The constructed hard function. Its derivative is `−2ε` left of the
/// origin, a tent of width `η̄` on each lattice cell `[τ_t, τ_{t+1})` for
/// `t < T*`, a linear ramp from `−2ε` to `0` starting at `τ_{T*}`, and zero
/// afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardInstance {
    pub eps: f64,
    pub step: f64,
    pub smoothness: f64,
    pub delta1: f64,
    pub tstar: u64,
    cell_integral: f64,
    ramp_start: f64,
    value_at_ramp: f64,
}

impl HardInstance {
    /// Lattice point `τ_t = (t − 1) η̄`.
    pub fn lattice_point(&self, t: u64) -> f64 {
        (t as f64 - 1.0) * self.step
    }

    /// Integral of `F'` over one lattice cell: `−2η̄ε + η̄²L/4`.
    pub fn cell_integral(&self) -> f64 {
        self.cell_integral
    }

    fn cell(&self, x: f64) -> (f64, f64) {
        let k = (x / self.step).floor();
        let u = (x - k * self.step).clamp(0.0, self.step);
        (k, u)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let (eps, l, step) = (self.eps, self.smoothness, self.step);
        if x < 0.0 {
            -2.0 * eps
        } else if x < self.ramp_start {
            let (_, u) = self.cell(x);
            if u <= step / 2.0 {
                -2.0 * eps + l * u
            } else {
                -2.0 * eps + step * l - l * u
            }
        } else if x <= self.ramp_start + 2.0 * eps / l {
            -2.0 * eps + l * (x - self.ramp_start)
        } else {
            0.0
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let (eps, l, step) = (self.eps, self.smoothness, self.step);
        if x < 0.0 {
            self.delta1 - 2.0 * eps * x
        } else if x < self.ramp_start {
            let (k, u) = self.cell(x);
            let half = step / 2.0;
            let within = if u <= half {
                -2.0 * eps * u + l * u * u / 2.0
            } else {
                (-eps * step + l * step * step / 8.0) + (-2.0 * eps + step * l) * (u - half)
                    - l / 2.0 * (u * u - half * half)
            };
            self.delta1 + k * self.cell_integral + within
        } else {
            let u = (x - self.ramp_start).min(2.0 * eps / l);
            self.value_at_ramp - 2.0 * eps * u + l * u * u / 2.0
        }
    }

    /// Infimum of the constructed function.
    pub fn infimum(&self) -> f64 {
        self.value_at_ramp - 2.0 * self.eps * self.eps / self.smoothness
    }
}

/// Builds the hard instance started at `x₁ = 0`.
pub fn make_hard_deterministic(spec: &HardInstanceSpec) -> Result<Problem> {
    let HardInstanceSpec {
        eps,
        step,
        delta1,
        smoothness,
        horizon_cap,
    } = *spec;
    if !(eps > 0.0 && step > 0.0 && smoothness > 0.0 && delta1 > 0.0) {
        return Err(invalid("eps, step, delta1 and smoothness must be positive"));
    }
    if step > 8.0 * eps / smoothness {
        return Err(Error::ConstructionInvalid(format!(
            "step {step} exceeds 8 eps / L = {}",
            8.0 * eps / smoothness
        )));
    }
    let tstar = match tstar_deterministic(eps, delta1, smoothness, &StepSequence::Constant { eta: step }, horizon_cap) {
        Err(Error::Precondition(msg)) => return Err(Error::ConstructionInvalid(msg)),
        other => other?,
    };
    let cell_integral = -2.0 * step * eps + step * step * smoothness / 4.0;
    let ramp_start = (tstar as f64 - 1.0) * step;
    let value_at_ramp = delta1 + (tstar as f64 - 1.0) * cell_integral;
    let hard = HardInstance {
        eps,
        step,
        smoothness,
        delta1,
        tstar,
        cell_integral,
        ramp_start,
        value_at_ramp,
    };
    let problem = Problem {
        dim: 1,
        smoothness,
        delta1,
        f_star: hard.infimum(),
        x1: vec![0.0],
        objective: Objective::Hard(hard),
    };
    problem.check_initial_gap()?;
    Ok(problem)
}

/// `|F'(τ_t)|` on the hard instance; equals `2ε` for `1 ≤ t ≤ T*`.
pub fn lattice_gradient_abs(problem: &Problem, t: u64) -> Result<f64> {
    let hard = problem
        .hard_instance()
        .ok_or_else(|| invalid("problem is not a hard deterministic instance"))?;
    if t == 0 || t > hard.tstar {
        return Err(invalid(format!("t = {t} outside 1..={}", hard.tstar)));
    }
    Ok(hard.derivative(hard.lattice_point(t)).abs())
}

/// Serializable description of a problem, used in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// `½‖x‖²`. The initial point is `x1` if given, else every coordinate
    /// equals `x1_fill`.
    Quadratic {
        dim: usize,
        #[serde(default)]
        x1: Option<Vec<f64>>,
        #[serde(default)]
        x1_fill: Option<f64>,
    },
    LbQuadratic {
        x1: f64,
    },
    Cauchy {
        dim: usize,
        #[serde(default)]
        x1: Option<Vec<f64>>,
        #[serde(default)]
        x1_fill: Option<f64>,
    },
    HardDeterministic {
        eps: f64,
        step: f64,
        delta1: f64,
        smoothness: f64,
        #[serde(default = "default_horizon_cap")]
        horizon_cap: u64,
    },
}

fn initial_point(dim: usize, x1: &Option<Vec<f64>>, fill: Option<f64>) -> Result<Vec<f64>> {
    match (x1, fill) {
        (Some(_), Some(_)) => Err(invalid("give either x1 or x1_fill, not both")),
        (Some(v), None) => Ok(v.clone()),
        (None, f) => Ok(vec![f.unwrap_or(1.0); dim]),
    }
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Problem> {
        match self {
            Self::Quadratic { dim, x1, x1_fill } => make_quadratic(*dim, initial_point(*dim, x1, *x1_fill)?),
            Self::LbQuadratic { x1 } => make_1d_lb_quadratic(*x1),
            Self::Cauchy { dim, x1, x1_fill } => make_cauchy(*dim, initial_point(*dim, x1, *x1_fill)?),
            Self::HardDeterministic {
                eps,
                step,
                delta1,
                smoothness,
                horizon_cap,
            } => make_hard_deterministic(&HardInstanceSpec {
                eps: *eps,
                step: *step,
                delta1: *delta1,
                smoothness: *smoothness,
                horizon_cap: *horizon_cap,
            }),
        }
    }
}
