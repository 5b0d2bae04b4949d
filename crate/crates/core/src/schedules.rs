//! Step, batch, momentum and clipping-threshold sequences.
//!
//! Every schedule is a pure function of the iteration `t` (1-based) and,
//! where relevant, the horizon `T`.

use serde::{Deserialize, Serialize};

use crate::bounds::check_tail_index;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSchedule {
    /// `η T^{-r}` at every iteration.
    HorizonPower { eta: f64, r: f64 },
    /// `η t^{-r}`.
    IteratePower { eta: f64, r: f64 },
    Constant { eta: f64 },
}

impl StepSchedule {
    pub fn at(&self, t: u64, horizon: u64) -> f64 {
        match *self {
            Self::HorizonPower { eta, r } => eta * (horizon as f64).powf(-r),
            Self::IteratePower { eta, r } => eta * (t as f64).powf(-r),
            Self::Constant { eta } => eta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (eta, r) = match *self {
            Self::HorizonPower { eta, r } | Self::IteratePower { eta, r } => (eta, r),
            Self::Constant { eta } => (eta, 0.0),
        };
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(invalid(format!("step size must be positive, got {eta}")));
        }
        if !(0.0..=1.0).contains(&r) {
            return Err(invalid(format!("step exponent r must lie in [0, 1], got {r}")));
        }
        Ok(())
    }

    pub fn with_eta(self, eta: f64) -> Self {
        match self {
            Self::HorizonPower { r, .. } => Self::HorizonPower { eta, r },
            Self::IteratePower { r, .. } => Self::IteratePower { eta, r },
            Self::Constant { .. } => Self::Constant { eta },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum BatchSchedule {
    /// `⌈max{1, B T^q}⌉` at every iteration.
    HorizonPower { b: f64, q: f64 },
    /// `⌈max{1, B}⌉`.
    Constant { b: f64 },
}

impl Default for BatchSchedule {
    fn default() -> Self {
        Self::Constant { b: 1.0 }
    }
}

impl BatchSchedule {
    /// Real-valued batch size before clamping and rounding.
    pub fn raw(&self, _t: u64, horizon: u64) -> f64 {
        match *self {
            Self::HorizonPower { b, q } => b * (horizon as f64).powf(q),
            Self::Constant { b } => b,
        }
    }

    /// Integer batch size. A raw value within relative `1e-9` of an integer
    /// is taken as that integer, so rounding noise in the inputs (say
    /// `200.00000000000003`) does not add a sample.
    pub fn at(&self, t: u64, horizon: u64) -> u64 {
        let raw = self.raw(t, horizon).max(1.0);
        let nearest = raw.round();
        if (raw - nearest).abs() <= 1e-9 * nearest {
            nearest as u64
        } else {
            raw.ceil() as u64
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (b, q) = match *self {
            Self::HorizonPower { b, q } => (b, q),
            Self::Constant { b } => (b, 0.0),
        };
        if !(b > 0.0) || !b.is_finite() || !(q >= 0.0) {
            return Err(invalid(format!("batch needs B > 0 and q >= 0, got B={b}, q={q}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum MomentumSchedule {
    /// `β_t = 1 − t^{-q}`.
    IteratePower { q: f64 },
    Constant { beta: f64 },
}

impl MomentumSchedule {
    /// `β_t`, forced to zero at `t = 1`.
    pub fn at(&self, t: u64) -> f64 {
        if t <= 1 {
            return 0.0;
        }
        match *self {
            Self::IteratePower { q } => 1.0 - (t as f64).powf(-q),
            Self::Constant { beta } => beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::IteratePower { q } if !(q >= 0.0) => Err(invalid(format!("momentum exponent must be >= 0, got {q}"))),
            Self::Constant { beta } if !(0.0..1.0).contains(&beta) => {
                Err(invalid(format!("beta must lie in [0, 1), got {beta}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClipSchedule {
    Constant { gamma: f64 },
    /// `γ t^{exponent}`.
    IteratePower { gamma: f64, exponent: f64 },
}

impl ClipSchedule {
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            Self::Constant { gamma } => gamma,
            Self::IteratePower { gamma, exponent } => gamma * (t as f64).powf(exponent),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let gamma = match *self {
            Self::Constant { gamma } | Self::IteratePower { gamma, .. } => gamma,
        };
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(invalid(format!("clipping threshold must be positive, got {gamma}")));
        }
        Ok(())
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        match self {
            Self::Constant { .. } => Self::Constant { gamma },
            Self::IteratePower { exponent, .. } => Self::IteratePower { gamma, exponent },
        }
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

/// `η ≡ √(Δ₁/(LT))`, `B ≡ ⌈max{1, (σ²T/(Δ₁L))^{p/(2p−2)}}⌉`.
pub fn tuned_minibatch_preset(
    delta1: f64,
    smoothness: f64,
    sigma: f64,
    p: f64,
    horizon: u64,
) -> Result<(StepSchedule, BatchSchedule)> {
    check_tail_index(p)?;
    check_positive("delta1", delta1)?;
    check_positive("smoothness", smoothness)?;
    if !(sigma >= 0.0) {
        return Err(invalid("sigma must be nonnegative"));
    }
    let t = horizon as f64;
    let eta = (delta1 / (smoothness * t)).sqrt();
    let b = (sigma * sigma * t / (delta1 * smoothness)).powf(p / (2.0 * p - 2.0)).max(1.0);
    Ok((StepSchedule::Constant { eta }, BatchSchedule::Constant { b }))
}

/// `η_t ≡ η T^{-1/2}`, `B_t ≡ ⌈max{1, B T}⌉`.
pub fn param_free_preset(eta: f64, batch: f64) -> (StepSchedule, BatchSchedule) {
    (
        StepSchedule::HorizonPower { eta, r: 0.5 },
        BatchSchedule::HorizonPower { b: batch, q: 1.0 },
    )
}

/// `β = 1 − min{1, (Δ₁L/(σ²T))^{p/(3p−2)}}`, `η ≡ √(Δ₁(1−β)/(LT))`.
pub fn tuned_momentum_preset(
    delta1: f64,
    smoothness: f64,
    sigma: f64,
    p: f64,
    horizon: u64,
) -> Result<(StepSchedule, MomentumSchedule)> {
    check_tail_index(p)?;
    check_positive("delta1", delta1)?;
    check_positive("smoothness", smoothness)?;
    let t = horizon as f64;
    let ratio = if sigma > 0.0 {
        (delta1 * smoothness / (sigma * sigma * t)).powf(p / (3.0 * p - 2.0))
    } else {
        1.0
    };
    let beta = 1.0 - ratio.min(1.0);
    let eta = (delta1 * (1.0 - beta) / (smoothness * t)).sqrt();
    Ok((StepSchedule::Constant { eta }, MomentumSchedule::Constant { beta }))
}

/// `β_t = 1 − t^{-1/2}`, `η_t = η t^{-3/4}`.
pub fn momentum_param_free_preset(eta: f64) -> (StepSchedule, MomentumSchedule) {
    (
        StepSchedule::IteratePower { eta, r: 0.75 },
        MomentumSchedule::IteratePower { q: 0.5 },
    )
}

/// `γ_t = γ t^{1/(3p−2)}`.
pub fn clip_theory_preset(gamma: f64, p: f64) -> Result<ClipSchedule> {
    check_tail_index(p)?;
    check_positive("gamma", gamma)?;
    Ok(ClipSchedule::IteratePower {
        gamma,
        exponent: 1.0 / (3.0 * p - 2.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn tuned_minibatch_examples() {
        let (_, b) = tuned_minibatch_preset(1.0, 1.0, 0.0, 2.0, 100).unwrap();
        assert_eq!(b.at(1, 100), 1);
        // σ²T/(Δ₁L) = 16.
        let (s, b) = tuned_minibatch_preset(1.0, 1.0, 2.0, 2.0, 4).unwrap();
        assert_eq!(b.at(1, 4), 16);
        assert_relative_eq!(s.at(3, 4), 0.5, max_relative = 1e-12);
        let (_, b) = tuned_minibatch_preset(1.0, 1.0, 2.0, 1.5, 4).unwrap();
        assert_eq!(b.at(1, 4), 64);
        assert!(tuned_minibatch_preset(1.0, 1.0, 1.0, 1.0, 100).is_err());
        assert!(tuned_minibatch_preset(1.0, 1.0, 1.0, 2.5, 100).is_err());
    }

    #[test]
    fn param_free_examples() {
        let (s, b) = param_free_preset(1.0, 1.0);
        assert_relative_eq!(s.at(3, 100), 0.1, max_relative = 1e-12);
        assert_eq!(b.at(3, 100), 100);
        assert_eq!(s.at(1, 1), 1.0);
        assert_eq!(param_free_preset(1.0, 2.5).1.at(1, 1), 3);
        assert_eq!(param_free_preset(1.0, 0.001).1.at(1, 100), 1);
    }

    #[test]
    fn tuned_momentum_examples() {
        let (s, m) = tuned_momentum_preset(2.0, 1.0, 0.0, 2.0, 50).unwrap();
        assert_eq!(m.at(5), 0.0);
        assert_relative_eq!(s.at(1, 50), (2.0f64 / 50.0).sqrt(), max_relative = 1e-12);
        let (_, m) = tuned_momentum_preset(1.0, 1.0, 0.5, 2.0, 4).unwrap();
        assert_eq!(m.at(5), 0.0);
        // Δ₁L/(σ²T) = 1/16.
        let (s, m) = tuned_momentum_preset(1.0, 1.0, 2.0, 2.0, 4).unwrap();
        assert_relative_eq!(m.at(5), 0.75, max_relative = 1e-12);
        assert_eq!(m.at(1), 0.0);
        assert_relative_eq!(s.at(1, 4), (0.25f64 / 4.0).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn momentum_param_free_examples() {
        let (s, m) = momentum_param_free_preset(1.0);
        assert_eq!(m.at(1), 0.0);
        assert_relative_eq!(m.at(4), 0.5, max_relative = 1e-12);
        assert_relative_eq!(s.at(4, 1000), 0.353_553_390_593_273_8, max_relative = 1e-12);
        assert_relative_eq!(m.at(100), 0.9, max_relative = 1e-12);
    }

    #[test]
    fn clip_theory_examples() {
        let c = clip_theory_preset(0.5, 2.0).unwrap();
        assert_relative_eq!(c.at(4), 0.5 * 2f64.sqrt(), max_relative = 1e-12);
        assert_eq!(c.at(1), 0.5);
        match clip_theory_preset(1.0, 1.5).unwrap() {
            ClipSchedule::IteratePower { exponent, .. } => assert_relative_eq!(exponent, 0.4, max_relative = 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn horizon_power_is_constant_in_t() {
        let s = StepSchedule::HorizonPower { eta: 0.3, r: 0.5 };
        let b = BatchSchedule::HorizonPower { b: 0.7, q: 1.0 };
        for t in 1..=50 {
            assert_eq!(s.at(t, 50), s.at(1, 50));
            assert_eq!(b.at(t, 50), b.at(1, 50));
        }
    }

    #[test]
    fn schedules_round_trip_through_toml() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct Wrap {
            step: StepSchedule,
            clip: ClipSchedule,
        }
        let w = Wrap {
            step: StepSchedule::IteratePower { eta: 0.1, r: 0.5 },
            clip: ClipSchedule::Constant { gamma: 2.0 },
        };
        let text = toml::to_string(&w).unwrap();
        assert_eq!(toml::from_str::<Wrap>(&text).unwrap(), w);
    }

    proptest! {
        #[test]
        fn tuned_batch_matches_p2_formula(
            sigma in 0.0f64..5.0,
            delta1 in 0.1f64..5.0,
            l in 0.1f64..5.0,
            t in 1u64..5000,
        ) {
            let (_, b) = tuned_minibatch_preset(delta1, l, sigma, 2.0, t).unwrap();
            let expected = (sigma * sigma * t as f64 / (delta1 * l)).max(1.0).ceil() as u64;
            prop_assert_eq!(b.at(1, t), expected);
        }

        #[test]
        fn emitted_values_are_positive(
            eta in 1e-3f64..10.0,
            r in 0.0f64..=1.0,
            gamma in 1e-3f64..10.0,
            exponent in -1.0f64..1.0,
            t in 1u64..100_000,
            horizon in 1u64..100_000,
            b in 1e-3f64..100.0,
            q in 0.0f64..2.0,
        ) {
            let iterate = StepSchedule::IteratePower { eta, r };
            let fixed = StepSchedule::HorizonPower { eta, r };
            let clip = ClipSchedule::IteratePower { gamma, exponent };
            let batch = BatchSchedule::HorizonPower { b, q };
            prop_assert!(iterate.at(t, horizon) > 0.0);
            prop_assert!(fixed.at(t, horizon) > 0.0);
            prop_assert!(clip.at(t) > 0.0);
            prop_assert!(batch.at(t, horizon) >= 1);
            let beta = MomentumSchedule::IteratePower { q: 0.5 }.at(t);
            prop_assert!((0.0..1.0).contains(&beta));
        }
    }

    #[test]
    fn batch_ignores_rounding_noise() {
        assert_eq!(BatchSchedule::Constant { b: 200.00000000000003 }.at(1, 1), 200);
        assert_eq!(BatchSchedule::Constant { b: 199.99999999999997 }.at(1, 1), 200);
        assert_eq!(BatchSchedule::Constant { b: 200.001 }.at(1, 1), 201);
        assert_eq!(BatchSchedule::Constant { b: 0.3 }.at(1, 1), 1);
    }
}
