//! Gradient estimators built from raw oracle samples.

use rand::RngCore;

use crate::error::{invalid, Error, Result};
use crate::noise::Oracle;

/// Average of `batch` independent samples at `x`, written into `out`.
/// Returns the number of oracle calls.
pub fn minibatch_into(
    oracle: &dyn Oracle,
    x: &[f64],
    batch: u64,
    rng: &mut dyn RngCore,
    scratch: &mut [f64],
    out: &mut [f64],
) -> Result<u64> {
    if batch == 0 {
        return Err(invalid("batch size must be at least 1"));
    }
    if batch == 1 {
        oracle.sample_into(x, rng, out)?;
        return Ok(1);
    }
    out.fill(0.0);
    for _ in 0..batch {
        oracle.sample_into(x, rng, scratch)?;
        for (o, s) in out.iter_mut().zip(scratch.iter()) {
            *o += s;
        }
    }
    let inv = 1.0 / batch as f64;
    for o in out.iter_mut() {
        *o *= inv;
    }
    Ok(batch)
}

/// `(1/B) Σ_j ∇f(x, ξ_j)` and its cost `B`.
pub fn estimate_minibatch(oracle: &dyn Oracle, x: &[f64], batch: u64, rng: &mut dyn RngCore) -> Result<(Vec<f64>, u64)> {
    let mut out = vec![0.0; oracle.dim()];
    let mut scratch = vec![0.0; oracle.dim()];
    let cost = minibatch_into(oracle, x, batch, rng, &mut scratch, &mut out)?;
    Ok((out, cost))
}

/// Exponential moving average `g_t = β_t g_{t−1} + (1 − β_t) ∇f(x_t, ξ_t)`
/// with `g_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumEstimator {
    buffer: Vec<f64>,
    sample: Vec<f64>,
    t: u64,
}

impl MomentumEstimator {
    pub fn new(dim: usize) -> Self {
        Self {
            buffer: vec![0.0; dim],
            sample: vec![0.0; dim],
            t: 1,
        }
    }

    /// Index of the next update.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn buffer(&self) -> &[f64] {
        &self.buffer
    }

    /// Performs one update and returns the new estimate. The first call must
    /// use `β = 0`.
    pub fn update(&mut self, oracle: &dyn Oracle, x: &[f64], beta: f64, rng: &mut dyn RngCore) -> Result<&[f64]> {
        if !(0.0..1.0).contains(&beta) {
            return Err(invalid(format!("beta must lie in [0, 1), got {beta}")));
        }
        if self.t == 1 && beta != 0.0 {
            return Err(Error::ContractViolation(format!("first momentum update needs beta = 0, got {beta}")));
        }
        oracle.sample_into(x, rng, &mut self.sample)?;
        for (g, s) in self.buffer.iter_mut().zip(&self.sample) {
            *g = beta * *g + (1.0 - beta) * s;
        }
        self.t += 1;
        Ok(&self.buffer)
    }
}

/// One momentum step on `state`; returns the estimate and its cost (always 1).
pub fn estimate_momentum(
    state: &mut MomentumEstimator,
    oracle: &dyn Oracle,
    x: &[f64],
    beta: f64,
    rng: &mut dyn RngCore,
) -> Result<(Vec<f64>, u64)> {
    Ok((state.update(oracle, x, beta, rng)?.to_vec(), 1))
}
