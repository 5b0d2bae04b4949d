//! A laboratory for normalized SGD, Clip-SGD and SGD under heavy-tailed
//! gradient noise.
//!
//! The crate bundles smooth test problems (including a lower-bound hard
//! instance), stochastic gradient oracles, gradient estimators, parameter
//! schedules, optimizers with a metric-recording trajectory runner,
//! closed-form bound calculators, Monte-Carlo harnesses and executable
//! lemma checks.
//!
//! ```
//! use nsgd_lab::prelude::*;
//!
//! let problem = make_quadratic(3, vec![1.0, 0.0, 0.0]).unwrap();
//! let oracle = AdditiveOracle::new(problem.clone(), NoiseSpec::gaussian(0.1));
//! let spec = OptimizerSpec::nsgd(StepSchedule::Constant { eta: 0.05 });
//! let mut rng = trial_rng(7, 0);
//! let run = run_trajectory(&problem, &oracle, &spec, 50, &mut rng, &RunOptions::default()).unwrap();
//! assert!(run.summary.rms_grad_norm >= run.summary.avg_grad_norm);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod checks;
pub mod cli;

pub mod error;
pub mod estimators;
pub mod experiments;
pub mod linalg;
pub mod noise;
pub mod optimizers;
pub mod output;
pub mod problems;
pub mod schedules;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream owned by one trial.
pub type TrialRng = ChaCha8Rng;

/// Stream for trial `trial` of an experiment seeded with `seed`.
///
/// Distinct `(seed, trial)` pairs select distinct ChaCha streams, so
/// trials never share randomness and results do not depend on how trials
/// are scheduled across workers.
pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub mod prelude {
    pub use crate::bounds::*;
    pub use crate::checks::*;
    pub use crate::estimators::*;
    pub use crate::experiments::*;
    pub use crate::noise::*;
    pub use crate::optimizers::*;
    pub use crate::problems::*;
    pub use crate::schedules::*;
    pub use crate::{trial_rng, Error, Result, TrialRng};
}
