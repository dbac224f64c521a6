//! Exact minimax loss for prediction with expert advice when the best
//! expert makes at most `b` mistakes, together with potential-based upper
//! bounds, the forecasters they induce, and a lower-bound adversary.
//!
//! The game state is the histogram of surviving experts by mistake count
//! (see [`State`]). [`MinimaxSolver`] computes the value of the game by
//! dynamic programming over states, exactly with [`ExactLoss`] or in
//! floating point.

pub mod cli;
pub mod error;
pub mod exact;
pub mod potential;
pub mod scalar;
pub mod sim;
pub mod states;
pub mod strategies;

pub use error::{Error, Result};
pub use exact::{perfect_expert_loss, AdversaryMove, MemoTable, MinimaxSolver, SolverConfig};
pub use potential::{
    certify, f_c, f_opt, precise_upper_bound, upper_bound, Certification,
    LogPotential, Potential, PotentialParams,
};
pub use scalar::LossScalar;
pub use states::{ChoiceSet, Decomposition, MistakeBudget, RealState, State};
pub use strategies::{lower_bound, Adversary, ForecastDistribution, Forecaster};

/// Exact loss values.
pub type ExactLoss = num_rational::BigRational;
pub type ExactSolver = MinimaxSolver<ExactLoss>;
pub type FloatSolver = MinimaxSolver<f64>;
pub type SingleSolver = MinimaxSolver<f32>;
pub type LogPotential64 = LogPotential<f64>;
pub type LogPotential32 = LogPotential<f32>;
