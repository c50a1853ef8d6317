//! Regret analysis for one-shot product selection against an adversarial
//! Nature.
//!
//! A decision maker sees `m` ratings per product, drawn from a
//! column-stochastic rating distribution (the [`State`]) that Nature picks,
//! and must choose one product. This crate computes, exactly, the expected
//! regret of observation-driven decision rules by enumerating every
//! observation matrix, searches for the worst-case state, evaluates the
//! Hoeffding sample-size bound for the greedy rule, and runs Monte Carlo
//! experiments over review datasets.
//!
//! Ratings are always the consecutive integers `1..=n_r`. Internally rating
//! `r` lives at row index `r - 1`.

pub mod beta_compare;
pub mod bounds;
mod error;
pub mod model;
pub mod numerics;
pub mod optim;
pub mod probability;
pub mod regret;
pub mod sampling;
pub mod simulation;
pub mod strategies;

pub use error::{Error, Result};
pub use model::{ModelDims, ObservationMatrix, State, StrategyDecision};
pub use probability::{
    column_likelihood, enumerate_observations, enumerate_observations_with_cap,
    observation_likelihood, ObservationSpace, DEFAULT_ENUMERATION_CAP,
};
pub use regret::{expected_payoff, expected_regret, RegretReport, WorstCaseResult};
pub use strategies::{Strategy, StrategyKind, TsConfig};
