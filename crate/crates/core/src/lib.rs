//! Stationary two-point functions of a boundary-driven wealth/energy
//! redistribution chain.
//!
//! Three independent engines compute the same stationary quantities:
//!
//! * [`solver`] assembles and solves the closed linear system for all
//!   `E[x_i x_j]`;
//! * [`closedform`] evaluates the multilinear closed form that holds when the
//!   reservoir second moments follow [`closedform::second_moment_prescription`];
//! * [`simulate`] runs the chain as a continuous-time Markov jump process.
//!
//! [`verify`] fits the multilinear ansatz and cross-checks the engines.

pub mod closedform;
pub mod error;
pub mod model;
pub mod output;
pub mod profile;
pub mod simulate;
pub mod solver;
pub mod tolerances;
pub mod verify;

pub use error::{Error, ParamError, Result, Side};
pub use model::{
    alpha_of_law, coefficients, GeneratorCoefficients, ModelParams, RedistributionKind, RedistributionLaw,
    ReservoirKind, ReservoirLaw,
};
pub use profile::{profile_closed_form, profile_solve, Profile};
pub use solver::{correlations, solve_two_point, CorrelationMatrix, MomentMatrix, PairIndex};

/// Crate version, embedded in every output header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
