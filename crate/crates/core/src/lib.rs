//! Numerical laboratory for ignition-type reaction-diffusion equations
//! `∂t u = Δu + f(u)` whose initial data oscillate periodically around the
//! ignition threshold.
//!
//! The crate is organised bottom-up: [`nonlinearity`] validates `f`,
//! [`profiles`] describes periodic limits and initial data,
//! [`front_solver`] computes planar fronts, [`periodic_solver`] and
//! [`threshold`] handle the periodic problem and its critical period, and
//! [`cauchy`] simulates the whole-space problem.

pub mod cache;
pub mod cauchy;
pub mod error;
pub mod field;
pub mod front_solver;
pub mod nonlinearity;
pub mod ode;
pub mod periodic_solver;
pub mod threshold;
pub mod profiles;

pub use error::{Error, Result};
pub use nonlinearity::{Nonlinearity, ReactionKind};
pub use profiles::{InitialData, PeriodVector, PeriodicProfile, ProfileSpec};
