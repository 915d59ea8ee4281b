//! Exact numerical workbench for the four-functional view of representation
//! learning: rate (R), classification error (C), distortion (D) and parameter
//! entropy (S), plus the reconstruction-free volume (V).
//!
//! The crate is organised around a handful of small engines:
//!
//! - [`info`] — dense probability tables over named discrete variables,
//!   exact entropies / KL / mutual informations, DAG multi-information,
//!   and fully enumerated tiny worlds for identity verification.
//! - [`mixture`] — the discretized two-Gaussian data process, calibrated so
//!   the true rate I(x;z) hits a requested target.
//! - [`model`] — the 184-parameter encoder/decoder/classifier/marginal model
//!   with multiplicative log-normal weight noise.
//! - [`functionals`] — exact evaluation of R, C, D, S, V for a parameter
//!   setting against a dataset.
//! - [`trainer`] — the Lagrangian objective, hand-derived gradients,
//!   optimizers and train/eval bookkeeping.
//! - [`frontier`] — multiplier sweeps, local surface geometry, Maxwell
//!   relation checks, susceptibilities and model coupling.
//! - [`boltzmann`] — exact equilibrium machinery on enumerable parameter
//!   grids plus tempered conjugate Bayes.
//!
//! All information quantities are in nats.

pub mod boltzmann;
pub mod error;
pub mod frontier;
pub mod functionals;
pub mod info;
pub mod mixture;
pub mod model;
pub mod numdiff;
pub mod trainer;

pub use error::{Error, Result};
