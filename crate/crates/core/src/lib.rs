//! Numerical verification of maximal inequalities for random processes with
//! Hölder-type increment control.
//!
//! The crate is organised bottom-up:
//!
//! * [`constants`] evaluates Γ, ζ and every closed-form constant that enters
//!   the maximal, tail and up-crossing bounds.
//! * [`processes`] simulates fractional Brownian motion (exact, by Cholesky),
//!   a Rademacher random-walk martingale and truncated Rademacher cosine
//!   series, with per-path counter-based randomness.
//! * [`estimators`] holds pathwise statistics: grid suprema, increment
//!   moments, up-crossing counts, the dyadic decomposition used in the
//!   chaining argument, and confidence intervals.
//! * [`bounds`] turns specs, horizons and levels into [`bounds::BoundReport`]s.
//! * [`verify`] runs end-to-end experiments and renders [`verify::Verdict`]s.
//! * [`cli`] and [`config`] are the command-line front door.

// `!(x > 0.0)` is deliberate: it also rejects NaN. Reference values are kept
// at the digits their oracle printed.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bounds;
pub mod cli;
pub mod config;
pub mod constants;
pub mod error;
pub mod estimators;
pub mod format;
pub mod processes;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
