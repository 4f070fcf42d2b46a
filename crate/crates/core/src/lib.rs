//! Solvers for finite two-player nonzero-sum stochastic games under the
//! risk-sensitive ergodic cost criterion.
//!
//! - [`model`]: game instances, stationary strategies, assumption diagnostics.
//! - [`transforms`]: exponentially twisted kernels and the entropy dual.
//! - [`bellman`]: span-contractive optimality operators and relative value iteration.
//! - [`spectral`]: Perron-Frobenius and finite-horizon oracles for fixed pairs.
//! - [`nash`]: best responses, epsilon-Nash certificates, dynamics and grid search.
//! - [`sim`]: trajectory sampling and Monte Carlo cost estimates.
//! - [`io`]: JSON instance, strategy and report formats.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bellman;
pub mod error;
pub mod io;
pub mod model;
pub mod nash;
pub mod numeric;
pub mod sim;
pub mod spectral;
pub mod transforms;

pub use error::{Assumption, Error, Result};
pub use model::{Dims, GameInstance, Player, StationaryStrategy};
