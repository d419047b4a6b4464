//! Tail probabilities `P(X_1 + … + X_n > x)` for sums of light-tailed summands whose
//! tails behave like `e^{-c x^β}` with `β > 1`.
//!
//! The crate offers four independent routes to the same quantity:
//!
//! * closed-form and numerically solved asymptotics ([`asymptotics`]),
//! * rigorous incomplete-gamma sandwich bounds ([`bounds`]),
//! * saddlepoint-type approximations for compound Poisson sums ([`compound`]),
//! * variance-reduced Monte Carlo estimators ([`estimators`]) built on exponential
//!   tilting ([`tilting`]),
//!
//! and a quadrature oracle ([`oracle`]) that cross-validates them for small `n`.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod asymptotics;
pub mod bounds;
pub mod compound;
pub mod distributions;
mod error;
pub mod estimators;
pub mod oracle;
pub mod quad;
pub mod solve;
pub mod special;
pub mod tilting;

pub use distributions::{BkrModel, GammaWeibullModel, ModelSpec, TailModel, WeibullLikeModel};
pub use error::{Error, Result};
pub use estimators::{EstimateResult, Method, RunConfig};
pub use quad::QuadratureSpec;
