//! Seasonal FIEGARCH volatility models.
//!
//! The log-variance of `X_t = sigma_t Z_t` follows
//!
//! ```text
//! ln sigma_t^2 = omega + alpha(B)/beta(B) (1 - B^s)^{-d} g(Z_{t-1}),
//! g(Z) = theta Z + gamma (|Z| - E|Z|).
//! ```
//!
//! The crate covers coefficient expansions ([`coeffs`]), parameter containers
//! ([`model`]), innovation laws ([`innovations`]), simulation ([`simulate`]),
//! closed-form second-order theory ([`acov_spectral`]), quasi-maximum-likelihood
//! fitting ([`estimate`]), h-step forecasting ([`forecast`]), forecast evaluation
//! ([`evaluate`]) and data preparation ([`data`]).

// Negated comparisons are used as NaN-rejecting guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acov_spectral;
pub mod coeffs;
pub mod data;
pub mod error;
pub mod estimate;
pub mod evaluate;
pub mod forecast;
pub mod innovations;
pub mod model;
pub mod numeric;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use model::{ArmaSpec, InnovationDist, ModelFile, SfiegarchSpec};
