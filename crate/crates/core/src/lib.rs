//! Bayesian inference for sample-selection models.
//!
//! The outcome equation `y* = x'beta + eps` is only observed when the
//! selection equation `u* = w'gamma + eta > 0` fires. Joint error laws:
//! bivariate normal or bivariate t with unknown degrees of freedom, each
//! with a continuous or binary outcome, giving four samplers. All of them
//! are Gibbs chains over augmented latent data; the t variants add a
//! scale-mixture weight per record and a Metropolized independence step
//! for the degrees of freedom.

pub mod diagnostics;
pub mod distributions;
pub mod error;
pub mod gibbs;
pub mod model;
pub mod nu;
pub mod simgen;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
