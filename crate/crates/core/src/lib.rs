//! Exact analysis and Monte Carlo simulation of heat-bath Glauber dynamics for
//! the mean-field (Curie-Weiss) Ising model.
//!
//! The exact modules are generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`); the aliases below fix `f64`, which is what every
//! tolerance in the test suites is stated for.

pub mod chain;
pub mod electrical;
pub mod error;
pub mod model;
pub mod quad;
pub mod real;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
pub use real::Real;

pub type ModelParams64 = model::ModelParams<f64>;
pub type MagChain64 = chain::MagChain<f64>;
pub type ProbVector64 = chain::ProbVector<f64>;
pub type TvSeries64 = chain::TvSeries<f64>;
pub type SpectralReport64 = spectral::SpectralReport<f64>;
pub type ElectricalNetwork64 = electrical::ElectricalNetwork<f64>;
pub type HittingReport64 = electrical::HittingReport<f64>;
