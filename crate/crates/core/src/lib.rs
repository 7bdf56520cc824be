//! Simulation and extreme-value diagnostics for mean-field particle systems
//! whose drift and volatility depend on the ensemble through empirical
//! averages.
//!
//! The crate provides the model abstraction ([`models`]), an Euler–Maruyama
//! particle engine ([`engine`]), the limit law and its time change
//! ([`limitlaw`]), Gumbel normalization of ensemble maxima ([`extremes`]) and
//! replicated Monte Carlo experiments with uniformity reports
//! ([`diagnostics`]).

pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod extremes;
pub mod limitlaw;
pub mod models;
pub mod quadrature;
pub mod rng;
mod sum;

pub use engine::{simulate, ParticleEnsemble, SimulationConfig, SimulationOutput, Trajectory};
pub use error::{Error, Result};
pub use extremes::{NormalizerSource, NormalizingConstants};
pub use limitlaw::{solve_limit_law, LimitLawPath};
pub use models::{BuiltinModel, ClassTag, Coefficients, ModelClass, ModelSpec};
