//! Simulation of infinitely divisible random fields `X(t) = ∫ f_t(x) Λ(dx)`.
//!
//! The engine discretizes the kernel `f_t` either by a step function on a
//! regular grid or by a truncated Haar wavelet series, simulates the random
//! measure `Λ` on the resulting cells, and evaluates closed-form error
//! bounds for both schemes. A harness runs realization batches, validates
//! the Gaussian special case against its covariance function, and reports
//! timing and summand counters.

pub mod error;
pub mod error_metrics;
pub mod field;
pub mod geom;
pub mod haar;
pub mod harness;
pub mod kernels;
pub mod measures;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod step;

pub use error::{Error, Result};
