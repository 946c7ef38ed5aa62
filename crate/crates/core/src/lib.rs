//! Quantum circuit Born machine training with assignment-matrix
//! measurement error mitigation, on a built-in noisy simulator.
//!
//! Module map:
//!
//! - [`dist`]: distributions, target generators, KL metric, sub-sampling
//! - [`simulator`]: statevector and density-matrix simulation, device presets
//! - [`ansatz`]: the bi-layer circuit, calibration circuits, routing
//! - [`mitigation`]: assignment error matrices and mitigation
//! - [`training`]: MMD loss, parameter-shift gradients, Adam, training loop
//! - [`harness`]: experiment configs, run directories, evaluation and reports
//!
//! Runnable walkthroughs live in `examples/`; the `qcbm` binary wraps
//! [`harness::cli`].

pub mod ansatz;
pub mod dist;
pub mod error;
pub mod execute;
pub mod harness;
pub mod mitigation;
pub mod rng;
pub mod simulator;
pub mod training;

pub use error::{Error, Result};
