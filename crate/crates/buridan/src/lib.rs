//! Simulation and parameter estimation for stochastically switching
//! piecewise-deterministic dynamics (the Buridan's-ass system).
//!
//! A particle is attracted toward one of several fixed targets; a hidden
//! Markov chain (or a bank of competing Poisson clocks) switches which
//! target it currently pursues. The crate simulates the resulting
//! trajectories, computes the closed-form feature statistics of the line
//! model, and estimates the hidden switching parameters from position
//! observations — with a denoising suite so estimation survives measurement
//! noise.

pub mod denoise;
pub mod error;
pub mod estimators;
pub mod io;
pub mod markov;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
