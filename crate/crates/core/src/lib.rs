//! Simulation and stability analysis for a Smith predictor with a
//! reset-corrected integrator, aimed at unstable linear plants with a
//! constant input delay.
//!
//! - [`linalg`]: dense matrices, matrix exponential, Lyapunov-based Hurwitz
//!   test, spectral radius and abscissa, operator norm.
//! - [`predictor`]: the control law and gain validation.
//! - [`sim`]: fixed-step Euler closed-loop simulation with delay lines,
//!   derived signals and residual checks.
//! - [`stability`]: the sampled recurrence, its companion matrix, the
//!   Lyapunov certificate and sweeps over the reset period.

pub mod linalg;
pub mod plant;
pub mod predictor;
pub mod sim;
pub mod stability;

pub use linalg::{Matrix, Vector};
pub use plant::{ModelError, Plant};
pub use predictor::PredictorGains;
pub use sim::{SimConfig, SimMode, SimTrace};
