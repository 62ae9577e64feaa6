//! Sampled-sequence analysis of the reset-corrected predictor.
//!
//! Sampling `ξ(t) = x(t) − x(t − D) − ψ(t − D)` once per reset period at
//! `t = mT + D` gives a second-order linear recurrence
//!
//! ```text
//! ξ_{m+1} = −G1 ξ_m − G2 ξ_{m−1}
//! G1 = −e^{H(T−D)} e^{AD}
//! G2 =  e^{HT} (e^{−HD} e^{AD} − I) e^{AT},     H = A − L
//! ```
//!
//! whose block companion matrix decides stability exactly (spectral radius
//! below one) and admits the sufficient Lyapunov certificate with
//! `P = diag(I, 2I)`. `H` and `A` do not commute: every product here keeps
//! the order written above.

mod discrete_map;
mod integral;
mod sequence;
mod sweep;

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::plant::ModelError;

pub use discrete_map::{
    discrete_lyapunov_certificate, discrete_map, DiscreteMap, LyapunovCertificate,
};
pub use integral::{integral_identity_residual, DEFAULT_QUAD_STEPS};
pub use sequence::{
    lyapunov_decrease_check, xi_recursion_check, z_envelope_check, DecreaseReport,
    EnvelopeReport, XiSequence,
};
pub use sweep::{find_min_stable_period, Criterion, SweepResult, SweepRow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("horizon too short: need t_end >= {required}, trace ends at {actual}")]
    Horizon { required: f64, actual: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
