use crate::linalg::{expm, norm2, operator_norm, Matrix, Vector};
use crate::plant::Plant;
use crate::sim::SimTrace;

use super::{AnalysisError, DiscreteMap, LyapunovCertificate};

/// Samples `ξ_m = ξ(mT + D)` taken from a simulated trace, plus the
/// residuals of the recurrence `ξ_{m+1} + G1 ξ_m + G2 ξ_{m−1} = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct XiSequence {
    /// Index `m` of `samples[0]`.
    pub first_index: usize,
    pub samples: Vec<Vector>,
    pub times: Vec<f64>,
    /// `‖e_m‖` for `m = first_index + 1 ..`
    pub abs_residuals: Vec<f64>,
    /// `‖e_m‖ / max_k ‖ξ_k‖`
    pub rel_residuals: Vec<f64>,
    pub max_rel_residual: f64,
}

impl XiSequence {
    /// `χ(m) = (ξ_{m−1}, ξ_m)` for every `m` with both samples present.
    pub fn chi(&self) -> Vec<Vector> {
        self.samples.windows(2).map(|w| w[0].concat(&w[1])).collect()
    }

    /// Least-squares slope of `ln ‖χ(m)‖` against the sample time of `ξ_m`,
    /// in 1/s. `None` with fewer than two nonzero `χ`.
    pub fn chi_log_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .chi()
            .iter()
            .zip(self.times.iter().skip(1))
            .filter(|(c, _)| c.norm() > 0.0)
            .map(|(c, &t)| (t, c.norm().ln()))
            .collect();
        least_squares_slope(&pts)
    }
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn check_trace_matches(trace: &SimTrace, delay: f64, period: f64) -> Result<(), AnalysisError> {
    let h = trace.step();
    if (trace.delay() - delay).abs() > 0.5 * h || (trace.period() - period).abs() > 0.5 * h {
        return Err(AnalysisError::Domain(format!(
            "trace was run with D = {}, T = {}; map has D = {delay}, T = {period}",
            trace.delay(),
            trace.period()
        )));
    }
    if !trace.has_derived() {
        return Err(AnalysisError::Domain(
            "trace has no derived signals; run compute_derived_signals first".into(),
        ));
    }
    Ok(())
}

/// Extracts `ξ_m` at `t = mT + D` and evaluates the recurrence residuals.
/// Needs a trace reaching at least `D + 3T`.
pub fn xi_recursion_check(trace: &SimTrace, map: &DiscreteMap) -> Result<XiSequence, AnalysisError> {
    check_trace_matches(trace, map.delay, map.period)?;
    let required = map.delay + 3.0 * map.period;
    if trace.t_last() < required - 0.5 * trace.step() {
        return Err(AnalysisError::Horizon {
            required,
            actual: trace.t_last(),
        });
    }
    let (d, tp) = (trace.delay_steps(), trace.period_steps());
    let mut samples = Vec::new();
    let mut times = Vec::new();
    let mut k = d;
    while k < trace.len() {
        samples.push(SimTrace::vec_of(trace.xi(k)));
        times.push(trace.t(k));
        k += tp;
    }

    let scale = samples.iter().map(Vector::norm).fold(0.0, f64::max);
    let mut abs_residuals = Vec::new();
    for w in samples.windows(3) {
        let e = &(&w[2] + &map.g1.mul_vec(&w[1])) + &map.g2.mul_vec(&w[0]);
        abs_residuals.push(e.norm());
    }
    let rel_residuals: Vec<f64> = abs_residuals
        .iter()
        .map(|&e| if scale > 0.0 { e / scale } else { 0.0 })
        .collect();
    let max_rel_residual = rel_residuals.iter().copied().fold(0.0, f64::max);

    Ok(XiSequence {
        first_index: 0,
        samples,
        times,
        abs_residuals,
        rel_residuals,
        max_rel_residual,
    })
}

/// Geometric decrease of `V(m) = χ(m)ᵀ P χ(m)` along a sampled sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct DecreaseReport {
    /// False when the certificate is not valid (`α ≥ 1`); nothing is checked.
    pub applicable: bool,
    pub values: Vec<f64>,
    pub beta: f64,
    pub tol_abs: f64,
    /// max over m of `V(m+1) / V(m)` (0 if undefined)
    pub worst_ratio: f64,
    pub passes: bool,
    pub message: String,
}

/// Absolute slack on each decrease step, relative to the first `V`.
pub const DECREASE_TOL: f64 = 1e-9;

pub fn lyapunov_decrease_check(xi: &XiSequence, cert: &LyapunovCertificate) -> DecreaseReport {
    if !cert.valid {
        return DecreaseReport {
            applicable: false,
            values: Vec::new(),
            beta: cert.beta,
            tol_abs: 0.0,
            worst_ratio: 0.0,
            passes: false,
            message: format!("condition not applicable (alpha = {} >= 1)", cert.alpha),
        };
    }
    let values: Vec<f64> = xi
        .chi()
        .iter()
        .map(|c| c.dot(&cert.p.mul_vec(c)))
        .collect();
    let tol_abs = DECREASE_TOL * values.first().copied().unwrap_or(0.0);
    let mut passes = true;
    let mut worst_ratio = 0.0_f64;
    for w in values.windows(2) {
        if w[1] > cert.beta * w[0] + tol_abs {
            passes = false;
        }
        if w[0] > 0.0 {
            worst_ratio = worst_ratio.max(w[1] / w[0]);
        }
    }
    let message = if passes {
        format!("V(m+1) <= beta V(m) for all {} steps", values.len().saturating_sub(1))
    } else {
        format!("decrease violated; worst V(m+1)/V(m) = {worst_ratio} vs beta = {}", cert.beta)
    };
    DecreaseReport {
        applicable: true,
        values,
        beta: cert.beta,
        tol_abs,
        worst_ratio,
        passes,
        message,
    }
}

/// Bound `‖z(t)‖ ≤ max_{0≤s≤T} ‖e^{As}‖ · ‖z(mT + D)‖` on every interval.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub envelope: f64,
    pub intervals: usize,
    /// max of `‖z(t)‖ / (E ‖z(mT + D)‖)` where the denominator is nonzero
    pub worst_ratio: f64,
    pub tol_abs: f64,
    pub passes: bool,
}

pub const ENVELOPE_GRID: usize = 1000;
const ENVELOPE_REL_TOL: f64 = 1e-6;

/// `max ‖e^{As}‖₂` over `ENVELOPE_GRID + 1` evenly spaced `s` in `[0, T]`.
pub fn flow_envelope(a: &Matrix, period: f64) -> Result<f64, AnalysisError> {
    let mut best = 0.0_f64;
    for i in 0..=ENVELOPE_GRID {
        let s = period * i as f64 / ENVELOPE_GRID as f64;
        best = best.max(operator_norm(&expm(a, s)?));
    }
    Ok(best)
}

pub fn z_envelope_check(
    trace: &SimTrace,
    plant: &Plant,
    period: f64,
) -> Result<EnvelopeReport, AnalysisError> {
    check_trace_matches(trace, plant.delay(), period)?;
    let envelope = flow_envelope(plant.a(), period)?;
    let (d, tp) = (trace.delay_steps(), trace.period_steps());

    let z_max = (0..trace.len()).map(|k| norm2(trace.z(k))).fold(0.0, f64::max);
    let tol_abs = 1e-12 * z_max;
    let mut worst_ratio = 0.0_f64;
    let mut passes = true;
    let mut intervals = 0;
    let mut start = d;
    while start < trace.len() {
        intervals += 1;
        let anchor = norm2(trace.z(start));
        let bound = envelope * anchor * (1.0 + ENVELOPE_REL_TOL) + tol_abs;
        for k in start..(start + tp).min(trace.len()) {
            let zk = norm2(trace.z(k));
            if zk > bound {
                passes = false;
            }
            if anchor > 0.0 {
                worst_ratio = worst_ratio.max(zk / (envelope * anchor));
            }
        }
        start += tp;
    }
    Ok(EnvelopeReport {
        envelope,
        intervals,
        worst_ratio,
        tol_abs,
        passes,
    })
}
