use crate::linalg::{expm, norm2, operator_norm};
use crate::plant::{ModelError, Plant};
use crate::predictor::PredictorGains;

use super::SimTrace;

/// Residuals on one continuity interval `[start, end)` of `ζ` and `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalResiduals {
    pub start_index: usize,
    pub end_index: usize,
    pub t_start: f64,
    pub t_end: f64,
    /// max ‖central-difference dζ/dt − (A − L) ζ‖
    pub zeta_rate: f64,
    /// max ‖central-difference dz/dt − A z‖
    pub z_rate: f64,
    /// max ‖z(t) − e^{A (t − t_start)} z(t_start)‖
    pub flow_abs: f64,
    /// `flow_abs` divided by the largest ‖z‖ on the interval
    pub flow_rel: f64,
    pub z_max: f64,
    pub zeta_max: f64,
    /// Interval was long enough for the finite-difference checks.
    pub has_rates: bool,
}

/// Per-interval and global maxima of the derivative and flow-map residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub h: f64,
    pub intervals: Vec<IntervalResiduals>,
    pub max_zeta_rate: f64,
    pub max_z_rate: f64,
    pub max_flow_abs: f64,
    pub max_flow_rel: f64,
    /// ‖(A − L)²‖₂ · max ‖ζ‖, the scale of the leading O(h) term
    pub zeta_rate_scale: f64,
    /// ‖A²‖₂ · max ‖z‖
    pub z_rate_scale: f64,
}

/// Samples dropped on each side of a jump before differencing.
const JUMP_GUARD: usize = 2;

/// Indices where `ζ` or `z` may jump: `mT` and `mT + D`.
pub(crate) fn jump_indices(len: usize, period_steps: usize, delay_steps: usize) -> Vec<usize> {
    let mut out = vec![0];
    let mut base = 0;
    while base < len {
        out.push(base);
        if base + delay_steps < len {
            out.push(base + delay_steps);
        }
        base += period_steps;
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Checks along a simulated trajectory that between jumps
/// `ζ̇ = (A − L) ζ`, `ż = A z`, and `z` follows its exact flow from the
/// start of each interval.
///
/// Derivatives use central differences and skip the two samples next to
/// each jump, so the first two residuals are O(h) under Euler.
pub fn residual_report(
    trace: &SimTrace,
    plant: &Plant,
    gains: &PredictorGains,
) -> Result<ResidualReport, ModelError> {
    gains.check_against(plant)?;
    if !trace.has_derived() {
        return Err(ModelError::InvalidParameter(
            "trace has no derived signals; run compute_derived_signals first".into(),
        ));
    }
    let n = trace.states();
    if plant.states() != n {
        return Err(ModelError::Dimension(format!(
            "plant has {} states, trace has {n}",
            plant.states()
        )));
    }
    let h = trace.step();
    let a = plant.a();
    let hm = gains.correction_matrix(plant);
    let step_flow = expm(a, h)?;

    let cuts = jump_indices(trace.len(), trace.period_steps(), trace.delay_steps());
    let mut intervals = Vec::new();
    let mut zeta_max_all = 0.0_f64;
    let mut z_max_all = 0.0_f64;

    for (i, &start) in cuts.iter().enumerate() {
        let end = cuts.get(i + 1).copied().unwrap_or(trace.len());
        if end <= start {
            continue;
        }
        let is_last = i + 1 == cuts.len();
        if !is_last && end - start < 3 {
            return Err(ModelError::InvalidParameter(format!(
                "continuity interval [{}, {}) has only {} samples; need at least 3",
                trace.t(start),
                trace.t(end),
                end - start
            )));
        }

        let mut zeta_rate = 0.0_f64;
        let mut z_rate = 0.0_f64;
        let lo = start + JUMP_GUARD;
        let hi = end.saturating_sub(JUMP_GUARD + 1);
        let has_rates = lo <= hi && hi >= 1;
        if has_rates {
            for k in lo..=hi {
                let dzeta = sub(trace.zeta(k + 1), trace.zeta(k - 1));
                let model = hm.mul_vec(&SimTrace::vec_of(trace.zeta(k)));
                let r: Vec<f64> = dzeta
                    .iter()
                    .zip(model.as_slice())
                    .map(|(d, m)| d / (2.0 * h) - m)
                    .collect();
                zeta_rate = zeta_rate.max(norm2(&r));

                let dz = sub(trace.z(k + 1), trace.z(k - 1));
                let model = a.mul_vec(&SimTrace::vec_of(trace.z(k)));
                let r: Vec<f64> = dz
                    .iter()
                    .zip(model.as_slice())
                    .map(|(d, m)| d / (2.0 * h) - m)
                    .collect();
                z_rate = z_rate.max(norm2(&r));
            }
        }

        let mut flow = SimTrace::vec_of(trace.z(start));
        let mut flow_abs = 0.0_f64;
        let mut z_max = 0.0_f64;
        let mut zeta_max = 0.0_f64;
        for k in start..end {
            let zk = trace.z(k);
            flow_abs = flow_abs.max(norm2(&sub(zk, flow.as_slice())));
            z_max = z_max.max(norm2(zk));
            zeta_max = zeta_max.max(norm2(trace.zeta(k)));
            flow = step_flow.mul_vec(&flow);
        }
        zeta_max_all = zeta_max_all.max(zeta_max);
        z_max_all = z_max_all.max(z_max);

        intervals.push(IntervalResiduals {
            start_index: start,
            end_index: end,
            t_start: trace.t(start),
            t_end: trace.t(end),
            zeta_rate,
            z_rate,
            flow_abs,
            flow_rel: if z_max > 0.0 { flow_abs / z_max } else { 0.0 },
            z_max,
            zeta_max,
            has_rates,
        });
    }

    let fold = |f: fn(&IntervalResiduals) -> f64| intervals.iter().map(f).fold(0.0, f64::max);
    let hm2 = &hm * &hm;
    let a2 = a * a;
    Ok(ResidualReport {
        h,
        max_zeta_rate: fold(|r| r.zeta_rate),
        max_z_rate: fold(|r| r.z_rate),
        max_flow_abs: fold(|r| r.flow_abs),
        max_flow_rel: fold(|r| r.flow_rel),
        zeta_rate_scale: operator_norm(&hm2) * zeta_max_all,
        z_rate_scale: operator_norm(&a2) * z_max_all,
        intervals,
    })
}

impl ResidualReport {
    /// Both derivative residuals lie below `h · scale` (the leading Euler
    /// term is `(h/2)·‖M² v‖`) plus a rounding allowance, and every
    /// interval's flow error is below `flow_rel_tol`.
    pub fn passes(&self, flow_rel_tol: f64, rounding_floor: f64) -> bool {
        self.max_zeta_rate <= self.h * self.zeta_rate_scale + rounding_floor
            && self.max_z_rate <= self.h * self.z_rate_scale + rounding_floor
            && self.max_flow_rel <= flow_rel_tol
    }
}
