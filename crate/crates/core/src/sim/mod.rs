//! Fixed-step closed-loop simulation of the delayed plant and predictor.
//!
//! Explicit Euler only. Delays and the reset period must be whole multiples
//! of the step so delayed samples come straight out of ring buffers.
//! Signals before `t = 0` are zero.

mod delay_line;
mod residuals;
mod trace;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::linalg::{expm, Vector};
use crate::plant::{ModelError, Plant};
use crate::predictor::{
    control_output, controller_euler_step, correction_zeta, is_reset_instant, ControllerState,
    PredictorGains,
};

pub use delay_line::DelayLine;
pub use residuals::{residual_report, IntervalResiduals, ResidualReport};
pub use trace::{compute_derived_signals, format_f64, SimTrace, XI_IDENTITY_TOL};

/// Runs stop once the stacked state `(x, ψ, ε)` exceeds this norm.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Relative tolerance for `D/h` and `T/h` being integers.
pub const ALIGNMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimMode {
    /// Predictor with correction term and reset integrator.
    #[default]
    Modified,
    /// Classical Smith predictor: `ζ ≡ 0`, `ε ≡ 0`.
    Classical,
    /// `u ≡ 0`; the controller states still evolve.
    OpenLoop,
}

impl SimMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SimMode::Modified => "modified",
            SimMode::Classical => "classical",
            SimMode::OpenLoop => "open_loop",
        }
    }
}

impl fmt::Display for SimMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SimMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "modified" => Ok(SimMode::Modified),
            "classical" => Ok(SimMode::Classical),
            "open_loop" => Ok(SimMode::OpenLoop),
            other => Err(format!(
                "unknown mode {other:?} (expected modified, classical or open_loop)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub h: f64,
    pub t_end: f64,
    pub x0: Vector,
}

impl SimConfig {
    pub fn new(h: f64, t_end: f64, x0: Vector) -> Result<Self, ModelError> {
        if !h.is_finite() || h <= 0.0 {
            return Err(ModelError::InvalidParameter(format!("step h must be > 0, got {h}")));
        }
        if !t_end.is_finite() || t_end < 0.0 {
            return Err(ModelError::InvalidParameter(format!(
                "horizon t_end must be >= 0, got {t_end}"
            )));
        }
        Ok(Self { h, t_end, x0 })
    }

    pub fn with_step(&self, h: f64) -> Result<Self, ModelError> {
        Self::new(h, self.t_end, self.x0.clone())
    }

    pub fn with_horizon(&self, t_end: f64) -> Result<Self, ModelError> {
        Self::new(self.h, t_end, self.x0.clone())
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("state norm {norm:.3e} exceeded {DIVERGENCE_LIMIT:e} at t = {t}")]
    Divergence {
        t: f64,
        norm: f64,
        trace: Box<SimTrace>,
    },
}

/// Number of steps covering `duration`, requiring an integer multiple of
/// `h` within [`ALIGNMENT_TOL`].
pub fn aligned_steps(duration: f64, h: f64, what: &str) -> Result<usize, String> {
    let ratio = duration / h;
    let k = ratio.round();
    if (ratio - k).abs() > ALIGNMENT_TOL * ratio.abs().max(1.0) {
        return Err(format!(
            "{what} = {duration} is not a whole multiple of the step h = {h} (ratio {ratio})"
        ));
    }
    Ok(k as usize)
}

/// Simulates the plant under the chosen controller with explicit Euler.
///
/// Within each step: reset `ε` on the `mT` grid, read the delay lines,
/// form `ζ` and `u`, record, then advance `x`, `ψ`, `ε` from their pre-step
/// values. Samples enter the delay lines as they are read, which keeps
/// `D = 0` exact. A run that blows past [`DIVERGENCE_LIMIT`] returns
/// [`SimError::Divergence`] carrying everything recorded so far.
pub fn simulate_closed_loop(
    plant: &Plant,
    gains: &PredictorGains,
    config: &SimConfig,
    mode: SimMode,
) -> Result<SimTrace, SimError> {
    gains.check_against(plant)?;
    let n = plant.states();
    let m = plant.inputs();
    if config.x0.dim() != n {
        return Err(SimError::Config(format!(
            "x0 has dim {}, plant has {n} states",
            config.x0.dim()
        )));
    }
    let h = config.h;
    let delay_steps = aligned_steps(plant.delay(), h, "plant.D").map_err(SimError::Config)?;
    let period_steps = aligned_steps(gains.period(), h, "gains.T").map_err(SimError::Config)?;
    if period_steps == 0 {
        return Err(SimError::Config("gains.T must span at least one step".into()));
    }
    let steps = (config.t_end / h + ALIGNMENT_TOL).floor() as usize;

    let mut trace = SimTrace::empty(
        n,
        m,
        h,
        plant.delay(),
        gains.period(),
        delay_steps,
        period_steps,
        mode,
        steps + 1,
    );
    if config.t_end < plant.delay() + 2.0 * gains.period() {
        trace.warnings.push(format!(
            "t_end = {} is shorter than D + 2T = {}; recursion checks will have few samples",
            config.t_end,
            plant.delay() + 2.0 * gains.period()
        ));
    }

    let exp_ad = expm(plant.a(), plant.delay()).map_err(ModelError::from)?;
    let mut x_line = DelayLine::new(n, delay_steps);
    let mut psi_line = DelayLine::new(n, delay_steps);
    let mut eps_line = DelayLine::new(n, delay_steps);
    let mut u_line = DelayLine::new(m, delay_steps);

    let mut x = config.x0.clone();
    let mut ctrl = ControllerState::zeros(n);
    let zero_n = Vector::zeros(n);
    let zero_m = Vector::zeros(m);

    for k in 0..=steps {
        let t = k as f64 * h;
        if mode == SimMode::Modified && is_reset_instant(t, gains.period(), h) {
            ctrl.eps = zero_n.clone();
        }

        let x_del = x_line.push_and_read(&x)?;
        let psi_del = psi_line.push_and_read(&ctrl.psi)?;
        let eps_del = eps_line.push_and_read(&ctrl.eps)?;

        ctrl.zeta = match mode {
            SimMode::Classical => zero_n.clone(),
            _ => correction_zeta(&exp_ad, &x, &x_del, &psi_del, &eps_del, &ctrl.eps)?,
        };
        let u = match mode {
            SimMode::OpenLoop => zero_m.clone(),
            _ => control_output(gains.k(), &x, &ctrl.psi)?,
        };
        let u_del = u_line.push_and_read(&u)?;

        trace.push(&x, &u, &ctrl.psi, &ctrl.eps, &ctrl.zeta);
        if k == steps {
            break;
        }

        let x_rate = &plant.a().mul_vec(&x) + &plant.b().mul_vec(&u_del);
        let x_next = x.axpy(h, &x_rate);
        let next = controller_euler_step(plant, gains, &ctrl, &u, &u_del, &ctrl.zeta, h)?;

        let norm = x_next.concat(&next.psi).concat(&next.eps).norm();
        if !(norm <= DIVERGENCE_LIMIT) {
            return Err(SimError::Divergence {
                t: (k + 1) as f64 * h,
                norm,
                trace: Box::new(trace),
            });
        }
        x = x_next;
        ctrl = next;
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn plant(delay: f64) -> Plant {
        Plant::new(
            Matrix::from_rows(&[[0.0, 1.0], [0.1, 0.0]]).unwrap(),
            Matrix::from_rows(&[[0.0], [1.0]]).unwrap(),
            delay,
        )
        .unwrap()
    }

    fn gains(period: f64) -> PredictorGains {
        PredictorGains::new(
            Matrix::from_rows(&[[-20.0, -30.0]]).unwrap(),
            Matrix::from_rows(&[[2.0, 0.5], [3.0, 0.0]]).unwrap(),
            period,
        )
        .unwrap()
    }

    fn x0() -> Vector {
        Vector::new(vec![-1.0, 1.0]).unwrap()
    }

    #[test]
    fn alignment() {
        assert_eq!(aligned_steps(1.0, 1e-4, "D").unwrap(), 10000);
        assert_eq!(aligned_steps(0.3, 0.1, "D").unwrap(), 3);
        assert!(aligned_steps(0.25, 0.1, "T").is_err());
        assert_eq!(aligned_steps(0.0, 0.1, "D").unwrap(), 0);
    }

    #[test]
    fn misaligned_period_is_config_error() {
        let cfg = SimConfig::new(0.01, 1.0, x0()).unwrap();
        let err = simulate_closed_loop(&plant(0.1), &gains(0.505), &cfg, SimMode::Modified)
            .unwrap_err();
        assert!(matches!(err, SimError::Config(ref s) if s.contains("gains.T")), "{err}");
        let err = simulate_closed_loop(&plant(0.015), &gains(0.5), &cfg, SimMode::Modified)
            .unwrap_err();
        assert!(matches!(err, SimError::Config(ref s) if s.contains("plant.D")), "{err}");
    }

    #[test]
    fn zero_initial_state_stays_zero() {
        for mode in [SimMode::Modified, SimMode::Classical, SimMode::OpenLoop] {
            let cfg = SimConfig::new(0.01, 3.0, Vector::zeros(2)).unwrap();
            let tr = simulate_closed_loop(&plant(0.5), &gains(1.0), &cfg, mode).unwrap();
            assert_eq!(tr.len(), 301);
            assert!(tr.x.iter().chain(&tr.u).chain(&tr.psi).chain(&tr.eps).chain(&tr.zeta)
                .all(|&v| v == 0.0));
        }
    }

    #[test]
    fn timestamps_are_index_times_step() {
        let cfg = SimConfig::new(0.1, 1.0, x0()).unwrap();
        let tr = simulate_closed_loop(&plant(0.2), &gains(0.5), &cfg, SimMode::Modified).unwrap();
        assert_eq!(tr.len(), 11);
        assert_eq!(tr.t(7), 7.0 * 0.1);
        assert_eq!(tr.t_last(), 10.0 * 0.1);
    }

    #[test]
    fn eps_zero_on_reset_grid() {
        let cfg = SimConfig::new(0.01, 6.0, x0()).unwrap();
        let tr = simulate_closed_loop(&plant(0.3), &gains(1.5), &cfg, SimMode::Modified).unwrap();
        for k in (0..tr.len()).step_by(150) {
            assert!(tr.eps(k).iter().all(|&v| v == 0.0), "k = {k}");
        }
        assert!(tr.eps(75).iter().any(|&v| v != 0.0));
    }

    #[test]
    fn first_record_and_first_step_by_hand() {
        let h = 0.01;
        let cfg = SimConfig::new(h, 0.02, x0()).unwrap();
        let p = plant(1.0);
        let g = gains(5.0);
        let tr = simulate_closed_loop(&p, &g, &cfg, SimMode::Modified).unwrap();

        // t = 0: zero pre-history, zeta = e^{A} x0, u = K x0 = -10
        let r = 0.1f64.sqrt();
        let (c, s) = (r.cosh(), r.sinh() / r);
        let ea = [[c, s], [0.1 * s, c]];
        let zeta0 = [ea[0][0] * -1.0 + ea[0][1], ea[1][0] * -1.0 + ea[1][1]];
        assert!((tr.zeta(0)[0] - zeta0[0]).abs() < 1e-14);
        assert!((tr.zeta(0)[1] - zeta0[1]).abs() < 1e-14);
        assert_eq!(tr.u(0), &[-10.0]);

        // one Euler step: u(t - D) = 0, so x1 = x0 + h A x0
        assert_eq!(tr.x(1), &[-1.0 + h * 1.0, 1.0 + h * -0.1]);
        // psi1 = h (B u0 + L zeta0), eps1 = h L zeta0
        let lz = [2.0 * zeta0[0] + 0.5 * zeta0[1], 3.0 * zeta0[0]];
        assert!((tr.psi(1)[0] - h * lz[0]).abs() < 1e-15);
        assert!((tr.psi(1)[1] - h * (-10.0 + lz[1])).abs() < 1e-15);
        assert!((tr.eps(1)[0] - h * lz[0]).abs() < 1e-15);
        assert!((tr.eps(1)[1] - h * lz[1]).abs() < 1e-15);
    }

    #[test]
    fn deterministic() {
        let cfg = SimConfig::new(0.01, 5.0, x0()).unwrap();
        let a = simulate_closed_loop(&plant(0.5), &gains(1.0), &cfg, SimMode::Modified).unwrap();
        let b = simulate_closed_loop(&plant(0.5), &gains(1.0), &cfg, SimMode::Modified).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn classical_mode_diverges_with_partial_trace() {
        let cfg = SimConfig::new(0.01, 200.0, x0()).unwrap();
        let err = simulate_closed_loop(&plant(1.0), &gains(5.0), &cfg, SimMode::Classical)
            .unwrap_err();
        match err {
            SimError::Divergence { t, norm, trace } => {
                assert!(norm > DIVERGENCE_LIMIT);
                assert!(t < 200.0);
                assert_eq!(trace.len(), (t / 0.01).round() as usize);
                assert!(trace.eps.iter().chain(&trace.zeta).all(|&v| v == 0.0));
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn open_loop_has_zero_input() {
        let cfg = SimConfig::new(0.01, 2.0, x0()).unwrap();
        let tr = simulate_closed_loop(&plant(0.5), &gains(1.0), &cfg, SimMode::OpenLoop).unwrap();
        assert!(tr.u.iter().all(|&v| v == 0.0));
        // plain Euler on x' = A x
        let mut x = [-1.0, 1.0];
        for _ in 0..200 {
            x = [x[0] + 0.01 * x[1], x[1] + 0.01 * 0.1 * x[0]];
        }
        assert_eq!(tr.x(200), &x);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("classical".parse::<SimMode>().unwrap(), SimMode::Classical);
        assert!("euler".parse::<SimMode>().is_err());
        assert_eq!(SimMode::OpenLoop.to_string(), "open_loop");
    }

    #[test]
    fn dimension_errors() {
        let cfg = SimConfig::new(0.01, 1.0, Vector::zeros(3)).unwrap();
        assert!(matches!(
            simulate_closed_loop(&plant(0.1), &gains(0.5), &cfg, SimMode::Modified),
            Err(SimError::Config(_))
        ));
        assert!(SimConfig::new(0.0, 1.0, x0()).is_err());
        assert!(SimConfig::new(0.1, -1.0, x0()).is_err());
    }
}
