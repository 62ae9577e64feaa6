//! Reset-corrected Smith predictor.
//!
//! The controller keeps the classical predictor state `ψ`
//!
//! ```text
//! u(t)  = K x(t) + K ψ(t)
//! ψ̇(t) = A ψ(t) + B u(t) − B u(t − D) + L ζ(t)
//! ```
//!
//! and adds a correction `ζ` built from delayed signals together with an
//! integrator `ε` that is forced to zero every `T` seconds:
//!
//! ```text
//! ζ(t)  = e^{AD} [x(t) − x(t − D) − ψ(t − D) + ε(t − D)] − ε(t)
//! ε̇(t) = A ε(t) + L ζ(t),   ε(mT) = 0
//! ```
//!
//! `ζ` is evaluated algebraically at every step. Between the jump instants
//! `mT` and `mT + D` it obeys `ζ̇ = (A − L) ζ`, which the simulator checks
//! rather than integrates.

use crate::linalg::{hurwitz_certificate, spectral_abscissa, Matrix, Vector};
use crate::plant::{ModelError, Plant};

/// Controller parameters: feedback gain `K` (m×n), correction gain `L`
/// (n×n) and reset period `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorGains {
    k: Matrix,
    l: Matrix,
    period: f64,
}

impl PredictorGains {
    pub fn new(k: Matrix, l: Matrix, period: f64) -> Result<Self, ModelError> {
        if !l.is_square() {
            return Err(ModelError::Dimension(format!(
                "L must be square, got {}x{}",
                l.rows(),
                l.cols()
            )));
        }
        if k.cols() != l.rows() {
            return Err(ModelError::Dimension(format!(
                "K has {} columns but L is {}x{}",
                k.cols(),
                l.rows(),
                l.cols()
            )));
        }
        if !period.is_finite() || period <= 0.0 {
            return Err(ModelError::InvalidParameter(format!(
                "reset period must be finite and > 0, got {period}"
            )));
        }
        Ok(Self { k, l, period })
    }

    pub fn k(&self) -> &Matrix {
        &self.k
    }

    pub fn l(&self) -> &Matrix {
        &self.l
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn with_period(&self, period: f64) -> Result<Self, ModelError> {
        Self::new(self.k.clone(), self.l.clone(), period)
    }

    /// Checks that the gains fit the plant: K is m×n, L is n×n.
    pub fn check_against(&self, plant: &Plant) -> Result<(), ModelError> {
        let (n, m) = (plant.states(), plant.inputs());
        if self.k.rows() != m || self.k.cols() != n {
            return Err(ModelError::Dimension(format!(
                "K must be {m}x{n} for this plant, got {}x{}",
                self.k.rows(),
                self.k.cols()
            )));
        }
        if self.l.rows() != n {
            return Err(ModelError::Dimension(format!(
                "L must be {n}x{n} for this plant, got {}x{}",
                self.l.rows(),
                self.l.cols()
            )));
        }
        Ok(())
    }

    /// `F = A + BK`
    pub fn closed_loop_matrix(&self, plant: &Plant) -> Matrix {
        plant.a() + &(plant.b() * &self.k)
    }

    /// `H = A − L`
    pub fn correction_matrix(&self, plant: &Plant) -> Matrix {
        plant.a() - &self.l
    }
}

/// Integrated controller state plus the most recent correction output.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub psi: Vector,
    pub eps: Vector,
    pub zeta: Vector,
}

impl ControllerState {
    pub fn zeros(n: usize) -> Self {
        Self {
            psi: Vector::zeros(n),
            eps: Vector::zeros(n),
            zeta: Vector::zeros(n),
        }
    }
}

fn same_dim(what: &str, v: &Vector, n: usize) -> Result<(), ModelError> {
    if v.dim() != n {
        return Err(ModelError::Dimension(format!(
            "{what} has dim {}, expected {n}",
            v.dim()
        )));
    }
    Ok(())
}

/// `u = K (x + ψ)`
pub fn control_output(k: &Matrix, x: &Vector, psi: &Vector) -> Result<Vector, ModelError> {
    same_dim("x", x, k.cols())?;
    same_dim("psi", psi, k.cols())?;
    Ok(k.mul_vec(&(x + psi)))
}

/// `ζ = e^{AD} (x_now − x_del − ψ_del + ε_del) − ε_now`, with `exp_ad`
/// computed once per run.
pub fn correction_zeta(
    exp_ad: &Matrix,
    x_now: &Vector,
    x_del: &Vector,
    psi_del: &Vector,
    eps_del: &Vector,
    eps_now: &Vector,
) -> Result<Vector, ModelError> {
    let n = exp_ad.rows();
    if !exp_ad.is_square() {
        return Err(ModelError::Dimension("e^{AD} must be square".into()));
    }
    for (what, v) in [
        ("x_now", x_now),
        ("x_del", x_del),
        ("psi_del", psi_del),
        ("eps_del", eps_del),
        ("eps_now", eps_now),
    ] {
        same_dim(what, v, n)?;
    }
    let bracket = &(&(x_now - x_del) - psi_del) + eps_del;
    Ok(&exp_ad.mul_vec(&bracket) - eps_now)
}

/// One explicit Euler step of `ψ` and `ε`, both from pre-step values.
/// The returned state carries `zeta` unchanged; the caller recomputes it at
/// the next instant.
pub fn controller_euler_step(
    plant: &Plant,
    gains: &PredictorGains,
    state: &ControllerState,
    u_now: &Vector,
    u_del: &Vector,
    zeta: &Vector,
    h: f64,
) -> Result<ControllerState, ModelError> {
    let n = plant.states();
    same_dim("psi", &state.psi, n)?;
    same_dim("eps", &state.eps, n)?;
    same_dim("zeta", zeta, n)?;
    same_dim("u_now", u_now, plant.inputs())?;
    same_dim("u_del", u_del, plant.inputs())?;
    if !(h > 0.0) {
        return Err(ModelError::InvalidParameter(format!("step must be > 0, got {h}")));
    }

    let a = plant.a();
    let b = plant.b();
    let l_zeta = gains.l().mul_vec(zeta);

    let psi_rate = &(&a.mul_vec(&state.psi) + &b.mul_vec(&(u_now - u_del))) + &l_zeta;
    let eps_rate = &a.mul_vec(&state.eps) + &l_zeta;

    Ok(ControllerState {
        psi: state.psi.axpy(h, &psi_rate),
        eps: state.eps.axpy(h, &eps_rate),
        zeta: state.zeta.clone(),
    })
}

/// Zeroes `ε` when `t` lies within half a step of a multiple of `period`.
/// Returns the (possibly) reset state and whether the reset fired.
pub fn apply_reset(
    state: &ControllerState,
    t: f64,
    period: f64,
    h: f64,
) -> (ControllerState, bool) {
    if is_reset_instant(t, period, h) {
        let mut s = state.clone();
        s.eps = Vector::zeros(state.eps.dim());
        (s, true)
    } else {
        (state.clone(), false)
    }
}

pub(crate) fn is_reset_instant(t: f64, period: f64, h: f64) -> bool {
    let m = (t / period).round();
    (t - m * period).abs() < 0.5 * h
}

/// One entry of a [`ValidationReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct GainCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of [`validate_gains`]. Failures are entries, not errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub closed_loop_hurwitz: bool,
    pub correction_hurwitz: bool,
    pub abscissa_plant: f64,
    pub abscissa_correction: f64,
    pub abscissa_sum: f64,
    pub period: f64,
    pub delay: f64,
    pub checks: Vec<GainCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Checks the conditions the stability argument relies on: `A + BK` and
/// `A − L` Hurwitz, `abscissa(A − L) + abscissa(A) < 0`, and `T > D`.
pub fn validate_gains(plant: &Plant, gains: &PredictorGains) -> Result<ValidationReport, ModelError> {
    gains.check_against(plant)?;
    let f = gains.closed_loop_matrix(plant);
    let h = gains.correction_matrix(plant);

    let f_cert = hurwitz_certificate(&f)?;
    let h_cert = hurwitz_certificate(&h)?;
    let abscissa_plant = spectral_abscissa(plant.a())?;
    let abscissa_correction = spectral_abscissa(&h)?;
    let abscissa_sum = abscissa_plant + abscissa_correction;
    let period_ok = gains.period() > plant.delay();

    let marginal = |m: bool| if m { " (marginal)" } else { "" };
    let checks = vec![
        GainCheck {
            name: "closed_loop_hurwitz",
            passed: f_cert.is_hurwitz,
            detail: format!("A+BK Hurwitz: {}{}", f_cert.is_hurwitz, marginal(f_cert.marginal)),
        },
        GainCheck {
            name: "correction_hurwitz",
            passed: h_cert.is_hurwitz,
            detail: format!("A-L Hurwitz: {}{}", h_cert.is_hurwitz, marginal(h_cert.marginal)),
        },
        GainCheck {
            name: "abscissa_sum_negative",
            passed: abscissa_sum < 0.0,
            detail: format!(
                "abscissa(A-L) + abscissa(A) = {abscissa_correction:.6} + {abscissa_plant:.6} = {abscissa_sum:.6}"
            ),
        },
        GainCheck {
            name: "period_exceeds_delay",
            passed: period_ok,
            detail: format!("T = {} vs D = {}", gains.period(), plant.delay()),
        },
    ];

    Ok(ValidationReport {
        closed_loop_hurwitz: f_cert.is_hurwitz,
        correction_hurwitz: h_cert.is_hurwitz,
        abscissa_plant,
        abscissa_correction,
        abscissa_sum,
        period: gains.period(),
        delay: plant.delay(),
        checks,
    })
}
