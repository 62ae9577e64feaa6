use crate::linalg::{expm, operator_norm, spectral_radius, Matrix};
use crate::plant::Plant;
use crate::predictor::PredictorGains;

use super::AnalysisError;

/// Recurrence coefficients and block companion matrix for one `(D, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMap {
    pub g1: Matrix,
    pub g2: Matrix,
    /// `[[0, I], [−G2, −G1]]`
    pub companion: Matrix,
    pub rho: f64,
    pub period: f64,
    pub delay: f64,
}

impl DiscreteMap {
    pub fn states(&self) -> usize {
        self.g1.rows()
    }

    pub fn spectrally_stable(&self) -> bool {
        self.rho < 1.0
    }
}

/// Builds `G1`, `G2`, the companion matrix and its spectral radius.
/// Requires `T > D`.
pub fn discrete_map(plant: &Plant, gains: &PredictorGains) -> Result<DiscreteMap, AnalysisError> {
    gains.check_against(plant)?;
    let (d, t) = (plant.delay(), gains.period());
    if t <= d {
        return Err(AnalysisError::Domain(format!(
            "reset period T = {t} must exceed the delay D = {d} (T0 > D)"
        )));
    }
    let n = plant.states();
    let a = plant.a();
    let h = gains.correction_matrix(plant);

    let e_h_t_minus_d = expm(&h, t - d)?;
    let e_ad = expm(a, d)?;
    let e_ht = expm(&h, t)?;
    let e_neg_hd = expm(&h, -d)?;
    let e_at = expm(a, t)?;

    let g1 = -&(&e_h_t_minus_d * &e_ad);
    let inner = &(&e_neg_hd * &e_ad) - &Matrix::identity(n);
    let g2 = &(&e_ht * &inner) * &e_at;

    let companion = Matrix::block2x2(
        &Matrix::zeros(n, n),
        &Matrix::identity(n),
        &-&g2,
        &-&g1,
    );
    let rho = spectral_radius(&companion)?;
    Ok(DiscreteMap {
        g1,
        g2,
        companion,
        rho,
        period: t,
        delay: d,
    })
}

/// Sufficient condition for `V(m) = χᵀ diag(I, 2I) χ` to decrease
/// geometrically along `χ(m) = (ξ_{m−1}, ξ_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovCertificate {
    /// `2 [[G2ᵀG2, G2ᵀG1], [G1ᵀG2, G1ᵀG1]]`
    pub n_matrix: Matrix,
    /// `‖N‖₂`
    pub alpha: f64,
    /// `(1 + α) / 2`
    pub beta: f64,
    pub p: Matrix,
    pub valid: bool,
}

pub fn discrete_lyapunov_certificate(map: &DiscreteMap) -> LyapunovCertificate {
    let n = map.states();
    let g1t = map.g1.transpose();
    let g2t = map.g2.transpose();
    let n_matrix = Matrix::block2x2(
        &(&g2t * &map.g2),
        &(&g2t * &map.g1),
        &(&g1t * &map.g2),
        &(&g1t * &map.g1),
    )
    .scale(2.0);
    let alpha = operator_norm(&n_matrix);
    let p = Matrix::block2x2(
        &Matrix::identity(n),
        &Matrix::zeros(n, n),
        &Matrix::zeros(n, n),
        &Matrix::identity(n).scale(2.0),
    );
    LyapunovCertificate {
        n_matrix,
        alpha,
        beta: 0.5 * (1.0 + alpha),
        p,
        valid: alpha < 1.0,
    }
}
