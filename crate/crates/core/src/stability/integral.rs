use crate::linalg::{expm, Matrix};

use super::AnalysisError;

pub const DEFAULT_QUAD_STEPS: usize = 10_000;

/// Compares composite Simpson quadrature of `∫₀^s e^{−Hτ} L e^{Aτ} dτ`
/// (with `H = A − L`) against the antiderivative evaluated at the ends,
/// and returns the 2-norm of the difference.
///
/// Since `d/dτ (e^{−Hτ} e^{Aτ}) = e^{−Hτ}(A − H) e^{Aτ} = e^{−Hτ} L e^{Aτ}`,
/// the closed form is `e^{−Hs} e^{As} − I`.
pub fn integral_identity_residual(
    a: &Matrix,
    l: &Matrix,
    s_max: f64,
    quad_steps: usize,
) -> Result<f64, AnalysisError> {
    let n = a.require_square("integral_identity_residual")?;
    if l.rows() != n || l.cols() != n {
        return Err(AnalysisError::Domain(format!(
            "L must be {n}x{n}, got {}x{}",
            l.rows(),
            l.cols()
        )));
    }
    if quad_steps < 2 {
        return Err(AnalysisError::Domain("quadrature needs at least 2 panels".into()));
    }
    if !s_max.is_finite() {
        return Err(AnalysisError::Domain(format!("s_max = {s_max} is not finite")));
    }
    let panels = quad_steps + quad_steps % 2;
    let h = a - l;
    let width = s_max / panels as f64;

    let mut sum = Matrix::zeros(n, n);
    for i in 0..=panels {
        let tau = i as f64 * width;
        let left = expm(&h, -tau)?;
        let right = expm(a, tau)?;
        let w = if i == 0 || i == panels {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let f = &(&left * l) * &right;
        sum = &sum + &f.scale(w);
    }
    let quad = sum.scale(width / 3.0);

    let closed = &(&expm(&h, -s_max)? * &expm(a, s_max)?) - &Matrix::identity(n);
    Ok(crate::linalg::operator_norm(&(&quad - &closed)))
}
