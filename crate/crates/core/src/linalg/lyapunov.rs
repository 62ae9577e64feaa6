use super::solve::{cholesky_pivot_check, Lu};
use super::{LinalgError, Matrix, Vector};

/// Largest state dimension accepted by [`hurwitz_certificate`]; the
/// vectorized Lyapunov system has `n^2` unknowns.
pub const MAX_LYAPUNOV_DIM: usize = 12;

/// Outcome of the Lyapunov test `MᵀP + PM = −I`.
#[derive(Debug, Clone, PartialEq)]
pub struct HurwitzCertificate {
    pub is_hurwitz: bool,
    /// The Kronecker system was singular: some pair of eigenvalues sums to
    /// zero, which includes eigenvalues on the imaginary axis.
    pub marginal: bool,
    /// The symmetric positive definite solution, present iff `is_hurwitz`.
    pub p: Option<Matrix>,
}

/// Certifies that every eigenvalue of `m` has negative real part by solving
/// the Lyapunov equation `MᵀP + PM = −I` and checking `P ≻ 0`.
pub fn hurwitz_certificate(m: &Matrix) -> Result<HurwitzCertificate, LinalgError> {
    let n = m.require_square("hurwitz_certificate")?;
    if n > MAX_LYAPUNOV_DIM {
        return Err(LinalgError::Dimension(format!(
            "Lyapunov certificate supports n <= {MAX_LYAPUNOV_DIM}, got {n}"
        )));
    }

    // Column-major vec(P): unknown P[i][j] sits at i + j*n.
    let nn = n * n;
    let mut kron = Matrix::zeros(nn, nn);
    for j in 0..n {
        for i in 0..n {
            let row = i + j * n;
            for k in 0..n {
                kron[(row, k + j * n)] += m[(k, i)];
                kron[(row, i + k * n)] += m[(k, j)];
            }
        }
    }
    let mut rhs = Vector::zeros(nn);
    for i in 0..n {
        rhs[i + i * n] = -1.0;
    }

    let lu = match Lu::factor(&kron) {
        Ok(lu) => lu,
        Err(LinalgError::Singular { .. }) => {
            return Ok(HurwitzCertificate {
                is_hurwitz: false,
                marginal: true,
                p: None,
            })
        }
        Err(e) => return Err(e),
    };
    let sol = lu.solve(&rhs)?;

    let mut p = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            p[(i, j)] = sol[i + j * n];
        }
    }
    let p = (&p + &p.transpose()).scale(0.5);
    if !p.is_finite() {
        return Ok(HurwitzCertificate {
            is_hurwitz: false,
            marginal: true,
            p: None,
        });
    }

    let is_hurwitz = cholesky_pivot_check(&p).is_ok();
    Ok(HurwitzCertificate {
        is_hurwitz,
        marginal: false,
        p: is_hurwitz.then_some(p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lyap_residual(m: &Matrix, p: &Matrix) -> f64 {
        let r = &(&(&m.transpose() * p) + &(p * m)) + &Matrix::identity(m.rows());
        r.max_abs()
    }

    #[test]
    fn negative_identity() {
        let c = hurwitz_certificate(&Matrix::identity(2).scale(-1.0)).unwrap();
        assert!(c.is_hurwitz);
        let p = c.p.unwrap();
        assert!((&p - &Matrix::identity(2).scale(0.5)).max_abs() < 1e-15);
    }

    #[test]
    fn unstable_plant_rejected() {
        // eigenvalues +-sqrt(0.1)
        let a = Matrix::from_rows(&[[0.0, 1.0], [0.1, 0.0]]).unwrap();
        let c = hurwitz_certificate(&a).unwrap();
        assert!(!c.is_hurwitz);
        assert!(c.p.is_none());
    }

    #[test]
    fn observer_error_matrix_accepted() {
        // trace -2, det 1.45: roots -1 +- 0.6708i
        let h = Matrix::from_rows(&[[-2.0, 0.5], [-2.9, 0.0]]).unwrap();
        let c = hurwitz_certificate(&h).unwrap();
        assert!(c.is_hurwitz);
        let p = c.p.unwrap();
        assert!(lyap_residual(&h, &p) < 1e-13);
        assert!(p[(0, 0)] > 0.0 && p[(0, 0)] * p[(1, 1)] - p[(0, 1)] * p[(1, 0)] > 0.0);
    }

    #[test]
    fn imaginary_axis_is_marginal() {
        let w = Matrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]]).unwrap();
        let c = hurwitz_certificate(&w).unwrap();
        assert!(!c.is_hurwitz);
        assert!(c.marginal);
        let z = hurwitz_certificate(&Matrix::zeros(3, 3)).unwrap();
        assert!(z.marginal);
    }

    #[test]
    fn anti_stable_rejected() {
        let c = hurwitz_certificate(&Matrix::diag(&[1.0, 2.0])).unwrap();
        assert!(!c.is_hurwitz && !c.marginal);
    }

    #[test]
    fn size_limit() {
        assert!(hurwitz_certificate(&Matrix::identity(13)).is_err());
        assert!(hurwitz_certificate(&Matrix::zeros(2, 3)).is_err());
    }
}
