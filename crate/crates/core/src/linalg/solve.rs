use super::{LinalgError, Matrix, Vector};

/// LU factorization with partial pivoting, `P A = L U`, packed in place.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    /// Factors `a`. A pivot whose magnitude falls below `n * eps * max|a_ij|`
    /// is treated as zero and reported by its (0-based) elimination index.
    pub fn factor(a: &Matrix) -> Result<Self, LinalgError> {
        let n = a.require_square("LU factorization")?;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let tiny = n as f64 * f64::EPSILON * a.max_abs();

        for k in 0..n {
            let (p, pmag) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmag <= tiny || pmag == 0.0 {
                return Err(LinalgError::Singular { pivot: k });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
    }

    pub fn solve(&self, b: &Vector) -> Result<Vector, LinalgError> {
        if b.dim() != self.dim() {
            return Err(LinalgError::Dimension(format!(
                "right-hand side has dim {}, system has {}",
                b.dim(),
                self.dim()
            )));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        self.solve_in_place(&mut x);
        Ok(Vector::from_vec_unchecked(x))
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix) -> Result<Matrix, LinalgError> {
        let n = self.dim();
        if b.rows() != n {
            return Err(LinalgError::Dimension(format!(
                "right-hand side has {} rows, system has {n}",
                b.rows()
            )));
        }
        let mut out = Matrix::zeros(n, b.cols());
        let mut col = vec![0.0; n];
        for j in 0..b.cols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b[(self.perm[i], j)];
            }
            self.solve_in_place(&mut col);
            for (i, c) in col.iter().enumerate() {
                out[(i, j)] = *c;
            }
        }
        Ok(out)
    }
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve_linear(a: &Matrix, b: &Vector) -> Result<Vector, LinalgError> {
    a.require_square("solve_linear")?;
    if a.rows() != b.dim() {
        return Err(LinalgError::Dimension(format!(
            "matrix is {}x{}, right-hand side has dim {}",
            a.rows(),
            a.cols(),
            b.dim()
        )));
    }
    Lu::factor(a)?.solve(b)
}

/// Solves `a X = b` for a matrix right-hand side.
pub fn solve_linear_many(a: &Matrix, b: &Matrix) -> Result<Matrix, LinalgError> {
    Lu::factor(a)?.solve_matrix(b)
}

/// Cholesky test for positive definiteness of a symmetric matrix. Returns
/// the index of the first non-positive pivot on failure.
pub(crate) fn cholesky_pivot_check(a: &Matrix) -> Result<(), usize> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(j);
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn identity_diagonal_permutation() {
        let x = solve_linear(&Matrix::identity(2), &v(&[3.0, 4.0])).unwrap();
        assert_eq!(x.as_slice(), &[3.0, 4.0]);
        let x = solve_linear(&Matrix::diag(&[2.0, 5.0]), &v(&[2.0, 10.0])).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 2.0]);
        let p = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let x = solve_linear(&p, &v(&[7.0, 9.0])).unwrap();
        assert_eq!(x.as_slice(), &[9.0, 7.0]);
    }

    #[test]
    fn singular_reports_pivot() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert_eq!(
            solve_linear(&a, &v(&[1.0, 1.0])),
            Err(LinalgError::Singular { pivot: 1 })
        );
        let z = Matrix::zeros(3, 3);
        assert_eq!(
            solve_linear(&z, &v(&[1.0, 1.0, 1.0])),
            Err(LinalgError::Singular { pivot: 0 })
        );
    }

    #[test]
    fn dimension_errors() {
        assert!(matches!(
            solve_linear(&Matrix::zeros(2, 3), &v(&[1.0, 1.0])),
            Err(LinalgError::Dimension(_))
        ));
        assert!(matches!(
            solve_linear(&Matrix::identity(2), &v(&[1.0, 1.0, 1.0])),
            Err(LinalgError::Dimension(_))
        ));
    }

    #[test]
    fn needs_pivoting() {
        // zero leading entry: fails without row exchange
        let a = Matrix::from_rows(&[[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]]).unwrap();
        let b = v(&[5.0, 3.0, 6.0]);
        let x = solve_linear(&a, &b).unwrap();
        let r = &a.mul_vec(&x) - &b;
        assert!(r.norm() < 1e-14);
    }

    #[test]
    fn matrix_rhs() {
        let a = Matrix::from_rows(&[[4.0, 1.0], [2.0, 3.0]]).unwrap();
        let x = solve_linear_many(&a, &Matrix::identity(2)).unwrap();
        let i = &a * &x;
        assert!((&i - &Matrix::identity(2)).max_abs() < 1e-15);
    }

    #[test]
    fn cholesky_detects_indefinite() {
        assert!(cholesky_pivot_check(&Matrix::diag(&[1.0, 2.0])).is_ok());
        assert_eq!(cholesky_pivot_check(&Matrix::diag(&[1.0, -2.0])), Err(1));
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert_eq!(cholesky_pivot_check(&a), Err(1));
    }
}
