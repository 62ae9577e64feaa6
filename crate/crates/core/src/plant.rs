use thiserror::Error;

use crate::linalg::{LinalgError, Matrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Linear plant with a constant input delay: `ẋ(t) = A x(t) + B u(t − D)`.
///
/// Controllability of `(A, B)` is not checked here.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    a: Matrix,
    b: Matrix,
    delay: f64,
}

impl Plant {
    pub fn new(a: Matrix, b: Matrix, delay: f64) -> Result<Self, ModelError> {
        if !a.is_square() {
            return Err(ModelError::Dimension(format!(
                "A must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if b.rows() != a.rows() {
            return Err(ModelError::Dimension(format!(
                "B has {} rows, A is {}x{}",
                b.rows(),
                a.rows(),
                a.cols()
            )));
        }
        if !delay.is_finite() || delay < 0.0 {
            return Err(ModelError::InvalidParameter(format!(
                "delay must be finite and >= 0, got {delay}"
            )));
        }
        Ok(Self { a, b, delay })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    /// Number of states `n`.
    pub fn states(&self) -> usize {
        self.a.rows()
    }

    /// Number of inputs `m`.
    pub fn inputs(&self) -> usize {
        self.b.cols()
    }

    /// Same plant with a different delay.
    pub fn with_delay(&self, delay: f64) -> Result<Self, ModelError> {
        Self::new(self.a.clone(), self.b.clone(), delay)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let a = Matrix::identity(2);
        let b = Matrix::zeros(2, 1);
        assert!(Plant::new(a.clone(), b.clone(), 0.0).is_ok());
        assert!(Plant::new(a.clone(), b.clone(), -1.0).is_err());
        assert!(Plant::new(a.clone(), b.clone(), f64::INFINITY).is_err());
        assert!(Plant::new(a.clone(), Matrix::zeros(3, 1), 1.0).is_err());
        assert!(Plant::new(Matrix::zeros(2, 3), b, 1.0).is_err());
        let p = Plant::new(a, Matrix::zeros(2, 3), 2.0).unwrap();
        assert_eq!((p.states(), p.inputs(), p.delay()), (2, 3, 2.0));
    }
}
