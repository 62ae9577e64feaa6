use super::{expm, LinalgError, Matrix};

const GELFAND_MAX_SQUARINGS: u32 = 64;
const GELFAND_TOL: f64 = 1e-8;

/// Spectral radius via Gelfand's formula `ρ = lim ‖M^k‖^{1/k}`.
///
/// The power `M^{2^j}` is formed by repeated squaring of a renormalized
/// matrix, with the discarded scale carried in log form, so neither
/// overflow nor underflow occurs for any `j`.
pub fn spectral_radius(m: &Matrix) -> Result<f64, LinalgError> {
    m.require_square("spectral_radius")?;
    let mut b = m.clone();
    // ln of the scale factor c_j with M^{2^j} = c_j * b
    let mut log_scale = 0.0_f64;
    let mut prev: Option<f64> = None;
    let mut estimate = 0.0;

    for j in 0..=GELFAND_MAX_SQUARINGS {
        let nb = b.frobenius_norm();
        if nb < f64::MIN_POSITIVE {
            return Ok(0.0);
        }
        let log_norm = log_scale + nb.ln();
        estimate = (log_norm / 2f64.powi(j as i32)).exp();
        if let Some(p) = prev {
            if (estimate - p).abs() <= GELFAND_TOL * estimate {
                return Ok(estimate);
            }
        }
        prev = Some(estimate);
        let normalized = b.scale(1.0 / nb);
        b = &normalized * &normalized;
        log_scale = 2.0 * log_norm;
    }
    Ok(estimate)
}

/// Largest real part of the eigenvalues, computed as `ln ρ(e^M)`.
pub fn spectral_abscissa(m: &Matrix) -> Result<f64, LinalgError> {
    m.require_square("spectral_abscissa")?;
    let e = expm(m, 1.0)?;
    Ok(spectral_radius(&e)?.ln())
}

const POWER_MAX_ITERS: usize = 20_000;
const POWER_TOL: f64 = 1e-15;

/// Induced 2-norm (largest singular value) by power iteration on `MᵀM`.
///
/// Runs from the all-ones start and from a fixed alternating start and
/// keeps the larger estimate, so a start vector orthogonal to the dominant
/// singular direction cannot stall the result.
pub fn operator_norm(m: &Matrix) -> f64 {
    if m.max_abs() == 0.0 {
        return 0.0;
    }
    let gram = &m.transpose() * m;
    let n = gram.rows();
    let ones = vec![1.0; n];
    let alternating: Vec<f64> = (0..n)
        .map(|i| if i % 2 == 0 { (i + 1) as f64 } else { -((i + 1) as f64) })
        .collect();
    let l1 = rayleigh_power(&gram, ones);
    let l2 = rayleigh_power(&gram, alternating);
    l1.max(l2).max(0.0).sqrt()
}

fn rayleigh_power(g: &Matrix, start: Vec<f64>) -> f64 {
    let mut v = super::Vector::from_vec_unchecked(start);
    let nv = v.norm();
    v = v.scale(1.0 / nv);
    let mut lambda = 0.0_f64;
    for _ in 0..POWER_MAX_ITERS {
        let w = g.mul_vec(&v);
        let next = v.dot(&w);
        let nw = w.norm();
        if nw == 0.0 {
            return next.max(lambda);
        }
        v = w.scale(1.0 / nw);
        if (next - lambda).abs() <= POWER_TOL * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}
