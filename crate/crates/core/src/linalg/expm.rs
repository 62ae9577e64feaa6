use super::{solve::Lu, LinalgError, Matrix};

// Scaling-and-squaring with diagonal Padé approximants, degree chosen from
// the 1-norm (Higham 2005). The theta values bound the norm for which the
// degree-m approximant has backward error below unit roundoff.
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential `e^{m t}`.
///
/// `t` may be negative. Fails with [`LinalgError::Range`] when the result
/// overflows `f64`.
pub fn expm(m: &Matrix, t: f64) -> Result<Matrix, LinalgError> {
    let n = m.require_square("expm")?;
    if !t.is_finite() {
        return Err(LinalgError::Range(format!("time argument {t} is not finite")));
    }
    let a = m.scale(t);
    if !a.is_finite() {
        return Err(LinalgError::Range("m * t overflows".into()));
    }
    let norm = a.norm_1();
    if norm == 0.0 {
        return Ok(Matrix::identity(n));
    }

    let ident = Matrix::identity(n);
    let a2 = &a * &a;

    for (deg, theta) in THETA {
        if norm <= theta {
            let (u, v) = match deg {
                3 => pade_low(&a, &a2, &ident, &B3),
                5 => pade_low(&a, &a2, &ident, &B5),
                7 => pade_low(&a, &a2, &ident, &B7),
                _ => pade_low(&a, &a2, &ident, &B9),
            };
            return finish(&u, &v, 0);
        }
    }

    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a.scale(2f64.powi(-s));
    let a2 = &a * &a;
    let (u, v) = pade13(&a, &a2, &ident);
    finish(&u, &v, s as u32)
}

/// Odd/even parts of a Padé numerator of degree < 13, built from powers of `a2`.
fn pade_low(a: &Matrix, a2: &Matrix, ident: &Matrix, b: &[f64]) -> (Matrix, Matrix) {
    let mut odd = ident.scale(b[1]);
    let mut even = ident.scale(b[0]);
    let mut pow = ident.clone();
    let mut k = 2;
    while k < b.len() {
        pow = &pow * a2;
        even = &even + &pow.scale(b[k]);
        odd = &odd + &pow.scale(b[k + 1]);
        k += 2;
    }
    (a * &odd, even)
}

fn pade13(a: &Matrix, a2: &Matrix, ident: &Matrix) -> (Matrix, Matrix) {
    let b = &B13;
    let a4 = a2 * a2;
    let a6 = &a4 * a2;

    let inner_u = &(&a6.scale(b[13]) + &a4.scale(b[11])) + &a2.scale(b[9]);
    let u_tail = &(&(&a6.scale(b[7]) + &a4.scale(b[5])) + &a2.scale(b[3])) + &ident.scale(b[1]);
    let u = a * &(&(&a6 * &inner_u) + &u_tail);

    let inner_v = &(&a6.scale(b[12]) + &a4.scale(b[10])) + &a2.scale(b[8]);
    let v_tail = &(&(&a6.scale(b[6]) + &a4.scale(b[4])) + &a2.scale(b[2])) + &ident.scale(b[0]);
    let v = &(&a6 * &inner_v) + &v_tail;
    (u, v)
}

fn finish(u: &Matrix, v: &Matrix, squarings: u32) -> Result<Matrix, LinalgError> {
    let p = v + u;
    let q = v - u;
    let lu = Lu::factor(&q).map_err(|_| {
        LinalgError::Range("Padé denominator singular; argument too large".into())
    })?;
    let mut r = lu.solve_matrix(&p)?;
    for _ in 0..squarings {
        r = &r * &r;
        if !r.is_finite() {
            return Err(LinalgError::Range("e^(mt) overflows f64".into()));
        }
    }
    if !r.is_finite() {
        return Err(LinalgError::Range("e^(mt) overflows f64".into()));
    }
    Ok(r)
}
