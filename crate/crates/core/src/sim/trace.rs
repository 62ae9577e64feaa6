use std::io::{self, Write};

use crate::linalg::{expm, Vector};
use crate::plant::{ModelError, Plant};

use super::SimMode;

/// Tolerance for `ξ(t) = e^{−AD} z(t) − ε(t − D)`, relative to `1 + ‖z(t)‖`.
pub const XI_IDENTITY_TOL: f64 = 1e-8;

/// Column-oriented record of a closed-loop run, one row per step.
///
/// `t_k = k·h`. The `z` and `ξ` columns are empty until
/// [`compute_derived_signals`] fills them.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub(crate) n: usize,
    pub(crate) m: usize,
    pub(crate) h: f64,
    pub(crate) delay: f64,
    pub(crate) period: f64,
    pub(crate) delay_steps: usize,
    pub(crate) period_steps: usize,
    pub(crate) mode: SimMode,
    pub(crate) len: usize,
    pub(crate) x: Vec<f64>,
    pub(crate) u: Vec<f64>,
    pub(crate) psi: Vec<f64>,
    pub(crate) eps: Vec<f64>,
    pub(crate) zeta: Vec<f64>,
    pub(crate) z: Vec<f64>,
    pub(crate) xi: Vec<f64>,
    pub(crate) xi_identity_residual: Option<f64>,
    pub(crate) warnings: Vec<String>,
}

macro_rules! column {
    ($name:ident, $width:ident) => {
        pub fn $name(&self, k: usize) -> &[f64] {
            let w = self.$width;
            &self.$name[k * w..(k + 1) * w]
        }
    };
}

impl SimTrace {
    pub(crate) fn empty(
        n: usize,
        m: usize,
        h: f64,
        delay: f64,
        period: f64,
        delay_steps: usize,
        period_steps: usize,
        mode: SimMode,
        capacity: usize,
    ) -> Self {
        Self {
            n,
            m,
            h,
            delay,
            period,
            delay_steps,
            period_steps,
            mode,
            len: 0,
            x: Vec::with_capacity(capacity * n),
            u: Vec::with_capacity(capacity * m),
            psi: Vec::with_capacity(capacity * n),
            eps: Vec::with_capacity(capacity * n),
            zeta: Vec::with_capacity(capacity * n),
            z: Vec::new(),
            xi: Vec::new(),
            xi_identity_residual: None,
            warnings: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, x: &Vector, u: &Vector, psi: &Vector, eps: &Vector, zeta: &Vector) {
        self.x.extend_from_slice(x.as_slice());
        self.u.extend_from_slice(u.as_slice());
        self.psi.extend_from_slice(psi.as_slice());
        self.eps.extend_from_slice(eps.as_slice());
        self.zeta.extend_from_slice(zeta.as_slice());
        self.len += 1;
    }

    column!(x, n);
    column!(u, m);
    column!(psi, n);
    column!(eps, n);
    column!(zeta, n);

    /// `z(t_k)`; panics if derived signals have not been computed.
    pub fn z(&self, k: usize) -> &[f64] {
        assert!(self.has_derived(), "derived signals not computed");
        &self.z[k * self.n..(k + 1) * self.n]
    }

    /// `ξ(t_k)`; panics if derived signals have not been computed.
    pub fn xi(&self, k: usize) -> &[f64] {
        assert!(self.has_derived(), "derived signals not computed");
        &self.xi[k * self.n..(k + 1) * self.n]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    pub fn t_last(&self) -> f64 {
        self.t(self.len.saturating_sub(1))
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    pub fn period_steps(&self) -> usize {
        self.period_steps
    }

    pub fn mode(&self) -> SimMode {
        self.mode
    }

    pub fn states(&self) -> usize {
        self.n
    }

    pub fn inputs(&self) -> usize {
        self.m
    }

    pub fn has_derived(&self) -> bool {
        self.z.len() == self.len * self.n && self.xi.len() == self.len * self.n
    }

    /// Largest `‖ξ − e^{−AD} z + ε(t − D)‖ / (1 + ‖z‖)` seen while filling
    /// the derived columns.
    pub fn xi_identity_residual(&self) -> Option<f64> {
        self.xi_identity_residual
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Row vector helper for the columns above.
    pub fn vec_of(slice: &[f64]) -> Vector {
        Vector::from_vec_unchecked(slice.to_vec())
    }

    /// Writes the trace as CSV with 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        if !self.has_derived() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                "trace has no derived signals; run compute_derived_signals first",
            ));
        }
        let mut header = vec!["t".to_string()];
        for (name, width) in [
            ("x", self.n),
            ("u", self.m),
            ("psi", self.n),
            ("eps", self.n),
            ("zeta", self.n),
            ("z", self.n),
            ("xi", self.n),
        ] {
            header.extend((1..=width).map(|i| format!("{name}{i}")));
        }
        writeln!(w, "{}", header.join(","))?;

        let mut line = String::new();
        for k in 0..self.len {
            line.clear();
            push_num(&mut line, self.t(k));
            for col in [
                self.x(k),
                self.u(k),
                self.psi(k),
                self.eps(k),
                self.zeta(k),
                self.z(k),
                self.xi(k),
            ] {
                for &v in col {
                    line.push(',');
                    push_num(&mut line, v);
                }
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

/// Formats with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_num(s: &mut String, v: f64) {
    use std::fmt::Write as _;
    let _ = write!(s, "{v:.16e}");
}

fn sub_into(out: &mut [f64], a: &[f64], b: &[f64]) {
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o = x - y;
    }
}

/// Fills `z = ζ + ε` and `ξ(t) = x(t) − x(t − D) − ψ(t − D)` (zero
/// pre-history), and records the worst residual of the algebraic identity
/// `ξ(t) = e^{−AD} z(t) − ε(t − D)`.
pub fn compute_derived_signals(mut trace: SimTrace, plant: &Plant) -> Result<SimTrace, ModelError> {
    let n = trace.n;
    if plant.states() != n {
        return Err(ModelError::Dimension(format!(
            "plant has {} states, trace has {n}",
            plant.states()
        )));
    }
    let d = trace.delay_steps;
    let exp_neg = expm(plant.a(), -plant.delay())?;

    let mut z = vec![0.0; trace.len * n];
    let mut xi = vec![0.0; trace.len * n];
    let mut worst = 0.0_f64;
    let zeros = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    for k in 0..trace.len {
        let zk = &mut z[k * n..(k + 1) * n];
        for ((o, a), b) in zk.iter_mut().zip(trace.zeta(k)).zip(trace.eps(k)) {
            *o = a + b;
        }
        let (x_del, psi_del, eps_del) = if k >= d {
            (trace.x(k - d), trace.psi(k - d), trace.eps(k - d))
        } else {
            (&zeros[..], &zeros[..], &zeros[..])
        };
        let xik = &mut xi[k * n..(k + 1) * n];
        sub_into(&mut tmp, trace.x(k), x_del);
        sub_into(xik, &tmp, psi_del);

        let zv = Vector::from_vec_unchecked(zk.to_vec());
        let back = exp_neg.mul_vec(&zv);
        let mut res = vec![0.0; n];
        for i in 0..n {
            res[i] = xik[i] - back[i] + eps_del[i];
        }
        let r = crate::linalg::norm2(&res) / (1.0 + zv.norm());
        worst = worst.max(r);
    }

    trace.z = z;
    trace.xi = xi;
    trace.xi_identity_residual = Some(worst);
    Ok(trace)
}
