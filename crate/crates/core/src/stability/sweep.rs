use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use crate::plant::Plant;
use crate::predictor::PredictorGains;
use crate::sim::format_f64;

use super::{discrete_lyapunov_certificate, discrete_map, AnalysisError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Criterion {
    /// `ρ(M(T)) < 1`
    #[default]
    Spectral,
    /// `α(T) < 1`
    Lyapunov,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Spectral => "spectral",
            Criterion::Lyapunov => "lyapunov",
        })
    }
}

impl FromStr for Criterion {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "spectral" => Ok(Criterion::Spectral),
            "lyapunov" => Ok(Criterion::Lyapunov),
            other => Err(format!("unknown criterion {other:?} (expected spectral or lyapunov)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub period: f64,
    pub rho: f64,
    pub alpha: f64,
    pub beta: f64,
    pub spectral_stable: bool,
    pub lyapunov_valid: bool,
}

impl SweepRow {
    pub fn holds(&self, criterion: Criterion) -> bool {
        match criterion {
            Criterion::Spectral => self.spectral_stable,
            Criterion::Lyapunov => self.lyapunov_valid,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub criterion: Criterion,
    /// Smallest grid period from which the criterion holds at every later
    /// grid point. Only the sampled grid is checked.
    pub threshold: Option<f64>,
    pub table: Vec<SweepRow>,
}

impl SweepResult {
    pub const CSV_HEADER: &'static str = "T,rho,alpha,beta,spectral_stable,lyapunov_valid";

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.table {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                format_f64(r.period),
                format_f64(r.rho),
                format_f64(r.alpha),
                format_f64(r.beta),
                r.spectral_stable,
                r.lyapunov_valid
            )?;
        }
        Ok(())
    }
}

/// Grid points `t_lo, t_lo + step, …` up to `t_hi` (inclusive within a
/// tiny tolerance). Points are `t_lo + i·step`, not accumulated sums.
pub(crate) fn period_grid(t_lo: f64, t_hi: f64, step: f64) -> Vec<f64> {
    let count = ((t_hi - t_lo) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| t_lo + i as f64 * step).collect()
}

/// Evaluates the chosen criterion over a grid of reset periods and returns
/// the threshold `T0` together with the full table.
pub fn find_min_stable_period(
    plant: &Plant,
    gains: &PredictorGains,
    t_lo: f64,
    t_hi: f64,
    t_step: f64,
    criterion: Criterion,
) -> Result<SweepResult, AnalysisError> {
    let d = plant.delay();
    if !(t_lo > d) {
        return Err(AnalysisError::Domain(format!(
            "sweep must start above the delay (T0 > D): t_lo = {t_lo}, D = {d}"
        )));
    }
    if !(t_step > 0.0) || !t_step.is_finite() {
        return Err(AnalysisError::Domain(format!("t_step must be > 0, got {t_step}")));
    }
    if !(t_hi >= t_lo) || !t_hi.is_finite() {
        return Err(AnalysisError::Domain(format!(
            "t_hi = {t_hi} must be finite and >= t_lo = {t_lo}"
        )));
    }

    let mut table = Vec::new();
    for period in period_grid(t_lo, t_hi, t_step) {
        let g = gains.with_period(period)?;
        let map = discrete_map(plant, &g)?;
        let cert = discrete_lyapunov_certificate(&map);
        table.push(SweepRow {
            period,
            rho: map.rho,
            alpha: cert.alpha,
            beta: cert.beta,
            spectral_stable: map.spectrally_stable(),
            lyapunov_valid: cert.valid,
        });
    }

    let mut threshold = None;
    for row in table.iter().rev() {
        if row.holds(criterion) {
            threshold = Some(row.period);
        } else {
            break;
        }
    }
    Ok(SweepResult {
        criterion,
        threshold,
        table,
    })
}
