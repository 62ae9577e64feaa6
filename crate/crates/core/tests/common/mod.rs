#![allow(dead_code)]

use predictorlab_core::sim::{compute_derived_signals, simulate_closed_loop, SimError};
use predictorlab_core::{Matrix, Plant, PredictorGains, SimConfig, SimMode, SimTrace, Vector};

pub fn paper_a() -> Matrix {
    Matrix::from_rows(&[[0.0, 1.0], [0.1, 0.0]]).unwrap()
}

pub fn paper_l() -> Matrix {
    Matrix::from_rows(&[[2.0, 0.5], [3.0, 0.0]]).unwrap()
}

pub fn paper_plant(delay: f64) -> Plant {
    let b = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
    Plant::new(paper_a(), b, delay).unwrap()
}

pub fn paper_gains(period: f64) -> PredictorGains {
    let k = Matrix::from_rows(&[[-20.0, -30.0]]).unwrap();
    PredictorGains::new(k, paper_l(), period).unwrap()
}

pub fn paper_x0() -> Vector {
    Vector::new(vec![-1.0, 1.0]).unwrap()
}

pub fn config(h: f64, t_end: f64) -> SimConfig {
    SimConfig::new(h, t_end, paper_x0()).unwrap()
}

/// Runs the paper setup and fills derived signals; panics on divergence.
pub fn run(delay: f64, period: f64, h: f64, t_end: f64) -> SimTrace {
    let plant = paper_plant(delay);
    let trace = simulate_closed_loop(
        &plant,
        &paper_gains(period),
        &config(h, t_end),
        SimMode::Modified,
    )
    .unwrap();
    compute_derived_signals(trace, &plant).unwrap()
}

/// Like [`run`] but returns the partial trace on divergence.
pub fn run_mode(delay: f64, period: f64, h: f64, t_end: f64, mode: SimMode) -> (SimTrace, bool) {
    let plant = paper_plant(delay);
    match simulate_closed_loop(&plant, &paper_gains(period), &config(h, t_end), mode) {
        Ok(t) => (t, false),
        Err(SimError::Divergence { trace, .. }) => (*trace, true),
        Err(e) => panic!("{e}"),
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Least-squares slope of `y` against `x`.
pub fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}
