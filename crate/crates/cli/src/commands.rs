use std::path::{Path, PathBuf};

use predictorlab_core::predictor::{validate_gains, ValidationReport};
use predictorlab_core::sim::{
    compute_derived_signals, residual_report, simulate_closed_loop, ResidualReport, SimError,
    XI_IDENTITY_TOL,
};
use predictorlab_core::stability::{
    discrete_lyapunov_certificate, discrete_map, find_min_stable_period,
    integral_identity_residual, lyapunov_decrease_check, xi_recursion_check, z_envelope_check,
    AnalysisError, Criterion, DEFAULT_QUAD_STEPS,
};
use predictorlab_core::{SimMode, SimTrace};

use crate::output::{verdict, write_atomic, Report};
use crate::scenario::Scenario;

/// Relative bound on the sampled-recursion residual.
pub const RECURSION_TOL: f64 = 5e-2;
/// Flow-map error bound, relative to the largest `‖z‖` in the run.
pub const FLOW_TOL: f64 = 1e-3;
/// Quadrature-versus-closed-form bound for the integral identity.
pub const INTEGRAL_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Diverged(String),
    #[error("{0}")]
    Config(String),
    #[error("{failed} verification check(s) failed; see {report}")]
    ChecksFailed { failed: usize, report: PathBuf },
}

impl CliError {
    /// 0 success, 1 I/O, 2 divergence, 3 configuration or domain, 4 failed checks.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Diverged(_) => 2,
            CliError::Config(_) => 3,
            CliError::ChecksFailed { .. } => 4,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

fn analysis_err(e: AnalysisError) -> CliError {
    CliError::Config(e.to_string())
}

fn save(report: &Report, out: &Path, name: &str) -> Result<(), CliError> {
    report
        .save(out, name)
        .map_err(io_err(format!("writing {}", out.join(name).display())))
}

fn save_trace(trace: &SimTrace, out: &Path) -> Result<(), CliError> {
    write_atomic(out, "trace.csv", |w| trace.write_csv(w))
        .map_err(io_err(format!("writing {}", out.join("trace.csv").display())))
}

enum Run {
    Complete(SimTrace),
    Diverged { trace: SimTrace, t: f64, norm: f64 },
}

fn run(s: &Scenario, mode: SimMode) -> Result<Run, CliError> {
    let result = simulate_closed_loop(&s.plant, &s.gains, &s.sim, mode);
    let derive = |t: SimTrace| {
        compute_derived_signals(t, &s.plant).map_err(|e| CliError::Config(e.to_string()))
    };
    match result {
        Ok(trace) => Ok(Run::Complete(derive(trace)?)),
        Err(SimError::Divergence { t, norm, trace }) => Ok(Run::Diverged {
            trace: derive(*trace)?,
            t,
            norm,
        }),
        Err(SimError::Config(msg)) => Err(CliError::Config(msg)),
        Err(SimError::Model(e)) => Err(CliError::Config(e.to_string())),
    }
}

fn rounding_floor(r: &ResidualReport) -> f64 {
    let scale = r
        .intervals
        .iter()
        .map(|i| i.zeta_max.max(i.z_max))
        .fold(0.0, f64::max);
    64.0 * f64::EPSILON * scale / r.h
}

fn residual_lines(report: &mut Report, r: &ResidualReport) {
    report
        .kv("intervals", r.intervals.len())
        .num("max_correction_rate_residual", r.max_zeta_rate)
        .num("correction_rate_bound", r.h * r.zeta_rate_scale + rounding_floor(r))
        .num("max_plant_rate_residual", r.max_z_rate)
        .num("plant_rate_bound", r.h * r.z_rate_scale + rounding_floor(r))
        .num("max_flow_error", r.max_flow_abs)
        .num("max_flow_error_relative", r.max_flow_rel);
    for (i, iv) in r.intervals.iter().enumerate() {
        report.kv(
            &format!("interval.{i}"),
            format!(
                "t = [{}, {}) correction_rate = {:.3e} plant_rate = {:.3e} flow = {:.3e} max_z = {:.3e}",
                iv.t_start, iv.t_end, iv.zeta_rate, iv.z_rate, iv.flow_abs, iv.z_max
            ),
        );
    }
}

fn final_state_norm(trace: &SimTrace) -> f64 {
    let x = trace.x(trace.len() - 1);
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Simulates and writes `trace.csv` and `residuals.txt`.
pub fn simulate(s: &Scenario, out: &Path) -> Result<String, CliError> {
    let mut report = Report::new();
    report.kv("mode", s.mode).num("h", s.sim.h).num("t_end", s.sim.t_end);
    match run(s, s.mode)? {
        Run::Complete(trace) => {
            save_trace(&trace, out)?;
            report.kv("status", "complete").kv("steps", trace.len());
            for w in trace.warnings() {
                report.comment(w);
            }
            if let Some(r) = trace.xi_identity_residual() {
                report.num("xi_identity_residual", r);
            }
            match residual_report(&trace, &s.plant, &s.gains) {
                Ok(r) => residual_lines(&mut report, &r),
                Err(e) => {
                    report.kv("residual_report", format!("unavailable: {e}"));
                }
            }
            save(&report, out, "residuals.txt")?;
            Ok(format!(
                "simulated {} steps; |x(t_end)| = {:.6e}; wrote trace.csv, residuals.txt",
                trace.len(),
                final_state_norm(&trace)
            ))
        }
        Run::Diverged { trace, t, norm } => {
            save_trace(&trace, out)?;
            report
                .kv("status", "diverged")
                .num("diverged_at", t)
                .num("state_norm", norm)
                .kv("steps", trace.len());
            save(&report, out, "residuals.txt")?;
            Err(CliError::Diverged(format!(
                "state norm {norm:.3e} exceeded the divergence limit at t = {t}; partial trace written"
            )))
        }
    }
}

fn check_period(s: &Scenario) -> Result<(), CliError> {
    let (d, t) = (s.plant.delay(), s.gains.period());
    if t <= d {
        return Err(CliError::Config(format!(
            "reset period T = {t} must exceed the delay D = {d} (T0 > D)"
        )));
    }
    Ok(())
}

fn gain_lines(report: &mut Report, v: &ValidationReport) {
    for c in &v.checks {
        report.kv(&format!("gains.{}", c.name), format!("{} ({})", verdict(c.passed), c.detail));
    }
    report
        .num("abscissa_plant", v.abscissa_plant)
        .num("abscissa_correction", v.abscissa_correction)
        .num("abscissa_sum", v.abscissa_sum);
}

/// Writes `analysis.txt` with the gain checks, recurrence coefficients and
/// both stability verdicts.
pub fn analyze(s: &Scenario, out: &Path) -> Result<String, CliError> {
    check_period(s)?;
    let v = validate_gains(&s.plant, &s.gains).map_err(|e| CliError::Config(e.to_string()))?;
    let map = discrete_map(&s.plant, &s.gains).map_err(analysis_err)?;
    let cert = discrete_lyapunov_certificate(&map);
    let integral = integral_identity_residual(
        s.plant.a(),
        s.gains.l(),
        s.plant.delay(),
        DEFAULT_QUAD_STEPS,
    )
    .map_err(analysis_err)?;

    let mut report = Report::new();
    report.num("D", map.delay).num("T", map.period);
    gain_lines(&mut report, &v);
    report
        .matrix("G1", &map.g1)
        .matrix("G2", &map.g2)
        .matrix("companion", &map.companion)
        .num("rho", map.rho)
        .kv("spectral_stable", map.spectrally_stable())
        .num("alpha", cert.alpha)
        .num("beta", cert.beta)
        .kv("lyapunov_valid", cert.valid)
        .num("integral_identity_residual", integral)
        .kv("integral_identity_panels", DEFAULT_QUAD_STEPS);
    save(&report, out, "analysis.txt")?;

    Ok(format!(
        "rho = {:.6e} ({}), alpha = {:.6e} ({}), gain checks {}; wrote analysis.txt",
        map.rho,
        if map.spectrally_stable() { "stable" } else { "not stable" },
        cert.alpha,
        if cert.valid { "certificate valid" } else { "certificate not valid" },
        if v.all_passed() { "pass" } else { "fail" }
    ))
}

/// Writes `sweep.csv` and reports the smallest grid period from which the
/// criterion holds to the end of the grid.
pub fn sweep(
    s: &Scenario,
    out: &Path,
    t_lo: f64,
    t_hi: f64,
    t_step: f64,
    criterion: Criterion,
) -> Result<String, CliError> {
    let result = find_min_stable_period(&s.plant, &s.gains, t_lo, t_hi, t_step, criterion)
        .map_err(analysis_err)?;
    write_atomic(out, "sweep.csv", |w| result.write_csv(w))
        .map_err(io_err(format!("writing {}", out.join("sweep.csv").display())))?;
    let found = match result.threshold {
        Some(t0) => format!("T0 = {t0} ({criterion})"),
        None => "not found on grid".to_string(),
    };
    Ok(format!(
        "{found}; {} grid points, threshold checked on the grid only; wrote sweep.csv",
        result.table.len()
    ))
}

struct Checks {
    report: Report,
    failed: usize,
}

impl Checks {
    fn item(&mut self, name: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        self.report.kv(name, format!("{} ({detail})", verdict(ok)));
    }
}

/// Runs the identity suite on a modified-mode simulation and writes
/// `verify.txt`. Fails with exit code 4 when any applicable check fails.
pub fn verify(s: &Scenario, out: &Path) -> Result<String, CliError> {
    check_period(s)?;
    let (d, t) = (s.plant.delay(), s.gains.period());
    let required = d + 3.0 * t;
    if s.sim.t_end < required - 0.5 * s.sim.h {
        return Err(CliError::Config(format!(
            "verify needs sim.t_end >= D + 3T = {required}, got {}",
            s.sim.t_end
        )));
    }

    let mut checks = Checks {
        report: Report::new(),
        failed: 0,
    };
    checks
        .report
        .kv("mode", SimMode::Modified)
        .num("h", s.sim.h)
        .num("t_end", s.sim.t_end);

    let v = validate_gains(&s.plant, &s.gains).map_err(|e| CliError::Config(e.to_string()))?;
    checks.item(
        "gain_conditions",
        v.all_passed(),
        format!("abscissa sum {:.6}", v.abscissa_sum),
    );

    let map = discrete_map(&s.plant, &s.gains).map_err(analysis_err)?;
    checks.item("spectral_stability", map.rho < 1.0, format!("rho = {:.6e}", map.rho));

    let integral =
        integral_identity_residual(s.plant.a(), s.gains.l(), d, DEFAULT_QUAD_STEPS).map_err(analysis_err)?;
    checks.item(
        "integral_identity",
        integral <= INTEGRAL_TOL,
        format!("{integral:.3e} <= {INTEGRAL_TOL:e}"),
    );

    let trace = match run(s, SimMode::Modified)? {
        Run::Complete(trace) => trace,
        Run::Diverged { t, norm, .. } => {
            checks.item("simulation", false, format!("diverged at t = {t}, norm {norm:.3e}"));
            checks.report.kv("failed", checks.failed);
            save(&checks.report, out, "verify.txt")?;
            return Err(CliError::Diverged(format!(
                "simulation diverged at t = {t}; verify.txt written"
            )));
        }
    };

    let xi_id = trace.xi_identity_residual().unwrap_or(f64::NAN);
    checks.item(
        "xi_identity",
        xi_id <= XI_IDENTITY_TOL,
        format!("{xi_id:.3e} <= {XI_IDENTITY_TOL:e} relative"),
    );

    match residual_report(&trace, &s.plant, &s.gains) {
        Ok(r) => {
            let floor = rounding_floor(&r);
            let zeta_bound = r.h * r.zeta_rate_scale + floor;
            let z_bound = r.h * r.z_rate_scale + floor;
            let z_max = r.intervals.iter().map(|i| i.z_max).fold(0.0, f64::max);
            checks.item(
                "correction_rate",
                r.max_zeta_rate <= zeta_bound,
                format!("{:.3e} <= {zeta_bound:.3e}", r.max_zeta_rate),
            );
            checks.item(
                "plant_rate",
                r.max_z_rate <= z_bound,
                format!("{:.3e} <= {z_bound:.3e}", r.max_z_rate),
            );
            checks.item(
                "flow_map",
                r.max_flow_abs <= FLOW_TOL * z_max,
                format!("{:.3e} <= {FLOW_TOL:e} * {z_max:.3e}", r.max_flow_abs),
            );
        }
        Err(e) => checks.item("residuals", false, e.to_string()),
    }

    let xi = xi_recursion_check(&trace, &map).map_err(analysis_err)?;
    checks.item(
        "recursion",
        xi.max_rel_residual <= RECURSION_TOL,
        format!(
            "{:.3e} <= {RECURSION_TOL:e} over {} samples",
            xi.max_rel_residual,
            xi.samples.len()
        ),
    );
    if let Some(slope) = xi.chi_log_slope() {
        checks.report.num("chi_log_slope", slope);
    }

    let cert = discrete_lyapunov_certificate(&map);
    let dec = lyapunov_decrease_check(&xi, &cert);
    if dec.applicable {
        checks.item(
            "lyapunov_decrease",
            dec.passes,
            format!("alpha = {:.4}, beta = {:.4}, worst ratio {:.4}", cert.alpha, dec.beta, dec.worst_ratio),
        );
    } else {
        checks.report.kv("lyapunov_decrease", format!("skipped ({})", dec.message));
    }

    let env = z_envelope_check(&trace, &s.plant, t).map_err(analysis_err)?;
    checks.item(
        "z_envelope",
        env.passes,
        format!(
            "envelope {:.4e}, worst ratio {:.6} over {} intervals",
            env.envelope, env.worst_ratio, env.intervals
        ),
    );

    checks.report.kv("failed", checks.failed);
    save(&checks.report, out, "verify.txt")?;
    if checks.failed > 0 {
        return Err(CliError::ChecksFailed {
            failed: checks.failed,
            report: out.join("verify.txt"),
        });
    }
    Ok("all checks passed; wrote verify.txt".to_string())
}
