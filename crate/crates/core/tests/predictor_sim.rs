mod common;

use common::*;
use predictorlab_core::linalg::{expm, Matrix, Vector};
use predictorlab_core::predictor::{
    apply_reset, control_output, correction_zeta, validate_gains, ControllerState,
};
use predictorlab_core::sim::{residual_report, DelayLine};
use predictorlab_core::{Plant, PredictorGains, SimConfig, SimMode};
use proptest::prelude::*;

fn vec2() -> impl Strategy<Value = Vector> {
    prop::collection::vec(-5.0f64..5.0, 2).prop_map(|d| Vector::new(d).unwrap())
}

fn close(a: &Vector, b: &Vector, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + b.norm())
}

#[test]
fn control_output_examples() {
    let k = Matrix::from_rows(&[[-20.0, -30.0]]).unwrap();
    let u = control_output(&k, &paper_x0(), &Vector::zeros(2)).unwrap();
    assert_eq!(u.as_slice(), &[-10.0]);
    let u = control_output(&k, &paper_x0(), &paper_x0().scale(-1.0)).unwrap();
    assert_eq!(u.as_slice(), &[0.0]);
    let u = control_output(&Matrix::zeros(1, 2), &paper_x0(), &paper_x0()).unwrap();
    assert_eq!(u.as_slice(), &[0.0]);
}

#[test]
fn correction_at_start_of_example() {
    let e = expm(&paper_a(), 1.0).unwrap();
    let z = Vector::zeros(2);
    let zeta = correction_zeta(&e, &paper_x0(), &z, &z, &z, &z).unwrap();
    // e^{A} (−1, 1) from the hyperbolic closed form
    let r = 0.1f64.sqrt();
    let (c, s) = (r.cosh(), r.sinh() / r);
    let want = [-c + s, -0.1 * s + c];
    assert!((zeta[0] - want[0]).abs() < 1e-14 && (zeta[1] - want[1]).abs() < 1e-14);
    assert!((zeta[0] + 0.0336679).abs() < 1e-6 && (zeta[1] - 0.9487430).abs() < 1e-6);
}

#[test]
fn gain_validation_examples() {
    let r = validate_gains(&paper_plant(1.0), &paper_gains(5.0)).unwrap();
    assert!(r.all_passed());
    assert!((r.abscissa_sum + 0.6838).abs() < 1e-3);

    let no_correction = PredictorGains::new(
        Matrix::from_rows(&[[-20.0, -30.0]]).unwrap(),
        Matrix::zeros(2, 2),
        5.0,
    )
    .unwrap();
    let r = validate_gains(&paper_plant(1.0), &no_correction).unwrap();
    assert!(!r.correction_hurwitz && !r.all_passed());

    let no_feedback = PredictorGains::new(Matrix::zeros(1, 2), paper_l(), 5.0).unwrap();
    let r = validate_gains(&paper_plant(1.0), &no_feedback).unwrap();
    assert!(!r.closed_loop_hurwitz);
}

#[test]
fn delay_line_examples() {
    let s = |x: f64| Vector::new(vec![x]).unwrap();
    let mut line = DelayLine::new(1, 3);
    let reads: Vec<f64> = [1.0, 2.0, 3.0, 4.0]
        .iter()
        .map(|&x| line.push_and_read(&s(x)).unwrap()[0])
        .collect();
    assert_eq!(reads, [0.0, 0.0, 0.0, 1.0]);

    let mut line = DelayLine::new(1, 0);
    assert_eq!(line.push_and_read(&s(7.0)).unwrap()[0], 7.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn control_output_is_linear(x in vec2(), psi in vec2(), c in -10.0f64..10.0) {
        let k = Matrix::from_rows(&[[-20.0, -30.0]]).unwrap();
        let base = control_output(&k, &x, &psi).unwrap();
        let scaled = control_output(&k, &x.scale(c), &psi.scale(c)).unwrap();
        prop_assert!(close(&scaled, &base.scale(c), 1e-12));
    }

    #[test]
    fn correction_is_linear(
        a in vec2(), b in vec2(), p in vec2(), e1 in vec2(), e2 in vec2(), c in -10.0f64..10.0
    ) {
        let e = expm(&paper_a(), 1.0).unwrap();
        let base = correction_zeta(&e, &a, &b, &p, &e1, &e2).unwrap();
        let scaled = correction_zeta(
            &e, &a.scale(c), &b.scale(c), &p.scale(c), &e1.scale(c), &e2.scale(c),
        ).unwrap();
        prop_assert!(close(&scaled, &base.scale(c), 1e-12));
    }

    #[test]
    fn reset_is_idempotent(psi in vec2(), eps in vec2(), k in 0usize..200_000) {
        let state = ControllerState { psi, eps, zeta: Vector::zeros(2) };
        let t = k as f64 * 1e-4;
        let (once, _) = apply_reset(&state, t, 5.0, 1e-4);
        let (twice, _) = apply_reset(&once, t, 5.0, 1e-4);
        prop_assert_eq!(once, twice);
    }
}

#[test]
fn reset_grid() {
    let state = ControllerState {
        psi: paper_x0(),
        eps: paper_x0(),
        zeta: Vector::zeros(2),
    };
    assert!(apply_reset(&state, 0.0, 5.0, 1e-4).1);
    assert!(apply_reset(&state, 5.0, 5.0, 1e-4).1);
    assert!(!apply_reset(&state, 4.9999, 5.0, 1e-4).1);
    let (s, fired) = apply_reset(&state, 2.5, 5.0, 1e-4);
    assert!(!fired && s == state);
}

#[test]
fn derived_signals_on_example() {
    let trace = run(1.0, 5.0, 1e-3, 40.0);
    let residual = trace.xi_identity_residual().unwrap();
    assert!(residual <= 1e-8, "xi identity residual {residual:e}");
    for k in 0..trace.len() {
        for i in 0..2 {
            // z is defined as the sum, so equality is exact
            assert_eq!(trace.z(k)[i], trace.zeta(k)[i] + trace.eps(k)[i]);
        }
    }
    let period_steps = trace.period_steps();
    for k in (0..trace.len()).step_by(period_steps) {
        assert!(trace.eps(k).iter().all(|&e| e == 0.0), "eps at t = {}", trace.t(k));
    }
}

#[test]
fn zero_initial_state_stays_zero() {
    let plant = paper_plant(1.0);
    for mode in [SimMode::Modified, SimMode::Classical, SimMode::OpenLoop] {
        let cfg = SimConfig::new(1e-3, 12.0, Vector::zeros(2)).unwrap();
        let trace = predictorlab_core::sim::simulate_closed_loop(&plant, &paper_gains(5.0), &cfg, mode)
            .unwrap();
        let trace = predictorlab_core::sim::compute_derived_signals(trace, &plant).unwrap();
        for k in 0..trace.len() {
            for v in [trace.x(k), trace.psi(k), trace.eps(k), trace.zeta(k), trace.z(k), trace.xi(k)] {
                assert!(v.iter().all(|&x| x == 0.0));
            }
        }
    }
}

#[test]
fn traces_are_deterministic() {
    let a = run(1.0, 5.0, 1e-3, 12.0);
    let b = run(1.0, 5.0, 1e-3, 12.0);
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    a.write_csv(&mut ca).unwrap();
    b.write_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);
}

#[test]
fn global_error_is_first_order() {
    // compare each run with one at a quarter of its step, on shared instants
    let fine = run(1.0, 5.0, 1.25e-4, 20.0);
    let err = |h: f64| -> f64 {
        let coarse = run(1.0, 5.0, h, 20.0);
        let stride = (h / 1.25e-4).round() as usize;
        (0..coarse.len())
            .map(|k| {
                let d: Vec<f64> = coarse
                    .x(k)
                    .iter()
                    .zip(fine.x(k * stride))
                    .map(|(a, b)| a - b)
                    .collect();
                norm(&d)
            })
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(1e-3), err(5e-4));
    let ratio = e1 / e2;
    assert!(ratio > 1.6 && ratio < 2.6, "error ratio {ratio} ({e1:e} vs {e2:e})");
}

#[test]
fn correction_and_flow_residuals_are_order_h() {
    let plant = paper_plant(1.0);
    let gains = paper_gains(5.0);
    let r1 = residual_report(&run(1.0, 5.0, 1e-3, 20.0), &plant, &gains).unwrap();
    let r2 = residual_report(&run(1.0, 5.0, 5e-4, 20.0), &plant, &gains).unwrap();
    assert!(r1.passes(1e-2, 1e-9), "{r1:?}");
    for (a, b) in [
        (r1.max_zeta_rate, r2.max_zeta_rate),
        (r1.max_z_rate, r2.max_z_rate),
        (r1.max_flow_abs, r2.max_flow_abs),
    ] {
        let ratio = a / b;
        assert!((ratio - 2.0).abs() < 0.3, "ratio {ratio}");
    }
    // first-order Euler terms are small compared with the signals themselves
    assert!(r1.max_flow_rel < 1e-3);
}

#[test]
fn zeta_is_continuous_away_from_jumps() {
    let trace = run(1.0, 5.0, 1e-3, 20.0);
    let (tp, d) = (trace.period_steps(), trace.delay_steps());
    let near_jump = |k: usize| {
        let r = k % tp;
        r <= 1 || r + 1 >= tp || r.abs_diff(d) <= 1
    };
    let bound = 1e-3 * 50.0;
    for k in 1..trace.len() {
        if near_jump(k) || near_jump(k - 1) {
            continue;
        }
        let step: Vec<f64> = trace.zeta(k).iter().zip(trace.zeta(k - 1)).map(|(a, b)| a - b).collect();
        assert!(norm(&step) <= bound, "jump of {} at t = {}", norm(&step), trace.t(k));
    }
}

#[test]
fn classical_mode_keeps_predicted_state_under_closed_loop_dynamics() {
    let h = 1e-3;
    let (trace, _) = run_mode(1.0, 5.0, h, 30.0, SimMode::Classical);
    let f = paper_gains(5.0).closed_loop_matrix(&paper_plant(1.0));
    let p = |k: usize| -> Vector {
        Vector::new(trace.x(k).iter().zip(trace.psi(k)).map(|(a, b)| a + b).collect()).unwrap()
    };
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for k in 1..trace.len() - 1 {
        let rate = (&p(k + 1) - &p(k - 1)).scale(0.5 / h);
        worst = worst.max((&rate - &f.mul_vec(&p(k))).norm());
        scale = scale.max(p(k).norm());
    }
    let f2 = &f * &f;
    assert!(worst <= h * f2.frobenius_norm() * scale, "residual {worst:e}");
    for k in 0..trace.len() {
        assert!(trace.eps(k).iter().chain(trace.zeta(k)).all(|&v| v == 0.0));
    }
}

#[test]
fn open_loop_follows_plant_alone() {
    let (trace, _) = run_mode(1.0, 5.0, 1e-3, 10.0, SimMode::OpenLoop);
    let step = &Matrix::identity(2) + &paper_a().scale(1e-3);
    let mut x = paper_x0();
    for k in 0..trace.len() {
        assert!(close(&Vector::new(trace.x(k).to_vec()).unwrap(), &x, 1e-12));
        assert_eq!(trace.u(k), &[0.0]);
        x = step.mul_vec(&x);
    }
}

#[test]
fn zero_delay_runs() {
    let plant = Plant::new(paper_a(), Matrix::from_rows(&[[0.0], [1.0]]).unwrap(), 0.0).unwrap();
    let trace = predictorlab_core::sim::simulate_closed_loop(
        &plant,
        &paper_gains(1.0),
        &config(1e-3, 20.0),
        SimMode::Modified,
    )
    .unwrap();
    let last = trace.len() - 1;
    assert!(norm(trace.x(last)) < 1e-3, "{}", norm(trace.x(last)));
}
