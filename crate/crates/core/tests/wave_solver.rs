use std::f64::consts::E;

use wnc_core::numerics::integrate_gl;
use wnc_core::wave_solver::leapfrog_step;
use wnc_core::{
    dalembert_linear, exact_linear_radiation_field, simulate_radial, simulate_radial_strided, InitialData, MetricModel,
    Quantity, RadialField,
};

const EPS: f64 = 0.1;

fn bump() -> InitialData {
    InitialData::bump(1.0, 0.0, 1.0).unwrap()
}

fn nonlinear() -> MetricModel {
    MetricModel::radial(vec![1.0, 1.0]).unwrap()
}

fn oracle_error(f: &RadialField, data: &InitialData) -> f64 {
    let mut worst = 0.0f64;
    let n = f.n_t - 1;
    let t = f.t_at(n);
    for j in 1..f.n_r {
        let r = f.r_at(j);
        worst = worst.max((f.row(n)[j] / r - dalembert_linear(data, f.epsilon, t, r)).abs());
    }
    worst
}

fn beyond_front(f: &RadialField) -> f64 {
    let mut worst = 0.0f64;
    for n in 0..f.n_t {
        let j0 = ((f.t_at(n) + f.r_support + 2.0 * f.dr) / f.dr).ceil() as usize;
        for v in f.row(n).iter().skip(j0) {
            worst = worst.max(v.abs());
        }
    }
    worst
}

#[test]
fn dalembert_examples() {
    let d = InitialData::bump(1.0, 0.4, 1.0).unwrap();
    for r in [0.05, 0.3, 0.8] {
        assert!((dalembert_linear(&d, EPS, 0.0, r) - EPS * d.u0(r)).abs() < 1e-15);
    }
    assert_eq!(dalembert_linear(&d, EPS, 2.5, 1.2), 0.0);
    assert!(dalembert_linear(&bump(), EPS, 0.5, 0.5).abs() < 1e-16);
}

#[test]
fn radiation_field_examples() {
    let d = InitialData::bump(1.0, 0.6, 1.0).unwrap();
    for q in [-3.0, -1.0, 1.0, 2.0] {
        assert_eq!(exact_linear_radiation_field(&d, q), 0.0);
    }
    assert!((exact_linear_radiation_field(&bump(), 0.0) - 0.5 / E).abs() < 1e-15);
    let total = integrate_gl(&|q| exact_linear_radiation_field(&d, q), -1.0, 1.0, 400);
    assert!(total.abs() < 1e-10, "{total}");
}

#[test]
fn zero_data_stays_zero() {
    let d = InitialData::bump(0.0, 0.0, 1.0).unwrap();
    let f = simulate_radial(&nonlinear(), &d, EPS, 3.0, 0.02, 0.9).unwrap();
    assert!(f.v.iter().all(|&x| x == 0.0));
}

#[test]
fn flat_run_converges_at_second_order() {
    let data = bump();
    let m = MetricModel::minkowski();
    let coarse = oracle_error(&simulate_radial(&m, &data, EPS, 2.0, 0.02, 0.9).unwrap(), &data);
    let fine = oracle_error(&simulate_radial(&m, &data, EPS, 2.0, 0.01, 0.9).unwrap(), &data);
    let ratio = coarse / fine;
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio} ({coarse:e} -> {fine:e})");
}

#[test]
fn nothing_ahead_of_the_front_on_short_horizons() {
    let data = bump();
    let flat = simulate_radial(&MetricModel::minkowski(), &data, EPS, 2.0, 0.005, 0.95).unwrap();
    assert!(beyond_front(&flat) <= 1e-10, "{:e}", beyond_front(&flat));
    let nl = simulate_radial(&nonlinear(), &data, EPS, 1.0, 0.005, 0.9).unwrap();
    assert!(beyond_front(&nl) <= 1e-10, "{:e}", beyond_front(&nl));
}

#[test]
fn origin_stays_pinned() {
    let f = simulate_radial(&nonlinear(), &bump(), EPS, 3.0, 0.01, 0.9).unwrap();
    assert!((0..f.n_t).all(|n| f.row(n)[0] == 0.0));
}

#[test]
fn leapfrog_runs_backwards() {
    let m = nonlinear();
    let f = simulate_radial(&m, &bump(), EPS, 1.5, 0.01, 0.9).unwrap();
    let lambda2 = (f.dt / f.dr).powi(2);
    let n = f.n_t - 1;
    let mut prev = f.row(n).to_vec();
    let mut cur = f.row(n - 1).to_vec();
    let mut next = vec![0.0; f.n_r];
    for k in (0..n - 1).rev() {
        leapfrog_step(&m, lambda2, f.dr, f.t_at(k + 1), &prev, &cur, &mut next).unwrap();
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    let worst = cur.iter().zip(f.row(0)).fold(0.0f64, |w, (a, b)| w.max((a - b).abs()));
    assert!(worst < 1e-8, "{worst:e}");
}

#[test]
fn flat_field_is_linear_in_amplitude() {
    let m = MetricModel::minkowski();
    let a = simulate_radial(&m, &bump(), EPS, 2.0, 0.02, 0.9).unwrap();
    let b = simulate_radial(&m, &bump(), 2.0 * EPS, 2.0, 0.02, 0.9).unwrap();
    assert!(a.v.iter().zip(&b.v).all(|(x, y)| 2.0 * x == *y));
}

#[test]
fn axis_value_is_the_radial_slope() {
    let f = simulate_radial(&nonlinear(), &bump(), EPS, 2.0, 0.01, 0.9).unwrap();
    for t in [0.3, 1.1, 1.9] {
        let u0 = f.evaluate(t, 0.0, Quantity::U).unwrap();
        let s = f.sample(t, 0.0).unwrap();
        assert!(u0.is_finite());
        assert!((u0 - s.v_r).abs() < 1e-12);
        let near = f.evaluate(t, 1e-3, Quantity::U).unwrap();
        assert!((u0 - near).abs() < 1e-4, "{u0} vs {near}");
    }
}

#[test]
fn flat_evaluation_matches_oracle() {
    let data = InitialData::bump(1.0, 0.5, 1.0).unwrap();
    let f = simulate_radial(&MetricModel::minkowski(), &data, EPS, 3.0, 0.005, 0.9).unwrap();
    for (t, r) in [(0.5, 0.3), (1.7, 1.2), (2.9, 3.1)] {
        let u = f.evaluate(t, r, Quantity::U).unwrap();
        assert!((u - dalembert_linear(&data, EPS, t, r)).abs() < 1e-5);
    }
    for q in [-0.6, 0.0, 0.4] {
        let t = 2.5;
        let trz = f.evaluate(t, t + q, Quantity::Trz).unwrap();
        let want = EPS * (-data.v0_prime(q) + data.v1(q));
        assert!((trz - want).abs() < 1e-4, "q={q}: {trz} vs {want}");
    }
}

#[test]
fn strided_run_matches_full_run() {
    let m = nonlinear();
    let full = simulate_radial(&m, &bump(), EPS, 1.0, 0.02, 0.9).unwrap();
    let strided = simulate_radial_strided(&m, &bump(), EPS, 1.0, 0.02, 0.9, 4).unwrap();
    assert_eq!(strided.dt_stored(), 4.0 * strided.dt);
    assert!((strided.t_max() - 1.0).abs() < 1e-12);
    for r in [0.1, 0.7, 1.4] {
        let a = full.evaluate(1.0, r, Quantity::U).unwrap();
        let b = strided.evaluate(1.0, r, Quantity::U).unwrap();
        assert!((a - b).abs() < 1e-5, "r={r}: {a} vs {b}");
    }
}

#[test]
fn out_of_grid_queries_fail() {
    let f = simulate_radial(&nonlinear(), &bump(), EPS, 1.0, 0.02, 0.9).unwrap();
    assert!(f.evaluate(1.5, 0.2, Quantity::U).is_err());
    assert!(f.evaluate(0.5, f.r_max() + 0.1, Quantity::U).is_err());
}
