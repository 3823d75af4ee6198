use proptest::prelude::*;
use wnc_core::geometry::sphere_rule;
use wnc_core::kirchhoff::{
    affine_time, backward_representation, catalog, cubic_time, inhomogeneous_part, limit_geometry, linear_part,
    phi_form_difference, plane_wave, quadratic, remainder_budget, remainder_integral,
};

fn japanese(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

fn cos_case_error(degree: usize) -> f64 {
    let s = plane_wave([1.0, 0.0, 0.0]);
    let v = backward_representation(&s, 1.0, &[0.2, 0.0, 0.0], 4.0, &sphere_rule(degree).unwrap(), 64).unwrap();
    (v - (-0.8f64).cos()).abs()
}

#[test]
fn plane_wave_example() {
    assert!(cos_case_error(24) < 1e-6, "{:e}", cos_case_error(24));
    assert!((0.696707 - (-0.8f64).cos()).abs() < 1e-6);
}

#[test]
fn plane_wave_converges_under_refinement() {
    let coarse = cos_case_error(6);
    let fine = cos_case_error(12);
    assert!(coarse / fine >= 3.5, "{coarse:e} -> {fine:e}");
}

#[test]
fn cubic_example_and_split() {
    let s = cubic_time();
    let sp = sphere_rule(24).unwrap();
    let x = [1.0, 0.0, 0.0];
    let whole = backward_representation(&s, 2.0, &x, 10.0, &sp, 64).unwrap();
    assert!((whole - 8.0).abs() < 1e-8, "{whole}");
    let lin = linear_part(&s, 2.0, &x, 10.0, &sp).unwrap();
    let inh = inhomogeneous_part(&s, 2.0, &x, 10.0, &sp, 64).unwrap();
    assert!((lin + inh - 8.0).abs() < 1e-8);
}

proptest! {
    #[test]
    fn split_is_bitwise_consistent(
        case in 0usize..5,
        t in 0.0f64..3.0,
        span in 0.5f64..5.0,
        x in proptest::array::uniform3(-1.0f64..1.0),
        degree in 2usize..20,
        nodes in 1usize..24,
    ) {
        let s = &catalog()[case];
        let sp = sphere_rule(degree).unwrap();
        let whole = backward_representation(s, t, &x, t + span, &sp, nodes).unwrap();
        let parts = linear_part(s, t, &x, t + span, &sp).unwrap() + inhomogeneous_part(s, t, &x, t + span, &sp, nodes).unwrap();
        prop_assert_eq!(whole.to_bits(), parts.to_bits());
    }

    #[test]
    fn affine_time_is_exact_at_any_degree(t in -2.0f64..2.0, span in 0.1f64..10.0, degree in 2usize..30) {
        let s = affine_time();
        let sp = sphere_rule(degree).unwrap();
        let x = [0.3, -0.1, 0.5];
        prop_assert!((backward_representation(&s, t, &x, t + span, &sp, 4).unwrap() - t).abs() < 1e-12);
        prop_assert!((linear_part(&s, t, &x, t + span, &sp).unwrap() - t).abs() < 1e-12);
        prop_assert_eq!(inhomogeneous_part(&s, t, &x, t + span, &sp, 4).unwrap(), 0.0);
    }
}

#[test]
fn free_cases_have_no_inhomogeneous_part() {
    let sp = sphere_rule(12).unwrap();
    for s in [plane_wave([0.0, 0.6, 0.8]), quadratic(3.0)] {
        assert_eq!(
            inhomogeneous_part(&s, 0.5, &[0.1, 0.2, 0.0], 3.0, &sp, 16).unwrap(),
            0.0
        );
    }
}

#[test]
fn polynomial_cases_are_exact() {
    let sp = sphere_rule(8).unwrap();
    let x = [0.4, -0.2, 0.1];
    for s in [quadratic(3.0), quadratic(1.0)] {
        let exact = (s.phi)(1.5, &x);
        let v = backward_representation(&s, 1.5, &x, 5.0, &sp, 8).unwrap();
        assert!((v - exact).abs() < 1e-10, "{}: {v} vs {exact}", s.name());
    }
}

#[test]
fn representation_does_not_depend_on_t_end() {
    let sp = sphere_rule(24).unwrap();
    let t = 1.5;
    let x = [0.5, 0.0, 0.0];
    for s in catalog() {
        let vals: Vec<f64> = [4.0 * t, 8.0 * t, t * t * t]
            .iter()
            .map(|&big| backward_representation(&s, t, &x, big, &sp, 64).unwrap())
            .collect();
        let spread = vals.iter().fold(0.0f64, |m, v| m.max((v - vals[0]).abs()));
        assert!(spread < 1e-6, "{}: {vals:?}", s.name());
    }
}

#[test]
fn sampler_gradients_are_consistent() {
    let probes = [
        (0.3, [0.1, 0.2, -0.4]),
        (2.0, [1.0, 0.0, 0.5]),
        (-1.0, [0.0, -0.7, 0.2]),
    ];
    for s in catalog() {
        assert!(s.gradient_mismatch(&probes, 1e-5) < 1e-7, "{}", s.name());
    }
}

#[test]
fn bad_times_are_rejected() {
    let sp = sphere_rule(4).unwrap();
    assert!(backward_representation(&affine_time(), 2.0, &[0.0; 3], 2.0, &sp, 4).is_err());
    assert!(inhomogeneous_part(&affine_time(), 0.0, &[0.0; 3], 1.0, &sp, 0).is_err());
    let limited = affine_time().with_domain(|t, _| t < 3.0);
    assert!(linear_part(&limited, 0.0, &[0.0; 3], 5.0, &sp).is_err());
}

#[test]
fn phi_form_examples() {
    let sp = sphere_rule(24).unwrap();
    let s = plane_wave([1.0, 0.0, 0.0]);
    let at_origin = phi_form_difference(&s, 1.0, &[0.0; 3], 4.0, &sp).unwrap();
    assert!(at_origin.difference < 1e-12);
    assert_eq!(at_origin.bound, 0.0);

    let x = [0.2, 0.0, 0.0];
    let d = phi_form_difference(&s, 1.0, &x, 4.0, &sp).unwrap();
    assert!(d.difference <= 2.0 * 0.2);
    let d32 = phi_form_difference(&s, 1.0, &x, 4.0, &sphere_rule(32).unwrap()).unwrap();
    assert!((d.difference - d32.difference).abs() < 1e-8);

    let d = phi_form_difference(&affine_time(), 1.0, &x, 4.0, &sp).unwrap();
    assert!(d.difference <= 0.2 + 1e-12);
}

#[test]
fn limit_geometry_examples() {
    let g = limit_geometry(10.0, &[5.0, 0.0, 0.0], 1000.0, &[0.0, 0.0, 1.0]);
    assert!((g.norm_y - 990.01263).abs() < 1e-5);
    assert!((g.t_minus_norm_y - 10.0).abs() <= 2.0 / 10.0);
    assert!(g.direction_error <= 2.0 * 10.0 / 1000.0);
    assert!((g.direction_error - 5.05e-3).abs() < 1e-5);
    let z = limit_geometry(3.0, &[0.0; 3], 27.0, &[0.6, 0.0, 0.8]);
    assert!((z.t_minus_norm_y - 3.0).abs() < 1e-13);
    assert!(z.direction_error < 1e-15);
}

#[test]
fn limit_geometry_rates() {
    let x = [0.3, 0.4, 0.0];
    let theta = [0.0, 0.6, 0.8];
    let xt = 0.4 * 0.6;
    for t in [10.0, 20.0, 40.0] {
        let x = [x[0] * t / 2.0, x[1] * t / 2.0, 0.0];
        let g = limit_geometry(t, &x, t * t * t, &theta);
        assert!((g.t_minus_norm_y - (t + xt * t / 2.0)).abs() <= 2.0 / t);
        assert!(g.direction_error <= 4.0 / (t * t));
    }
}

#[test]
fn remainder_examples() {
    assert_eq!(remainder_budget(3.0, &[1.0, 0.0, 0.0], 10.0, 0.0, 1.0, 1.0, 0.0), 0.0);
    let v = remainder_integral(10.0, 990.0, 2.0);
    assert!((v - 2.0 * (japanese(990.0) / japanese(10.0)).ln()).abs() < 1e-14);
    assert!((remainder_integral(10.0, 990.0, 4.0) - 1.0 / 101.0).abs() < 1e-15);
    let lin_only = remainder_budget(3.0, &[0.5, 0.0, 0.0], 27.0, 0.0, 1.0, 1.0, 2.0);
    assert_eq!(lin_only, 1.0);
}

#[test]
fn remainder_integral_bounds_the_integral() {
    let direct = |t: f64, tt: f64, g1: f64| {
        let (a, b) = (t * t, tt * tt);
        let n = 20000;
        let h = (b - a) / n as f64;
        (0..n)
            .map(|k| (1.0 + a + (k as f64 + 0.5) * h).powf(-0.5 * g1) * h)
            .sum::<f64>()
    };
    for g1 in [1.0, 2.0, 3.0] {
        let exact = direct(2.0, 30.0, g1);
        assert!(remainder_integral(2.0, 30.0, g1) >= exact * (1.0 - 1e-6), "γ₁ = {g1}");
    }
}
