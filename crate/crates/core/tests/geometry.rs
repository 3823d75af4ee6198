use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wnc_core::{
    angular_derivative, evaluate_g, exact_linear_radiation_field, sphere_rule, spherical_mean_reduction,
    AngularPolynomial, InitialData, MetricModel, Vec3,
};

fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// `∫_{S²} ω₁^a ω₂^b ω₃^c dS`.
fn monomial_moment(a: u32, b: u32, c: u32) -> f64 {
    if a % 2 == 1 || b % 2 == 1 || c % 2 == 1 {
        return 0.0;
    }
    let (a, b, c) = (a as i64, b as i64, c as i64);
    4.0 * PI * double_factorial(a - 1) * double_factorial(b - 1) * double_factorial(c - 1)
        / double_factorial(a + b + c + 1)
}

fn unit(v: Vec3) -> Vec3 {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

#[test]
fn sphere_rule_small_degree_moments() {
    let rule = sphere_rule(2).unwrap();
    assert!((rule.integrate(&|_| 1.0) - 4.0 * PI).abs() < 1e-12);
    assert!(rule.integrate(&|w| w[0] * w[1]).abs() < 1e-12);
    assert!((rule.integrate(&|w| w[2] * w[2]) - 4.0 * PI / 3.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn sphere_rule_exact_up_to_its_degree(degree in 2usize..32, a in 0u32..16, b in 0u32..16, c in 0u32..16) {
        prop_assume!((a + b + c) as usize <= degree);
        let rule = sphere_rule(degree).unwrap();
        let got = rule.integrate(&|w| w[0].powi(a as i32) * w[1].powi(b as i32) * w[2].powi(c as i32));
        prop_assert!((got - monomial_moment(a, b, c)).abs() < 1e-10, "got {got}");
    }

    #[test]
    fn quadrature_of_reduced_polynomials(coeffs in proptest::collection::vec(-2.0f64..2.0, 10)) {
        let monos = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (2, 0, 0), (1, 1, 0), (0, 1, 1), (3, 0, 0), (1, 2, 1), (2, 2, 0)];
        let p = AngularPolynomial::from_terms(monos.iter().copied().zip(coeffs.iter().copied()));
        let rule = sphere_rule(p.degree().max(2) as usize).unwrap();
        let exact: f64 = p.terms().map(|(&(a, b, c), &k)| k * monomial_moment(a, b, c)).sum();
        prop_assert!((rule.integrate(&|w| p.evaluate(w)) - exact).abs() < 1e-10);
    }

    #[test]
    fn angular_derivative_matches_tangential_difference(
        coeffs in proptest::collection::vec(-1.0f64..1.0, 6),
        dir in proptest::array::uniform3(-1.0f64..1.0),
        axis in 0usize..3,
    ) {
        let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        prop_assume!(norm > 0.1);
        let w = unit(dir);
        let monos = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (2, 1, 0), (0, 1, 2), (1, 1, 1)];
        let p = AngularPolynomial::from_terms(monos.iter().copied().zip(coeffs.iter().copied()));
        let d = angular_derivative(&p, axis);
        let h = 1e-5;
        let shifted = |s: f64| {
            let mut x = w;
            x[axis] += s;
            p.evaluate(&unit(x))
        };
        let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
        prop_assert!((d.evaluate(&w) - fd).abs() < 1e-7, "{} vs {fd}", d.evaluate(&w));
    }
}

#[test]
fn derivative_of_sphere_relation_vanishes() {
    let sq = |i| AngularPolynomial::omega(i).mul(&AngularPolynomial::omega(i));
    let relation = sq(0).add(&sq(1)).add(&sq(2));
    for i in 0..3 {
        assert!(angular_derivative(&relation, i).is_zero());
    }
}

#[test]
fn derivative_of_omega_squared() {
    let p = AngularPolynomial::monomial((2, 0, 0), 1.0);
    let want = AngularPolynomial::from_terms([((1, 0, 0), 2.0), ((3, 0, 0), -2.0)]);
    assert_eq!(angular_derivative(&p, 0), want);
}

fn permute(g0: &[[f64; 4]; 4], perm: [usize; 3]) -> [[f64; 4]; 4] {
    let idx = |a: usize| if a == 0 { 0 } else { perm[a - 1] + 1 };
    let mut out = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            out[idx(a)][idx(b)] = g0[a][b];
        }
    }
    out
}

#[test]
fn g_is_covariant_under_axis_permutations() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let perms = [[0, 1, 2], [1, 0, 2], [0, 2, 1], [2, 1, 0], [1, 2, 0], [2, 0, 1]];
    for _ in 0..20 {
        let mut g0 = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in a..4 {
                if a + b > 0 {
                    let x = rng.gen_range(-1.0..1.0);
                    g0[a][b] = x;
                    g0[b][a] = x;
                }
            }
        }
        let m = MetricModel::new(vec![1.0], g0, false).unwrap();
        let w = unit([
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ]);
        let base = evaluate_g(&m, &w).unwrap();
        for p in perms {
            let mp = MetricModel::new(vec![1.0], permute(&g0, p), false).unwrap();
            let mut pw = [0.0; 3];
            for i in 0..3 {
                pw[p[i]] = w[i];
            }
            assert!((evaluate_g(&mp, &pw).unwrap() - base).abs() < 1e-14);
        }
    }
}

#[test]
fn reduction_matches_sphere_quadrature_on_oracle_profile() {
    let data = InitialData::bump(1.0, 0.5, 1.0).unwrap();
    let profile = |q: f64| exact_linear_radiation_field(&data, q);
    let rule = sphere_rule(120).unwrap();
    for (t, r) in [(0.3, 0.5), (0.0, 0.9), (1.2, 0.4)] {
        let reduced = spherical_mean_reduction(&profile, t, r).unwrap();
        let direct = rule.integrate(&|w| profile(-t + r * w[2]));
        assert!((reduced - direct).abs() < 1e-6, "t={t} r={r}: {reduced} vs {direct}");
    }
}

#[test]
fn reduction_simple_profiles() {
    assert!((spherical_mean_reduction(&|_q: f64| 1.0, 2.0, 0.3).unwrap() - 4.0 * PI).abs() < 1e-12);
    assert!(spherical_mean_reduction(&|q: f64| q, 0.0, 0.8).unwrap().abs() < 1e-13);
    assert!(spherical_mean_reduction(&|_q: f64| 1.0, 1.0, -0.5).is_err());
}
