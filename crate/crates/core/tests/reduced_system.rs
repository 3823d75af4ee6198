use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wnc_core::reduced_system::uniform_grid;
use wnc_core::{
    derive_ai, derive_ui, exact_linear_radiation_field, gauge_map, gauge_map_inverse, normalized_profiles,
    reduced_residual, reduced_solution, scattering_from_limits, u_hat_profile, GaugeMap, GridFunction1D, InitialData,
    MultiIndexWord, ScatteringData,
};

const R: f64 = 1.0;

fn oracle_profile(n: usize) -> GridFunction1D {
    let data = InitialData::bump(1.0, 0.5, R).unwrap();
    GridFunction1D::from_fn(
        -4.0,
        R,
        n,
        |q| exact_linear_radiation_field(&data, q),
        Some(f64::NEG_INFINITY),
        Some(R),
    )
    .unwrap()
}

fn smooth_profile() -> GridFunction1D {
    GridFunction1D::from_fn(
        -6.0,
        R,
        1401,
        |q| {
            if q < R {
                (1.0 - q) * (1.0 - q) * (0.7 * q).sin()
            } else {
                0.0
            }
        },
        None,
        Some(R),
    )
    .unwrap()
}

fn data_from(a_hat: GridFunction1D) -> ScatteringData {
    let a1 = a_hat.map(|_, _| -2.0).unwrap();
    ScatteringData {
        a_raw: a_hat.clone(),
        a_hat,
        a1,
        epsilon: 0.1,
        delta: 0.05,
        r_support: R,
    }
}

#[test]
fn reduced_solution_examples() {
    assert_eq!(reduced_solution(-2.0, 0.0, 1.0, 5.0), (-2.0, 0.0));
    let (mu, uq) = reduced_solution(-2.0, 0.5, 1.0, 2.0);
    assert!((mu + 1.21306131942527).abs() < 1e-12);
    assert!((uq - 0.824360635350064).abs() < 1e-12);
}

proptest! {
    #[test]
    fn product_is_conserved(a1 in -3.0f64..-1.0, a2 in -1.0f64..1.0, g in -2.0f64..2.0, s in 0.0f64..10.0) {
        let (mu, uq) = reduced_solution(a1, a2, g, s);
        prop_assert!((mu * uq - a1 * a2).abs() < 1e-12);
    }

    #[test]
    fn gauge_round_trip(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amp = rng.gen_range(0.0..0.8);
        let k = rng.gen_range(0.2..2.0);
        let a1 = GridFunction1D::from_fn(-20.0, 3.0, 801, |q| -2.0 + amp * (k * q).sin(), None, None).unwrap();
        let map = GaugeMap::new(&a1, R).unwrap();
        let q = rng.gen_range(-15.0..2.5);
        let back = map.inverse(map.forward(q).unwrap()).unwrap();
        prop_assert!((back - q).abs() < 1e-9, "q = {q}, back = {back}");
    }
}

#[test]
fn hundred_random_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a1 = GridFunction1D::from_fn(-20.0, 3.0, 1001, |q| -2.0 + 0.6 * (0.8 * q).cos(), None, None).unwrap();
    for _ in 0..100 {
        let q = rng.gen_range(-18.0..2.9);
        let rho = gauge_map(&a1, R, q).unwrap();
        assert!((gauge_map_inverse(&a1, R, rho).unwrap() - q).abs() < 1e-9);
    }
}

#[test]
fn gauge_map_constant_cases() {
    let m2 = GridFunction1D::from_fn(-5.0, 3.0, 41, |_| -2.0, None, None).unwrap();
    let m1 = GridFunction1D::from_fn(-5.0, 3.0, 41, |_| -1.0, None, None).unwrap();
    for q in [-4.5, -1.0, 0.0, 0.7, 2.0] {
        assert!((gauge_map(&m2, R, q).unwrap() - q).abs() < 1e-13);
        assert!((gauge_map(&m1, R, q).unwrap() - (2.0 * q - 2.0 * R)).abs() < 1e-12);
    }
}

#[test]
fn normalized_profile_examples() {
    let a = smooth_profile();
    let sd = data_from(a.clone());
    for (g, s) in [(0.0, 3.0), (1.5, 0.0)] {
        let (mu, uq) = normalized_profiles(&sd, g, s).unwrap();
        assert!(mu.values().iter().all(|&m| m == -2.0));
        assert_eq!(uq.values(), a.values());
    }
    let half = GridFunction1D::from_fn(-1.0, R, 5, |_| 0.5, None, None).unwrap();
    let (mu, _) = normalized_profiles(&data_from(half), 1.0, 2.0).unwrap();
    assert!((mu.values()[0] + 1.21306131942527).abs() < 1e-12);
}

#[test]
fn u_hat_profile_examples() {
    let sd = data_from(oracle_profile(1001));
    assert_eq!(u_hat_profile(&sd, 1.0, 0.3, R).unwrap(), 0.0);
    assert_eq!(u_hat_profile(&sd, 1.0, 0.3, 2.0).unwrap(), 0.0);
    assert!(u_hat_profile(&sd, 0.0, 0.0, -R).unwrap().abs() < 1e-8);

    let ones = GridFunction1D::from_fn(0.0, R, 11, |_| 1.0, None, None).unwrap();
    let sd = data_from(ones);
    assert!((u_hat_profile(&sd, 0.7, 0.0, 0.0).unwrap() + R).abs() < 1e-12);
}

#[test]
fn scattering_from_limits_identities() {
    let a = smooth_profile();
    let a1 = a.map(|_, _| -2.0).unwrap();
    let hat = scattering_from_limits(&a, &a1, R).unwrap();
    for &q in a.q_grid() {
        assert!((hat.value(q).unwrap() - a.value(q).unwrap()).abs() < 1e-12);
    }
    let zero = a.map(|_, _| 0.0).unwrap();
    assert!(scattering_from_limits(&zero, &a1, R)
        .unwrap()
        .values()
        .iter()
        .all(|&v| v == 0.0));

    let data = InitialData::bump(1.0, 0.5, R).unwrap();
    let lin = oracle_profile(2001);
    let hat = scattering_from_limits(&lin, &lin.map(|_, _| -2.0).unwrap(), R).unwrap();
    for &q in hat.q_grid() {
        assert!((hat.value(q).unwrap() - exact_linear_radiation_field(&data, q)).abs() < 1e-6);
    }
}

#[test]
fn translation_and_rotation_words_vanish_on_radial_data() {
    let a = smooth_profile();
    for w in ["D", "S D", "B2 D", "O12", "O23", "O13"] {
        let word: MultiIndexWord = w.parse().unwrap();
        assert!(derive_ai(&a, &word).unwrap().is_empty(), "{w}");
    }
}

#[test]
fn boost_term_matches_hand_formula() {
    let a = smooth_profile();
    let terms = derive_ai(&a, &"B1".parse().unwrap()).unwrap();
    let w = [0.6, 0.0, 0.8];
    for q in [-4.0, -1.3, 0.0, 0.5] {
        let want = 2.0 * w[0] * (q * a.derivative(q).unwrap() + 2.0 * a.value(q).unwrap());
        assert!((terms.evaluate(q, &w).unwrap() - want).abs() < 1e-10, "q={q}");
    }
}

#[test]
fn derived_terms_vanish_beyond_support() {
    let a = smooth_profile();
    for w in ["", "S", "B1", "S B2", "B1 B3", "S S"] {
        let terms = derive_ai(&a, &w.parse().unwrap()).unwrap();
        for q in [R, 1.3, 4.0] {
            assert_eq!(terms.evaluate(q, &[0.0, 0.6, 0.8]).unwrap(), 0.0, "{w} at {q}");
        }
    }
}

#[test]
fn derive_ai_commutes_with_doubling() {
    let a = smooth_profile();
    let doubled = a.scale(2.0);
    for w in ["", "S", "B1", "S B3"] {
        let word: MultiIndexWord = w.parse().unwrap();
        assert_eq!(
            derive_ai(&doubled, &word).unwrap(),
            derive_ai(&a, &word).unwrap().scale(2.0),
            "{w}"
        );
    }
}

#[test]
fn derive_ai_is_additive() {
    let a = smooth_profile();
    let b = GridFunction1D::from_fn(
        -6.0,
        R,
        1401,
        |q| if q < R { (R - q).powi(3) * (-q * q).exp() } else { 0.0 },
        None,
        Some(R),
    )
    .unwrap();
    let sum = a
        .with_values(a.values().iter().zip(b.values()).map(|(x, y)| x + y).collect(), None)
        .unwrap();
    let w = [0.0, 0.6, 0.8];
    for word in ["S", "B2"] {
        let word: MultiIndexWord = word.parse().unwrap();
        let (ta, tb, ts) = (
            derive_ai(&a, &word).unwrap(),
            derive_ai(&b, &word).unwrap(),
            derive_ai(&sum, &word).unwrap(),
        );
        for q in [-5.0, -2.2, 0.1, 0.9] {
            let lhs = ts.evaluate(q, &w).unwrap();
            let rhs = ta.evaluate(q, &w).unwrap() + tb.evaluate(q, &w).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}

#[test]
fn compatibility_at_initial_slice() {
    let sd = data_from(smooth_profile());
    let u0 = derive_ui(&sd, 1.0, 0.0, &MultiIndexWord::empty()).unwrap();
    let a0 = derive_ai(&sd.a_hat, &MultiIndexWord::empty()).unwrap();
    let w = [1.0, 0.0, 0.0];
    let h = 1e-4;
    for q in [-5.0, -3.1, -0.4, 0.6] {
        let duq = (u0.evaluate(q + h, &w).unwrap() - u0.evaluate(q - h, &w).unwrap()) / (2.0 * h);
        assert!((2.0 * duq + a0.evaluate(q, &w).unwrap()).abs() < 1e-6, "q={q}");
    }
}

fn family_tables(levels: usize, g: f64) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let qs = uniform_grid(-3.0, 1.0, 21);
    let s = uniform_grid(1.0, 2.6, levels);
    let mut mu = Vec::new();
    let mut uq = Vec::new();
    for &sk in &s {
        let (m, u): (Vec<f64>, Vec<f64>) = qs
            .iter()
            .map(|&q| reduced_solution(-2.0 + 0.5 * q.sin(), 0.8 * q.cos(), g, sk))
            .unzip();
        mu.push(m);
        uq.push(u);
    }
    (s, mu, uq)
}

#[test]
fn residuals_converge_at_second_order() {
    let (s, mu, uq) = family_tables(9, 1.5);
    let (_, coarse) = reduced_residual(&s, &mu, &uq, 1.5).unwrap();
    let (s, mu, uq) = family_tables(17, 1.5);
    let (_, fine) = reduced_residual(&s, &mu, &uq, 1.5).unwrap();
    let ratio = coarse / fine;
    assert!((ratio - 4.0).abs() <= 0.8, "ratio {ratio}");
}

#[test]
fn stationary_solutions_have_zero_residual() {
    let s = uniform_grid(0.0, 1.0, 5);
    let mu = vec![vec![-2.0; 7]; 5];
    let uq = vec![vec![0.0; 7]; 5];
    assert_eq!(reduced_residual(&s, &mu, &uq, 1.0).unwrap(), (0.0, 0.0));

    let sd = data_from(smooth_profile());
    let (mut mus, mut uqs) = (Vec::new(), Vec::new());
    for &sk in &s {
        let (m, u) = normalized_profiles(&sd, 0.0, sk).unwrap();
        mus.push(m.values().to_vec());
        uqs.push(u.values().to_vec());
    }
    let (r1, r2) = reduced_residual(&s, &mus, &uqs, 0.0).unwrap();
    assert!(r1 < 1e-12 && r2 < 1e-12);
}

#[test]
fn mu_hat_is_normalized_at_zero() {
    let sd = data_from(smooth_profile());
    for g in [-1.0, 0.5, 2.0] {
        let (mu, _) = normalized_profiles(&sd, g, 0.0).unwrap();
        assert!(mu.values().iter().all(|&m| m == -2.0));
    }
}
