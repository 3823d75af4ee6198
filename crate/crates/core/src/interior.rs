//! Interior asymptotics: the spherical-integral prediction, its check
//! against a simulated field, the spherical-means decay and the vanishing
//! criteria.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eikonal::fit_tail_exponent;
use crate::error::{Error, Result};
use crate::geometry::{
    evaluate_g, norm, null_condition_satisfied, spherical_mean_reduction, MetricModel, SphereRule, Vec3,
};
use crate::numerics::{fit_log_log, fit_plane, japanese, pairwise_sum};
use crate::reduced_system::{
    derive_ai, u_hat_profile, GridFunction1D, Letter, MultiIndexWord, ScatteringData, TermList,
};
use crate::wave_solver::{Quantity, RadialField};

/// Margin on fitted slopes before a decay threshold counts as met.
pub const SLOPE_BAND: f64 = 0.3;

/// `−(ε/4π) ∫_{S²} terms(x·θ − t, θ) dS_θ`.
///
/// Radial term lists are reduced to one-dimensional integrals; the others
/// use `sphere`.
pub fn interior_prediction(terms: &TermList, epsilon: f64, t: f64, x: &Vec3, sphere: &SphereRule) -> Result<f64> {
    let r = norm(x);
    if !(r < t) {
        return Err(Error::InputDomain(format!("need |x| < t, got |x| = {r}, t = {t}")));
    }
    let integral = if terms.is_radial() {
        let mut parts = Vec::with_capacity(terms.len());
        for term in &terms.terms {
            let c = term.angular.coefficient((0, 0, 0));
            let mean = if r == 0.0 {
                4.0 * PI * term.profile.value(-t)?
            } else {
                spherical_mean_reduction(&term.profile, t, r)?
            };
            parts.push(c * mean);
        }
        pairwise_sum(&parts)
    } else {
        sphere_path(terms, t, x, sphere)?
    };
    Ok(-epsilon / (4.0 * PI) * integral)
}

/// Same integral through the sphere rule regardless of symmetry.
pub fn interior_prediction_sphere(
    terms: &TermList,
    epsilon: f64,
    t: f64,
    x: &Vec3,
    sphere: &SphereRule,
) -> Result<f64> {
    let r = norm(x);
    if !(r < t) {
        return Err(Error::InputDomain(format!("need |x| < t, got |x| = {r}, t = {t}")));
    }
    Ok(-epsilon / (4.0 * PI) * sphere_path(terms, t, x, sphere)?)
}

fn sphere_path(terms: &TermList, t: f64, x: &Vec3, sphere: &SphereRule) -> Result<f64> {
    let mut vals = Vec::with_capacity(sphere.len());
    for (th, w) in sphere.nodes.iter().zip(&sphere.weights) {
        let q = x[0] * th[0] + x[1] * th[1] + x[2] * th[2] - t;
        vals.push(w * terms.evaluate(q, th)?);
    }
    Ok(pairwise_sum(&vals))
}

/// Whether `[−t−r, −t+r]` lies on the tabulated grids of `terms`; `None`
/// when a profile would need an absent tail model.
pub fn prediction_coverage(terms: &TermList, t: f64, r: f64) -> Option<bool> {
    let mut tabulated = true;
    for term in &terms.terms {
        if -t - r < term.profile.lower() {
            term.profile.tail_exponent?;
            tabulated = false;
        }
    }
    Some(tabulated)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerificationRow {
    pub t: f64,
    pub r: f64,
    pub u_num: f64,
    pub prediction: f64,
    pub abs_err: f64,
    /// `⟨t−r⟩⁻²`.
    pub bound_ref: f64,
}

/// Where [`verify_interior`] samples: `r_points + 1` radii evenly spaced on
/// `[0, t − t^γ]` for every `t` in `t_slices`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub t_slices: Vec<f64>,
    pub r_points: usize,
    /// Errors at or below this are treated as zero in the fits.
    pub zero_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub word: String,
    pub gamma: f64,
    pub rows: Vec<VerificationRow>,
    /// Slope of `ln|err|` against `ln⟨t−r⟩` at fixed `t`.
    pub fitted_exponent_q: f64,
    /// Slope of `ln|err|` against `ln t` at fixed `t − r`; NaN with a
    /// single slice.
    pub fitted_exponent_t: f64,
    pub fit_residual: f64,
    /// Every row with `t − r ≥ 3R` has `|err| < |prediction|`.
    pub below_leading_term: bool,
    /// Both sides vanish on every row.
    pub trivial: bool,
    pub passed: bool,
    pub warnings: Vec<String>,
}

fn field_value(field: &RadialField, word: &MultiIndexWord, t: f64, r: f64) -> Result<f64> {
    let s = field.sample(t, r)?;
    Ok(if word.is_empty() { s.u } else { t * s.u_t + r * s.u_r })
}

/// Compares `Z^I u` from the field with the prediction from `A_I` on
/// `r < t − t^γ`, for `I` empty or `S`.
pub fn verify_interior(
    field: &RadialField,
    sd: &ScatteringData,
    word: &MultiIndexWord,
    gamma: f64,
    spec: &SampleSpec,
    sphere: &SphereRule,
) -> Result<VerificationReport> {
    if !(word.is_empty() || word.letters == [Letter::S]) {
        return Err(Error::InputDomain(format!(
            "only the empty word and S are checked against the field, got '{word}'"
        )));
    }
    if !(gamma > 0.5 && gamma < 1.0) {
        return Err(Error::InputDomain(format!("gamma must lie in (1/2, 1), got {gamma}")));
    }
    if spec.t_slices.is_empty() || spec.r_points == 0 {
        return Err(Error::InputDomain("empty sample lattice".into()));
    }
    let t_start = (sd.delta / sd.epsilon).exp();
    let terms = derive_ai(&sd.a_hat, word)?;
    let mut warnings = Vec::new();
    let mut points = Vec::new();
    for &t in &spec.t_slices {
        if t < t_start {
            return Err(Error::InputDomain(format!(
                "sample time {t} precedes e^(delta/eps) = {t_start}"
            )));
        }
        let r_hi = t - t.powf(gamma);
        if !(r_hi > 0.0) {
            return Err(Error::InputDomain(format!(
                "region r < t - t^gamma is empty at t = {t}"
            )));
        }
        if !field.contains(t, r_hi) {
            return Err(Error::Coverage(format!(
                "field horizon {} does not reach t = {t}",
                field.t_max()
            )));
        }
        match prediction_coverage(&terms, t, r_hi) {
            None => {
                return Err(Error::Coverage(format!(
                    "profiles start at q = {} and have no tail model; t = {t} needs q = {}",
                    sd.a_hat.lower(),
                    -t - r_hi
                )))
            }
            Some(false) => warnings.push(format!("t = {t}: tail model used below q = {}", sd.a_hat.lower())),
            Some(true) => {}
        }
        for j in 0..=spec.r_points {
            points.push((t, r_hi * j as f64 / spec.r_points as f64));
        }
    }
    let rows: Vec<VerificationRow> = points
        .par_iter()
        .map(|&(t, r)| {
            let u_num = field_value(field, word, t, r)?;
            let prediction = interior_prediction(&terms, sd.epsilon, t, &[0.0, 0.0, r], sphere)?;
            Ok(VerificationRow {
                t,
                r,
                u_num,
                prediction,
                abs_err: (u_num - prediction).abs(),
                bound_ref: japanese(t - r).powi(-2),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let trivial = rows
        .iter()
        .all(|w| w.abs_err <= spec.zero_floor && w.prediction.abs() <= spec.zero_floor);
    let kept: Vec<&VerificationRow> = rows.iter().filter(|w| w.abs_err > spec.zero_floor).collect();
    let lq: Vec<f64> = kept.iter().map(|w| japanese(w.t - w.r).ln()).collect();
    let lt: Vec<f64> = kept.iter().map(|w| w.t.ln()).collect();
    let le: Vec<f64> = kept.iter().map(|w| w.abs_err.ln()).collect();
    let (eq, et, res) = if spec.t_slices.len() > 1 {
        match fit_plane(&lq, &lt, &le) {
            Some((_, b1, b2, rms)) => (b1, b2, rms),
            None => (f64::NAN, f64::NAN, f64::NAN),
        }
    } else {
        let xs: Vec<f64> = kept.iter().map(|w| japanese(w.t - w.r)).collect();
        let ys: Vec<f64> = kept.iter().map(|w| w.abs_err).collect();
        let fit = fit_log_log(&xs, &ys, 0.0);
        (fit.slope, f64::NAN, fit.residual)
    };
    let (eq, et, res) = if kept.len() < 2 {
        (f64::NEG_INFINITY, f64::NAN, 0.0)
    } else {
        (eq, et, res)
    };
    let r_support = sd.r_support;
    let below = rows
        .iter()
        .filter(|w| w.t - w.r >= 3.0 * r_support)
        .all(|w| w.abs_err <= spec.zero_floor || w.abs_err < w.prediction.abs());
    let passed = trivial || ((-2.5..=-1.5).contains(&eq) && below);
    Ok(VerificationReport {
        word: word.to_string(),
        gamma,
        rows,
        fitted_exponent_q: eq,
        fitted_exponent_t: et,
        fit_residual: res,
        below_leading_term: below,
        trivial,
        passed,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRow {
    pub t: f64,
    pub u: f64,
    /// `2εÂ(−t)`.
    pub prediction: f64,
    pub relative: f64,
}

/// `u(t, 0)` against `2εÂ(−t)`.
pub fn axis_residuals(field: &RadialField, sd: &ScatteringData, t_samples: &[f64]) -> Result<Vec<AxisRow>> {
    t_samples
        .iter()
        .map(|&t| {
            let u = field.evaluate(t, 0.0, Quantity::U)?;
            let prediction = 2.0 * sd.epsilon * sd.a_hat.value(-t)?;
            Ok(AxisRow {
                t,
                u,
                prediction,
                relative: (u - prediction).abs() / u.abs(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    /// `(t, M(t))`.
    pub rows: Vec<(f64, f64)>,
    pub exponent: f64,
    pub residual: f64,
    pub passed: bool,
}

/// `M(t) = 4π|Û(ε ln t − δ, −2t)|` and its fitted power of `t`.
pub fn spherical_means_decay(sd: &ScatteringData, g: f64, t_samples: &[f64]) -> Result<DecayTable> {
    let t_start = 2.0 * (sd.delta / sd.epsilon).exp();
    let mut rows = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        if t < t_start {
            return Err(Error::InputDomain(format!(
                "sample time {t} precedes 2e^(delta/eps) = {t_start}"
            )));
        }
        let s = sd.epsilon * t.ln() - sd.delta;
        rows.push((t, 4.0 * PI * u_hat_profile(sd, g, s, -2.0 * t)?.abs()));
    }
    let floor = 1e-13 * sd.a_hat.max_abs().max(f64::MIN_POSITIVE);
    let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let fit = fit_log_log(&xs, &ys, floor);
    Ok(DecayTable {
        rows,
        exponent: fit.slope,
        residual: fit.residual,
        passed: fit.slope <= -0.2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub null_condition: bool,
    pub a_min: f64,
    pub a_max: f64,
    pub tau: f64,
    pub hypothesis_a: bool,
    pub g_min: f64,
    pub g_max: f64,
    /// Tail exponent of the signed part of `Â` that (b) needs integrable.
    pub signed_part_exponent: Option<f64>,
    pub hypothesis_b: bool,
    /// `sup|½GÂ|`.
    pub c0: f64,
    /// `C₀/ε + 1`.
    pub b0: f64,
    pub tail_exponent: Option<f64>,
    /// `−1 − B₀ε`.
    pub c_threshold: f64,
    pub hypothesis_c: bool,
    pub verdict: String,
}

fn tail_of(f: &GridFunction1D) -> Option<f64> {
    fit_tail_exponent(f, 0.25, 1e-6)
}

fn meets(exponent: Option<f64>, threshold: f64) -> bool {
    exponent.is_some_and(|p| p + SLOPE_BAND < threshold)
}

/// `(C₀, B₀)` for `Â` and the largest `|G|` on the sphere.
pub fn vanishing_constants(sd: &ScatteringData, g_abs_max: f64) -> (f64, f64) {
    let c0 = 0.5 * g_abs_max * sd.a_hat.max_abs();
    (c0, c0 / sd.epsilon + 1.0)
}

/// Reports which of the sign, integrability and fast-decay hypotheses
/// `Â` meets, and what the vanishing theorem would then say.
pub fn classify_vanishing(sd: &ScatteringData, metric: &MetricModel, sphere: &SphereRule) -> Result<Classification> {
    let a = &sd.a_hat;
    let null_condition = null_condition_satisfied(metric);
    let peak = a.max_abs();
    let a_min = a.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let a_max = a.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tau = 1e-8 * peak;
    let hypothesis_a = a_min >= -tau || a_max <= tau;

    let mut g_min = f64::INFINITY;
    let mut g_max = f64::NEG_INFINITY;
    for w in &sphere.nodes {
        let g = evaluate_g(metric, w)?;
        g_min = g_min.min(g);
        g_max = g_max.max(g);
    }
    let signed_part_exponent = if g_min >= 0.0 {
        tail_of(&a.map(|_, v| v.min(0.0))?)
    } else if g_max <= 0.0 {
        tail_of(&a.map(|_, v| v.max(0.0))?)
    } else {
        None
    };
    let hypothesis_b = (g_min >= 0.0 || g_max <= 0.0) && meets(signed_part_exponent, -1.0);

    let (c0, b0) = vanishing_constants(sd, g_min.abs().max(g_max.abs()));
    let tail_exponent = tail_of(&a.map(|_, v| v.abs())?);
    let c_threshold = -1.0 - b0 * sd.epsilon;
    let hypothesis_c = meets(tail_exponent, c_threshold);

    let met: Vec<&str> = [("a", hypothesis_a), ("b", hypothesis_b), ("c", hypothesis_c)]
        .iter()
        .filter(|(_, m)| *m)
        .map(|(n, _)| *n)
        .collect();
    let verdict = if peak == 0.0 {
        "scattering data vanish identically: consistent with the zero solution".to_string()
    } else if null_condition {
        if met.is_empty() {
            "theorem not applicable: the null condition holds (G = 0)".to_string()
        } else {
            format!(
                "theorem not applicable: the null condition holds (G = 0); hypotheses met formally: {}",
                met.join(", ")
            )
        }
    } else if met.is_empty() {
        "no hypothesis met: consistent with a nonzero solution".to_string()
    } else {
        format!(
            "hypothesis {} met: the theorem then forces A_hat = 0 and u = 0, contradiction: input inconsistent with a true nonzero solution",
            met.join(", ")
        )
    };
    Ok(Classification {
        null_condition,
        a_min,
        a_max,
        tau,
        hypothesis_a,
        g_min,
        g_max,
        signed_part_exponent,
        hypothesis_b,
        c0,
        b0,
        tail_exponent,
        c_threshold,
        hypothesis_c,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub t: f64,
    /// `|(u_t − u_r)(t, t − t^{ν₀})|`.
    pub d1: f64,
    /// `max |u|` over `r ∈ [t − 2t^{ν₀}, t − t^{ν₀}/2]`.
    pub d2: f64,
    /// `|u(t, 0)|`.
    pub d3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub nu0: f64,
    pub b0: f64,
    pub b1: f64,
    pub rows: Vec<ScanRow>,
    pub exponents: [f64; 3],
    /// `−1 − ν₀(1 + B₀ε)`, `−1 − (ν₀B₀ + B₁)ε`, `−1 − B₀ε`.
    pub thresholds: [f64; 3],
    pub satisfied: [bool; 3],
    /// Not every assumption is met, as a nonzero solution requires.
    pub consistent_with_nonzero: bool,
}

const D2_POINTS: usize = 64;

/// Measures the decay rates entering the three pointwise vanishing
/// assumptions, with `B₀` from [`vanishing_constants`] and `B₁ = B₀`.
pub fn assumption_scan(field: &RadialField, sd: &ScatteringData, nu0: f64, t_samples: &[f64]) -> Result<ScanTable> {
    if !(nu0 > 0.0 && nu0 < 1.0) {
        return Err(Error::InputDomain(format!("nu0 must lie in (0, 1), got {nu0}")));
    }
    if t_samples.len() < 2 {
        return Err(Error::InputDomain("need at least two sample times".into()));
    }
    let rows: Vec<ScanRow> = t_samples
        .iter()
        .map(|&t| {
            let w = t.powf(nu0);
            let s1 = field.sample(t, t - w)?;
            let d1 = (s1.u_t - s1.u_r).abs();
            let (lo, hi) = ((t - 2.0 * w).max(0.0), t - 0.5 * w);
            let mut d2 = 0.0f64;
            for k in 0..=D2_POINTS {
                let r = lo + (hi - lo) * k as f64 / D2_POINTS as f64;
                d2 = d2.max(field.evaluate(t, r, Quantity::U)?.abs());
            }
            let d3 = field.evaluate(t, 0.0, Quantity::U)?.abs();
            Ok(ScanRow { t, d1, d2, d3 })
        })
        .collect::<Result<Vec<_>>>()?;
    let (_, b0) = vanishing_constants(sd, field.metric.radial_g().abs());
    let b1 = b0;
    let eps = sd.epsilon;
    let floor = f64::MIN_POSITIVE;
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let fit = |f: &dyn Fn(&ScanRow) -> f64| fit_log_log(&ts, &rows.iter().map(f).collect::<Vec<f64>>(), floor).slope;
    let exponents = [fit(&|r| r.d1), fit(&|r| r.d2), fit(&|r| r.d3)];
    let thresholds = [
        -1.0 - nu0 * (1.0 + b0 * eps),
        -1.0 - (nu0 * b0 + b1) * eps,
        -1.0 - b0 * eps,
    ];
    let satisfied = [0, 1, 2].map(|i| exponents[i] + SLOPE_BAND < thresholds[i]);
    Ok(ScanTable {
        nu0,
        b0,
        b1,
        rows,
        exponents,
        thresholds,
        satisfied,
        consistent_with_nonzero: !satisfied.iter().all(|s| *s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sphere_rule;
    use crate::reduced_system::uniform_grid;
    use crate::wave_solver::{exact_linear_radiation_field, InitialData};

    fn linear_sd() -> ScatteringData {
        let data = InitialData::bump(1.0, 0.5, 1.0).unwrap();
        let q = uniform_grid(-30.0, 1.0, 6201);
        let v: Vec<f64> = q.iter().map(|&q| exact_linear_radiation_field(&data, q)).collect();
        let a = GridFunction1D::new(q.clone(), v, Some(f64::NEG_INFINITY), Some(1.0)).unwrap();
        let a1 = GridFunction1D::new(q, vec![-2.0; 6201], None, None).unwrap();
        ScatteringData {
            a_hat: a.clone(),
            a_raw: a,
            a1,
            epsilon: 0.1,
            delta: 0.05,
            r_support: 1.0,
        }
    }

    #[test]
    fn axis_prediction_is_two_eps_a_hat() {
        let sd = linear_sd();
        let terms = derive_ai(&sd.a_hat, &MultiIndexWord::empty()).unwrap();
        let sp = sphere_rule(8).unwrap();
        let t = 0.3;
        let p = interior_prediction(&terms, 0.1, t, &[0.0; 3], &sp).unwrap();
        assert!((p - 0.2 * sd.a_hat.value(-t).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn linear_spherical_means_vanish() {
        let sd = linear_sd();
        let tab = spherical_means_decay(&sd, 0.0, &[4.0, 8.0, 12.0]).unwrap();
        assert!(tab.rows.iter().all(|r| r.1 <= 1e-10), "{:?}", tab.rows);
    }

    #[test]
    fn classifier_on_linear_data() {
        let sd = linear_sd();
        let sp = sphere_rule(6).unwrap();
        let c = classify_vanishing(&sd, &MetricModel::minkowski(), &sp).unwrap();
        assert!(c.null_condition && !c.hypothesis_a && c.hypothesis_c);
        assert!(c.verdict.starts_with("theorem not applicable"));
    }
}
