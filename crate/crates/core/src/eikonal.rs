//! Outgoing characteristics of the optical function through a simulated
//! field, and the limits `(A, A₁, A₂)` read off along them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{fit_log_log, japanese, lagrange_derivative};
use crate::reduced_system::{scattering_from_limits, GridFunction1D, ScatteringData};
use crate::wave_solver::RadialField;

/// `{t > e^{δ/ε}, r > e^{δ/ε} + 2R + κ(t − e^{δ/ε})}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EikonalRegion {
    pub delta: f64,
    pub epsilon: f64,
    pub r_support: f64,
    pub kappa: f64,
}

impl EikonalRegion {
    pub fn new(delta: f64, epsilon: f64, r_support: f64, kappa: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !(kappa > 0.0 && kappa < 1.0) || !delta.is_finite() || !(r_support > 0.0) {
            return Err(Error::Configuration(format!(
                "invalid region: delta = {delta}, epsilon = {epsilon}, R = {r_support}, kappa = {kappa}"
            )));
        }
        Ok(Self {
            delta,
            epsilon,
            r_support,
            kappa,
        })
    }

    /// `e^{δ/ε}`.
    pub fn t0(&self) -> f64 {
        (self.delta / self.epsilon).exp()
    }

    pub fn boundary_r(&self, t: f64) -> f64 {
        let t0 = self.t0();
        t0 + 2.0 * self.r_support + self.kappa * (t - t0)
    }

    /// Time at which the boundary meets `r − t = q`.
    pub fn launch_time(&self, q: f64) -> f64 {
        self.t0() + (2.0 * self.r_support - q) / (1.0 - self.kappa)
    }

    pub fn slow_time(&self, t: f64) -> f64 {
        self.epsilon * t.ln() - self.delta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub r: f64,
    pub q_r: f64,
    pub mu: f64,
    /// `ε⁻¹ r u`.
    pub u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceEnd {
    Horizon,
    GridBoundary,
}

/// One level set `q = q_label`, sampled on the lattice `t = k·sample_dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicTrace {
    pub q_label: f64,
    pub launch: TraceSample,
    pub samples: Vec<TraceSample>,
    pub sample_dt: f64,
    /// Lattice index of `samples[0]`.
    pub first_index: i64,
    pub end: TraceEnd,
}

impl CharacteristicTrace {
    pub fn last_index(&self) -> i64 {
        self.first_index + self.samples.len() as i64 - 1
    }

    pub fn at_index(&self, k: i64) -> Option<&TraceSample> {
        let i = k - self.first_index;
        if i < 0 {
            None
        } else {
            self.samples.get(i as usize)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    pub sample_dt: f64,
    /// RK4 steps per sample interval.
    pub substeps: usize,
    /// Stop at this time (clipped to the field horizon).
    pub t_end: Option<f64>,
    pub q_r_max: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            sample_dt: 0.1,
            substeps: 2,
            t_end: None,
            q_r_max: 1e3,
        }
    }
}

struct Rhs<'a> {
    field: &'a RadialField,
}

impl Rhs<'_> {
    /// `(dr/dt, d ln q_r/dt, √c, v)` at `(t, r)`.
    fn eval(&self, t: f64, r: f64) -> Result<(f64, f64, f64, f64)> {
        let s = self.field.sample(t, r)?;
        let m = &self.field.metric;
        let c = m.c(s.u);
        if !(c > 0.0) {
            return Err(Error::SpeedDegeneracy { t, r, c });
        }
        let sc = c.sqrt();
        Ok((sc, -m.c_prime(s.u) * s.u_r / (2.0 * sc), sc, s.v))
    }
}

fn record(rhs: &Rhs, q_label: f64, t: f64, r: f64, l: f64, q_r_max: f64) -> Result<TraceSample> {
    let q_r = l.exp();
    if !(q_r > 0.0 && q_r < q_r_max) {
        return Err(Error::Caustic { q_label, t, q_r });
    }
    let (_, _, sc, v) = rhs.eval(t, r)?;
    Ok(TraceSample {
        t,
        r,
        q_r,
        mu: -(1.0 + sc) * q_r,
        u: v / rhs.field.epsilon,
    })
}

/// Integrates `dr/dt = √c(u)`, `d ln q_r/dt = −c'(u) u_r / (2√c)` from the
/// boundary point at `launch_t`, where `q = r − t` and
/// `q_r = (1 − κ)/(√c − κ)`.
pub fn trace_characteristic(
    field: &RadialField,
    region: &EikonalRegion,
    launch_t: f64,
    opts: &TraceOptions,
) -> Result<CharacteristicTrace> {
    if !(field.epsilon > 0.0) {
        return Err(Error::Configuration("tracing needs epsilon > 0".into()));
    }
    if !(opts.sample_dt > 0.0) || opts.substeps == 0 {
        return Err(Error::Configuration(
            "sample_dt must be positive and substeps >= 1".into(),
        ));
    }
    let rhs = Rhs { field };
    let r0 = region.boundary_r(launch_t);
    let q_label = r0 - launch_t;
    if !field.contains(launch_t, r0) {
        return Err(Error::Range { t: launch_t, r: r0 });
    }
    let (_, _, sc0, _) = rhs.eval(launch_t, r0)?;
    let margin = sc0 - region.kappa;
    if !(margin > 1e-8) {
        return Err(Error::LaunchDegeneracy { q_label, margin });
    }
    let mut l = ((1.0 - region.kappa) / margin).ln();
    let launch = record(&rhs, q_label, launch_t, r0, l, opts.q_r_max)?;

    let t_end = opts.t_end.unwrap_or(f64::INFINITY).min(field.t_max());
    let r_limit = field.r_max() - 3.0 * field.dr;
    let dts = opts.sample_dt;
    let first_index = (launch_t / dts).ceil() as i64;
    let mut samples = Vec::new();
    let mut t = launch_t;
    let mut r = r0;
    let mut end = TraceEnd::Horizon;
    let mut k = first_index;
    loop {
        let target = k as f64 * dts;
        if target > t_end + 1e-12 * t_end.max(1.0) {
            break;
        }
        let span = target - t;
        let steps = if span <= 1e-13 {
            0
        } else {
            ((span / dts) * opts.substeps as f64).ceil().max(1.0) as usize
        };
        let h = if steps > 0 { span / steps as f64 } else { 0.0 };
        let mut escaped = false;
        for _ in 0..steps {
            // Speeds stay below 2 for admissible data; keep every stage on the grid.
            if r + 2.0 * h > r_limit {
                escaped = true;
                break;
            }
            let (k1r, k1l, _, _) = rhs.eval(t, r)?;
            let (k2r, k2l, _, _) = rhs.eval(t + 0.5 * h, r + 0.5 * h * k1r)?;
            let (k3r, k3l, _, _) = rhs.eval(t + 0.5 * h, r + 0.5 * h * k2r)?;
            let (k4r, k4l, _, _) = rhs.eval((t + h).min(field.t_max()), r + h * k3r)?;
            r += h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
            l += h / 6.0 * (k1l + 2.0 * k2l + 2.0 * k3l + k4l);
            t += h;
        }
        if escaped {
            end = TraceEnd::GridBoundary;
            break;
        }
        t = target;
        samples.push(record(&rhs, q_label, t.min(field.t_max()), r, l, opts.q_r_max)?);
        k += 1;
    }
    Ok(CharacteristicTrace {
        q_label,
        launch,
        samples,
        sample_dt: dts,
        first_index,
        end,
    })
}

/// Uniform label lattice with spacing `Δq` over `[q_min − 2Δq, R + 2Δq]`,
/// so that the centred stencils reach both ends of `[q_min, R]`.
pub fn label_lattice(q_min: f64, r_support: f64, dq: f64) -> Vec<f64> {
    let bottom = q_min - 2.0 * dq;
    let top = r_support + 2.0 * dq;
    let n = ((top - bottom) / dq).round() as usize;
    (0..=n).map(|i| bottom + i as f64 * dq).collect()
}

/// Traces launched so that their labels are `labels`, in label order.
pub fn trace_family(
    field: &RadialField,
    region: &EikonalRegion,
    labels: &[f64],
    opts: &TraceOptions,
) -> Result<Vec<CharacteristicTrace>> {
    labels
        .par_iter()
        .map(|&q| trace_characteristic(field, region, region.launch_time(q), opts))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    /// Ratio between successive evaluation times.
    pub level_ratio: f64,
    pub levels: usize,
    /// Levels entering the polynomial extrapolation in `1/t`; 2 is one
    /// Richardson step.
    pub extrapolation_levels: usize,
    /// Tolerance on the `[−3, −1]` range of `A₁`.
    pub a1_tolerance: f64,
    /// Share of the label range, from below, used for the tail fit.
    pub tail_window: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            level_ratio: 0.5,
            levels: 3,
            extrapolation_levels: 2,
            a1_tolerance: 0.1,
            tail_window: 0.25,
        }
    }
}

/// Extracted scattering data with the per-level diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub data: ScatteringData,
    pub labels: Vec<f64>,
    /// Evaluation times per label, latest first.
    pub level_times: Vec<Vec<f64>>,
    /// `−½μU_q` per label and level.
    pub a_levels: Vec<Vec<f64>>,
    /// `μ` per label at the common final time.
    pub mu_final: Vec<f64>,
    pub t_final: f64,
    /// `max_q |A(t₀) − A(t₁)|` between the two latest levels.
    pub drift: f64,
    /// Set when some `A₁` leaves `[−3 − τ, −1 + τ]`.
    pub a1_warning: bool,
}

fn pick_levels(k_lo: i64, k_hi: i64, ratio: f64, count: usize) -> Vec<i64> {
    let mut out: Vec<i64> = Vec::new();
    let mut x = k_hi as f64;
    for _ in 0..count {
        let k = x.round() as i64;
        if k < k_lo {
            break;
        }
        if out.last() != Some(&k) {
            out.push(k);
        }
        x *= ratio;
    }
    if out.len() < count.min(2) {
        out.clear();
        let span = (k_hi - k_lo) as f64;
        for m in 0..count {
            let k = k_hi - (span * m as f64 / (count.max(2) - 1) as f64).round() as i64;
            if out.last() != Some(&k) {
                out.push(k);
            }
        }
    }
    out
}

/// Tail exponent of `f` from the lowest part of its grid; `-∞` when the
/// profile is negligible there.
pub fn fit_tail_exponent(f: &GridFunction1D, window: f64, zero_floor: f64) -> Option<f64> {
    let q = f.q_grid();
    let lo = q[0];
    let hi = lo + window * (f.upper() - lo);
    let peak = f.max_abs();
    let (xs, ys): (Vec<f64>, Vec<f64>) = q
        .iter()
        .zip(f.values())
        .filter(|(q, _)| **q <= hi)
        .map(|(q, v)| (japanese(*q), *v))
        .unzip();
    let local = ys.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 || local <= zero_floor * peak {
        return Some(f64::NEG_INFINITY);
    }
    let fit = fit_log_log(&xs, &ys, 0.0);
    if fit.slope.is_finite() && fit.slope < 0.0 {
        Some(fit.slope)
    } else {
        None
    }
}

/// Neville's scheme for the value at `x = 0` of the interpolant through
/// `(xs, ys)`.
fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i]);
        }
    }
    p[0]
}

/// Reads `A = −½ lim μU_q` (polynomial extrapolation in `1/t` over the
/// latest levels), `A₁ = e^{½GAs} μ` at the final time, and maps them to `Â`.
///
/// Every label uses the levels available to its whole `q`-stencil, so low
/// labels, which launch late, do not shorten the history of the others.
pub fn extract_limits(
    traces: &[CharacteristicTrace],
    region: &EikonalRegion,
    g: f64,
    opts: &ExtractOptions,
) -> Result<Extraction> {
    if traces.len() < 3 {
        return Err(Error::Traces(format!("need at least 3 traces, got {}", traces.len())));
    }
    let mut order: Vec<usize> = (0..traces.len()).collect();
    order.sort_by(|&a, &b| traces[a].q_label.total_cmp(&traces[b].q_label));
    let traces: Vec<&CharacteristicTrace> = order.iter().map(|&i| &traces[i]).collect();
    let dts = traces[0].sample_dt;
    if traces.iter().any(|t| t.sample_dt != dts || t.samples.is_empty()) {
        return Err(Error::Traces("traces must share a non-empty sample lattice".into()));
    }
    let k_hi = traces.iter().map(|t| t.last_index()).min().unwrap();
    let labels: Vec<f64> = traces.iter().map(|t| t.q_label).collect();
    let n = labels.len();
    let w = 5.min(n);
    let mut level_times = Vec::with_capacity(n);
    let mut a_levels = Vec::with_capacity(n);
    let mut a_inf = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(w / 2).min(n - w);
        let group = &traces[lo..lo + w];
        let k_lo = group.iter().map(|t| t.first_index).max().unwrap();
        if k_hi <= k_lo {
            return Err(Error::Traces(format!(
                "trace time ranges do not overlap near q = {} (latest start t = {}, earliest end t = {})",
                labels[i],
                k_lo as f64 * dts,
                k_hi as f64 * dts
            )));
        }
        let levels = pick_levels(k_lo, k_hi, opts.level_ratio, opts.levels.max(2));
        let mut times = Vec::with_capacity(levels.len());
        let mut values = Vec::with_capacity(levels.len());
        for &k in &levels {
            let rows: Vec<&TraceSample> = group.iter().map(|t| t.at_index(k).unwrap()).collect();
            let u: Vec<f64> = rows.iter().map(|s| s.u).collect();
            let uq = lagrange_derivative(&labels[lo..lo + w], &u, labels[i]);
            times.push(rows[i - lo].t);
            values.push(-0.5 * rows[i - lo].mu * uq);
        }
        let n_ex = opts.extrapolation_levels.clamp(2, times.len());
        let xs: Vec<f64> = times[..n_ex].iter().map(|t| 1.0 / t).collect();
        a_inf.push(extrapolate_to_zero(&xs, &values[..n_ex]));
        level_times.push(times);
        a_levels.push(values);
    }
    let mu_final: Vec<f64> = traces.iter().map(|t| t.at_index(k_hi).unwrap().mu).collect();
    let t_final = traces[0].at_index(k_hi).unwrap().t;
    let drift = a_levels.iter().fold(0.0f64, |m, a| m.max((a[0] - a[1]).abs()));
    let s = region.slow_time(t_final);
    let a1: Vec<f64> = a_inf
        .iter()
        .zip(&mu_final)
        .map(|(a, mu)| (0.5 * g * a * s).exp() * mu)
        .collect();
    let a1_warning = a1
        .iter()
        .zip(&labels)
        .any(|(&v, &q)| q <= region.r_support && (v < -3.0 - opts.a1_tolerance || v > -1.0 + opts.a1_tolerance));

    let r = region.r_support;
    let a_raw = GridFunction1D::new(labels.clone(), a_inf, None, Some(r))?;
    let a1_fn = GridFunction1D::new(labels.clone(), a1, None, None)?;
    let mut a_hat = scattering_from_limits(&a_raw, &a1_fn, r)?;
    let tail = fit_tail_exponent(&a_hat, opts.tail_window, 1e-6);
    a_hat.tail_exponent = tail;
    let mut a_raw = a_raw;
    a_raw.tail_exponent = tail;
    Ok(Extraction {
        data: ScatteringData {
            a_hat,
            a_raw,
            a1: a1_fn,
            epsilon: region.epsilon,
            delta: region.delta,
            r_support: r,
        },
        labels,
        level_times,
        a_levels,
        mu_final,
        t_final,
        drift,
        a1_warning,
    })
}

/// Parameters shared by the two extractions of a gauge comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaugeCheckParams {
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub q_min: f64,
    pub dq: f64,
    pub trace: TraceOptions,
    pub extract: ExtractOptions,
    /// Allowed `max|Â_a − Â_b|` relative to `max|Â_a|`.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeReport {
    pub q_lo: f64,
    pub q_hi: f64,
    pub max_diff: f64,
    pub max_abs: f64,
    pub relative: f64,
    pub passed: bool,
    /// For `δ_a ≠ δ_b`, on the traces of the first gauge: `max|Ā − A|` and
    /// `max|Ā₁ − A₁ e^{(δ_a−δ_b)GA/2}|`.
    pub delta_relation: Option<(f64, f64)>,
}

/// Runs the extraction for `(δ_a, κ_a)` and `(δ_b, κ_b)` and compares `Â`.
pub fn gauge_independence_check(
    field: &RadialField,
    g: f64,
    delta_a: f64,
    delta_b: f64,
    p: &GaugeCheckParams,
) -> Result<(GaugeReport, Extraction, Extraction)> {
    let eps = field.epsilon;
    let r = field.r_support;
    let region_a = EikonalRegion::new(delta_a, eps, r, p.kappa_a)?;
    let region_b = EikonalRegion::new(delta_b, eps, r, p.kappa_b)?;
    let labels = label_lattice(p.q_min, r, p.dq);
    let traces_a = trace_family(field, &region_a, &labels, &p.trace)?;
    let ex_a = extract_limits(&traces_a, &region_a, g, &p.extract)?;
    let traces_b = trace_family(field, &region_b, &labels, &p.trace)?;
    let ex_b = extract_limits(&traces_b, &region_b, g, &p.extract)?;
    let delta_relation = if delta_a != delta_b {
        let restricted = EikonalRegion {
            delta: delta_b,
            ..region_a
        };
        let ex_r = extract_limits(&traces_a, &restricted, g, &p.extract)?;
        let da = ex_a
            .data
            .a_raw
            .values()
            .iter()
            .zip(ex_r.data.a_raw.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let d1 = ex_a
            .data
            .a1
            .values()
            .iter()
            .zip(ex_r.data.a1.values())
            .zip(ex_a.data.a_raw.values())
            .fold(0.0f64, |m, ((a1, b1), a)| {
                m.max((b1 - a1 * (0.5 * (delta_a - delta_b) * g * a).exp()).abs())
            });
        Some((da, d1))
    } else {
        None
    };
    let ha = &ex_a.data.a_hat;
    let hb = &ex_b.data.a_hat;
    let q_lo = ha.lower().max(hb.lower());
    let q_hi = ha.upper().min(hb.upper()).min(r);
    let mut max_diff: f64 = 0.0;
    for &q in ha.q_grid().iter().filter(|&&q| q >= q_lo && q <= q_hi) {
        max_diff = max_diff.max((ha.value(q)? - hb.value(q)?).abs());
    }
    let max_abs = ha.max_abs();
    let relative = if max_abs > 0.0 { max_diff / max_abs } else { max_diff };
    Ok((
        GaugeReport {
            q_lo,
            q_hi,
            max_diff,
            max_abs,
            relative,
            passed: relative <= p.tolerance,
            delta_relation,
        },
        ex_a,
        ex_b,
    ))
}
