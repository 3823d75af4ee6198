//! The pipeline stages shared by the commands: simulate, trace, extract.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use wnc_core::{
    dalembert_linear, extract_limits, label_lattice, simulate_radial_strided, trace_family, CharacteristicTrace,
    Extraction, Quantity, RadialField,
};

use crate::config::ExperimentConfig;

pub fn simulate(cfg: &ExperimentConfig) -> Result<RadialField> {
    simulate_at(cfg, cfg.numbers.dr, cfg.io.snapshot_stride)
}

pub fn simulate_at(cfg: &ExperimentConfig, dr: f64, stride: usize) -> Result<RadialField> {
    let n = &cfg.numbers;
    simulate_radial_strided(
        &cfg.metric()?,
        &cfg.initial_data()?,
        n.epsilon,
        n.t_max,
        dr,
        n.cfl,
        stride,
    )
    .with_context(|| format!("simulating to t = {} at dr = {dr}", n.t_max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub t: f64,
    pub max_abs_u: f64,
    /// `max_r |u − u_{2dr}|`.
    pub coarse_diff: f64,
    /// `max_r |u − u_exact|`; only for the flat metric.
    pub oracle_error: Option<f64>,
}

/// Compares `field` with `coarse` (the same run at twice the spacing) and,
/// for the flat metric, with the exact solution on `count` time slices.
pub fn convergence_table(
    cfg: &ExperimentConfig,
    field: &RadialField,
    coarse: &RadialField,
    count: usize,
) -> Result<Vec<ConvergenceRow>> {
    let data = cfg.initial_data()?;
    let eps = cfg.numbers.epsilon;
    let flat = field.metric.is_linear();
    let t_end = field.t_max().min(coarse.t_max());
    let h = coarse.dr;
    let mut rows = Vec::with_capacity(count);
    for k in 1..=count {
        let t = t_end * k as f64 / count as f64;
        let r_end = (t + cfg.data.r_support + 4.0 * h)
            .min(field.r_max())
            .min(coarse.r_max());
        let m = (r_end / h).floor() as usize;
        let (mut max_u, mut diff, mut oracle) = (0.0f64, 0.0f64, 0.0f64);
        for j in 0..=m {
            let r = j as f64 * h;
            let u = field.evaluate(t, r, Quantity::U)?;
            max_u = max_u.max(u.abs());
            diff = diff.max((u - coarse.evaluate(t, r, Quantity::U)?).abs());
            if flat {
                oracle = oracle.max((u - dalembert_linear(&data, eps, t, r)).abs());
            }
        }
        rows.push(ConvergenceRow {
            t,
            max_abs_u: max_u,
            coarse_diff: diff,
            oracle_error: flat.then_some(oracle),
        });
    }
    Ok(rows)
}

/// Traces the label lattice for cone slope `kappa` and extracts `Â`. On the
/// flat metric `Â` vanishes below `−R`, so no tail is fitted there.
pub fn extract(
    cfg: &ExperimentConfig,
    field: &RadialField,
    kappa: f64,
) -> Result<(Vec<CharacteristicTrace>, Extraction)> {
    let region = cfg.region(kappa)?;
    let labels = label_lattice(cfg.q_min(), cfg.data.r_support, cfg.dq());
    let traces = trace_family(field, &region, &labels, &cfg.trace_options())
        .with_context(|| format!("tracing characteristics (kappa = {kappa})"))?;
    let g = field.metric.radial_g();
    let mut ex = extract_limits(&traces, &region, g, &cfg.extract_options())
        .with_context(|| format!("extracting limits (kappa = {kappa})"))?;
    if field.metric.is_linear() {
        let d = &mut ex.data;
        d.a_hat = d
            .a_hat
            .with_values(d.a_hat.values().to_vec(), Some(f64::NEG_INFINITY))?;
        d.a_raw = d
            .a_raw
            .with_values(d.a_raw.values().to_vec(), Some(f64::NEG_INFINITY))?;
    }
    Ok((traces, ex))
}
