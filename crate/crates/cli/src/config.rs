//! Experiment configuration: a TOML file with `metric`, `data`, `numbers`
//! and `io` sections (dotted keys such as `numbers.epsilon = 0.1` work).

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use wnc_core::{EikonalRegion, ExtractOptions, InitialData, MetricModel, TraceOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub metric: MetricBlock,
    pub data: DataBlock,
    pub numbers: NumbersBlock,
    #[serde(default)]
    pub io: IoBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricBlock {
    /// `c(u) = c₀ + c₁u + …` with `c₀ = 1`.
    pub c_coeffs: Vec<f64>,
    /// Row-major `g0^{αβ}`; derived from `c₁` for the radial model when absent.
    #[serde(default)]
    pub g0: Option<Vec<f64>>,
    #[serde(default = "yes")]
    pub radial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataBlock {
    #[serde(default = "bump")]
    pub family: String,
    pub u0_amplitude: f64,
    #[serde(default)]
    pub u1_amplitude: f64,
    #[serde(rename = "R")]
    pub r_support: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumbersBlock {
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default = "half")]
    pub kappa: f64,
    /// Second cone slope for the gauge comparison in `scatter`.
    #[serde(default)]
    pub kappa_alt: Option<f64>,
    pub t_max: f64,
    pub dr: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub q_grid: QGrid,
    #[serde(default = "default_sample_dt")]
    pub sample_dt: f64,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    #[serde(default = "half")]
    pub level_ratio: f64,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_extrapolation")]
    pub extrapolation_levels: usize,
    #[serde(default = "default_degree")]
    pub sphere_degree: usize,
    #[serde(default = "default_radial_nodes")]
    pub radial_nodes: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "half")]
    pub nu0: f64,
    /// Radii per interior slice.
    #[serde(default = "default_r_points")]
    pub r_points: usize,
    /// Number of slices `kT₀`, `k = 1..`, with `T₀ = 2e^{δ/ε}`.
    #[serde(default = "default_slices")]
    pub slices: usize,
    /// Dyadic sample count for `decay` and `scan`.
    #[serde(default = "default_dyadic")]
    pub dyadic_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QGrid {
    /// Lowest label; `−(t + r)` of the last interior slice when absent.
    #[serde(default)]
    pub q_min: Option<f64>,
    #[serde(default)]
    pub dq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoBlock {
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

impl Default for IoBlock {
    fn default() -> Self {
        Self {
            output_dir: default_out(),
            snapshot_stride: default_stride(),
            formats: default_formats(),
        }
    }
}

fn yes() -> bool {
    true
}
fn bump() -> String {
    "bump".into()
}
fn half() -> f64 {
    0.5
}
fn default_cfl() -> f64 {
    0.9
}
fn default_sample_dt() -> f64 {
    0.1
}
fn default_substeps() -> usize {
    2
}
fn default_levels() -> usize {
    3
}
fn default_extrapolation() -> usize {
    2
}
fn default_degree() -> usize {
    24
}
fn default_radial_nodes() -> usize {
    64
}
fn default_gamma() -> f64 {
    0.6
}
fn default_r_points() -> usize {
    12
}
fn default_slices() -> usize {
    3
}
fn default_dyadic() -> usize {
    4
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_stride() -> usize {
    1
}
fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("parsing the configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        let n = &self.numbers;
        ensure!(
            n.epsilon > 0.0 && n.epsilon <= 0.5,
            "numbers.epsilon must lie in (0, 0.5], got {}",
            n.epsilon
        );
        ensure!(
            n.delta > 0.0 && n.delta < 1.0,
            "numbers.delta must lie in (0, 1), got {}",
            n.delta
        );
        ensure!(
            n.gamma > 0.5 && n.gamma < 1.0,
            "numbers.gamma must lie in (0.5, 1), got {}",
            n.gamma
        );
        ensure!(
            n.kappa > 0.0 && n.kappa < 1.0,
            "numbers.kappa must lie in (0, 1), got {}",
            n.kappa
        );
        if let Some(k) = n.kappa_alt {
            ensure!(k > 0.0 && k < 1.0, "numbers.kappa_alt must lie in (0, 1), got {k}");
        }
        ensure!(
            n.nu0 > 0.0 && n.nu0 < 1.0,
            "numbers.nu0 must lie in (0, 1), got {}",
            n.nu0
        );
        ensure!(n.t_max > 0.0, "numbers.t_max must be positive");
        ensure!(n.dr > 0.0, "numbers.dr must be positive");
        ensure!(
            n.cfl > 0.0 && n.cfl <= 0.95,
            "numbers.cfl must lie in (0, 0.95], got {}",
            n.cfl
        );
        ensure!(
            n.sample_dt > 0.0 && n.substeps > 0,
            "numbers.sample_dt and numbers.substeps must be positive"
        );
        ensure!(
            n.level_ratio > 0.0 && n.level_ratio < 1.0,
            "numbers.level_ratio must lie in (0, 1)"
        );
        ensure!(n.levels >= 2, "numbers.levels must be at least 2");
        ensure!(
            (2..=n.levels).contains(&n.extrapolation_levels),
            "numbers.extrapolation_levels must lie in [2, numbers.levels]"
        );
        ensure!(n.sphere_degree >= 2, "numbers.sphere_degree must be at least 2");
        ensure!(n.radial_nodes >= 1, "numbers.radial_nodes must be positive");
        ensure!(
            n.r_points >= 2 && n.slices >= 1,
            "numbers.r_points ≥ 2 and numbers.slices ≥ 1 required"
        );
        ensure!(n.dyadic_samples >= 2, "numbers.dyadic_samples must be at least 2");
        if let Some(dq) = n.q_grid.dq {
            ensure!(dq > 0.0, "numbers.q_grid.dq must be positive");
        }
        ensure!(self.io.snapshot_stride >= 1, "io.snapshot_stride must be positive");
        for f in &self.io.formats {
            ensure!(f == "csv" || f == "json", "io.formats: unknown format '{f}'");
        }
        ensure!(
            self.data.family == "bump",
            "data.family: only 'bump' is available, got '{}'",
            self.data.family
        );
        self.metric().context("metric block")?;
        self.initial_data().context("data block")?;
        Ok(())
    }

    pub fn metric(&self) -> Result<MetricModel> {
        let m = &self.metric;
        let model = match &m.g0 {
            None if m.radial => MetricModel::radial(m.c_coeffs.clone())?,
            None => bail!("metric.g0 is required when metric.radial = false"),
            Some(flat) => {
                ensure!(
                    flat.len() == 16,
                    "metric.g0 needs 16 row-major entries, got {}",
                    flat.len()
                );
                let mut g0 = [[0.0; 4]; 4];
                for (k, &x) in flat.iter().enumerate() {
                    g0[k / 4][k % 4] = x;
                }
                MetricModel::new(m.c_coeffs.clone(), g0, m.radial)?
            }
        };
        Ok(model)
    }

    pub fn initial_data(&self) -> Result<InitialData> {
        let d = &self.data;
        Ok(InitialData::bump(d.u0_amplitude, d.u1_amplitude, d.r_support)?)
    }

    pub fn region(&self, kappa: f64) -> Result<EikonalRegion> {
        let n = &self.numbers;
        Ok(EikonalRegion::new(n.delta, n.epsilon, self.data.r_support, kappa)?)
    }

    /// `T₀ = 2e^{δ/ε}`.
    pub fn t0(&self) -> f64 {
        2.0 * (self.numbers.delta / self.numbers.epsilon).exp()
    }

    /// Interior slices `T₀, 2T₀, …`.
    pub fn slice_times(&self) -> Vec<f64> {
        (1..=self.numbers.slices).map(|k| k as f64 * self.t0()).collect()
    }

    /// `T₀·2^k` for the decay and scan tables.
    pub fn dyadic_times(&self) -> Vec<f64> {
        (0..self.numbers.dyadic_samples)
            .map(|k| self.t0() * 2f64.powi(k as i32))
            .collect()
    }

    pub fn q_min(&self) -> f64 {
        self.numbers.q_grid.q_min.unwrap_or_else(|| {
            let t = self.slice_times().last().copied().unwrap_or(self.t0());
            -(2.0 * t - t.powf(self.numbers.gamma))
        })
    }

    pub fn dq(&self) -> f64 {
        self.numbers.q_grid.dq.unwrap_or(4.0 * self.numbers.dr)
    }

    pub fn trace_options(&self) -> TraceOptions {
        TraceOptions {
            sample_dt: self.numbers.sample_dt,
            substeps: self.numbers.substeps,
            t_end: None,
            ..TraceOptions::default()
        }
    }

    pub fn extract_options(&self) -> ExtractOptions {
        ExtractOptions {
            level_ratio: self.numbers.level_ratio,
            levels: self.numbers.levels,
            extrapolation_levels: self.numbers.extrapolation_levels,
            ..ExtractOptions::default()
        }
    }

    pub fn writes(&self, format: &str) -> bool {
        self.io.formats.iter().any(|f| f == format)
    }
}
