//! The `wnc-scatter` commands. Each one reads its prerequisites from the
//! output directory, writes its artifacts and a `<command>.json` summary,
//! and updates the manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use wnc_core::io::{
    fmt_f64, read_scattering, read_snapshot, write_field_slices, write_scattering, write_snapshot, write_traces,
};
use wnc_core::kirchhoff::catalog;
use wnc_core::{
    assumption_scan, axis_residuals, backward_representation, classify_vanishing, gauge_independence_check,
    sphere_rule, spherical_means_decay, verify_interior, GaugeCheckParams, MultiIndexWord, RadialField, SampleSpec,
    ScatteringData, SpacetimeSampler, Vec3,
};

use crate::config::ExperimentConfig;
use crate::manifest::{record_timing, sha256_hex, write_json, Manifest};
use crate::pipeline;

pub const SNAPSHOT: &str = "field.snap";
pub const CONVERGENCE: &str = "convergence.csv";
pub const FIELD_SLICES: &str = "field_slices.csv";
pub const SCATTERING_CSV: &str = "scattering.csv";
pub const SCATTERING_JSON: &str = "scattering.json";
pub const TRACES: &str = "traces.csv";
pub const AXIS: &str = "axis.csv";
pub const INTERIOR: &str = "interior.csv";
pub const KIRCHHOFF: &str = "kirchhoff.csv";
pub const DECAY: &str = "decay.csv";
pub const SCAN: &str = "scan.csv";
pub const REPORT: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    Simulate,
    Scatter,
    VerifyInterior,
    VerifyKirchhoff,
    Decay,
    Classify,
    Scan,
    Report,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Simulate,
        Command::Scatter,
        Command::VerifyInterior,
        Command::VerifyKirchhoff,
        Command::Decay,
        Command::Classify,
        Command::Scan,
        Command::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Scatter => "scatter",
            Command::VerifyInterior => "verify-interior",
            Command::VerifyKirchhoff => "verify-kirchhoff",
            Command::Decay => "decay",
            Command::Classify => "classify",
            Command::Scan => "scan",
            Command::Report => "report",
        }
    }

    pub fn summary_file(self) -> String {
        format!("{}.json", self.name())
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| anyhow!("unknown command '{s}'"))
    }
}

/// `{run_id, verdicts, exponents, tolerances}` plus command-specific values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub run_id: String,
    pub command: String,
    pub verdicts: BTreeMap<String, bool>,
    pub exponents: BTreeMap<String, Option<f64>>,
    pub tolerances: BTreeMap<String, f64>,
    pub values: BTreeMap<String, Value>,
}

impl Summary {
    fn new(run_id: &str, command: Command) -> Self {
        Self {
            run_id: run_id.to_string(),
            command: command.name().to_string(),
            verdicts: BTreeMap::new(),
            exponents: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            values: BTreeMap::new(),
        }
    }

    fn verdict(&mut self, name: &str, passed: bool) {
        self.verdicts.insert(name.into(), passed);
    }

    fn exponent(&mut self, name: &str, p: f64) {
        self.exponents.insert(name.into(), (!p.is_nan()).then_some(p));
    }

    fn tolerance(&mut self, name: &str, x: f64) {
        self.tolerances.insert(name.into(), x);
    }

    fn value<T: Serialize>(&mut self, name: &str, v: T) -> Result<()> {
        self.values.insert(name.into(), serde_json::to_value(v)?);
        Ok(())
    }

    pub fn passed(&self) -> bool {
        self.verdicts.values().all(|&v| v)
    }
}

/// SHA-256 of the parsed configuration in canonical JSON form.
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(cfg)?.as_bytes()))
}

struct RunContext<'a> {
    cfg: &'a ExperimentConfig,
    out: PathBuf,
    command: Command,
    manifest: Manifest,
    summary: Summary,
    written: Vec<String>,
}

impl RunContext<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn require(&self, name: &str, producer: Command) -> Result<PathBuf> {
        let p = self.path(name);
        if !p.exists() || !self.manifest.artifacts.contains_key(name) {
            bail!(
                "dependency error: '{}' needs artifact '{}' in {}; run '{}' first",
                self.command,
                name,
                self.out.display(),
                producer
            );
        }
        Ok(p)
    }

    fn field(&self) -> Result<RadialField> {
        let p = self.require(SNAPSHOT, Command::Simulate)?;
        read_snapshot(&p).with_context(|| format!("reading {}", p.display()))
    }

    fn scattering(&self) -> Result<ScatteringData> {
        let csv = self.require(SCATTERING_CSV, Command::Scatter)?;
        let side = self.require(SCATTERING_JSON, Command::Scatter)?;
        read_scattering(&csv, &side).with_context(|| format!("reading {}", csv.display()))
    }

    fn wrote(&mut self, name: &str) {
        self.written.push(name.to_string());
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.path(name);
        let mut w = csv::Writer::from_writer(BufWriter::new(
            File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        ));
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        self.wrote(name);
        Ok(())
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Runs `command` with artifacts under `out`, or under `io.output_dir` when
/// `out` is `None`.
pub fn run(command: Command, cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Summary> {
    let start = Instant::now();
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.io.output_dir.clone());
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let hash = config_hash(cfg)?;
    let fresh = matches!(command, Command::Simulate | Command::VerifyKirchhoff);
    let manifest = Manifest::open(&out, &hash, fresh)?;
    let run_id = hash[..16].to_string();
    let mut cx = RunContext {
        cfg,
        out,
        command,
        manifest,
        summary: Summary::new(&run_id, command),
        written: Vec::new(),
    };
    match command {
        Command::Simulate => simulate(&mut cx),
        Command::Scatter => scatter(&mut cx),
        Command::VerifyInterior => verify_interior_cmd(&mut cx),
        Command::VerifyKirchhoff => verify_kirchhoff(&mut cx),
        Command::Decay => decay(&mut cx),
        Command::Classify => classify(&mut cx),
        Command::Scan => scan(&mut cx),
        Command::Report => report(&mut cx),
    }
    .with_context(|| format!("command '{command}' failed"))?;

    let summary_name = command.summary_file();
    if command != Command::Report {
        write_json(&cx.path(&summary_name), &cx.summary)?;
        cx.wrote(&summary_name);
    }
    for name in std::mem::take(&mut cx.written) {
        cx.manifest.record(&cx.out, &name, command.name())?;
    }
    cx.manifest.write(&cx.out)?;
    record_timing(&cx.out, command.name(), start.elapsed().as_secs_f64())?;
    Ok(cx.summary)
}

const CONVERGENCE_SLICES: usize = 10;
/// Radii per exported field slice.
const SLICE_RADII: usize = 200;
const VANISH_TOL: f64 = 1e-10;

fn simulate(cx: &mut RunContext) -> Result<()> {
    let cfg = cx.cfg;
    let field = pipeline::simulate(cfg)?;
    write_snapshot(&field, &cx.path(SNAPSHOT))?;
    cx.wrote(SNAPSHOT);

    let coarse = pipeline::simulate_at(cfg, 2.0 * cfg.numbers.dr, cfg.io.snapshot_stride.div_ceil(2))?;
    let fine_rows = pipeline::convergence_table(cfg, &field, &coarse, CONVERGENCE_SLICES)?;
    let flat = field.metric.is_linear();
    let coarse_oracle: Vec<Option<f64>> = if flat {
        let mut coarser = cfg.clone();
        coarser.numbers.dr *= 2.0;
        pipeline::convergence_table(&coarser, &coarse, &coarse, CONVERGENCE_SLICES)?
            .iter()
            .map(|r| r.oracle_error)
            .collect()
    } else {
        vec![None; fine_rows.len()]
    };
    cx.csv(
        CONVERGENCE,
        &["t", "max_abs_u", "coarse_diff", "oracle_error", "coarse_oracle_error"],
        fine_rows.iter().zip(&coarse_oracle).map(|(r, c)| {
            vec![
                fmt_f64(r.t),
                fmt_f64(r.max_abs_u),
                fmt_f64(r.coarse_diff),
                opt(r.oracle_error),
                opt(*c),
            ]
        }),
    )?;

    if cfg.writes("csv") {
        let times: Vec<f64> = cfg.slice_times().into_iter().filter(|&t| t <= field.t_max()).collect();
        let r_hi = times.iter().fold(0.0f64, |m, &t| m.max(t)).min(field.r_max());
        let radii: Vec<f64> = (0..=SLICE_RADII)
            .map(|j| r_hi * j as f64 / SLICE_RADII as f64)
            .collect();
        write_field_slices(&field, &times, &radii, &cx.path(FIELD_SLICES))?;
        cx.wrote(FIELD_SLICES);
    }

    let outside = outside_support_max(&field);
    let s = &mut cx.summary;
    s.verdict("finite_speed", outside <= VANISH_TOL);
    s.tolerance("finite_speed", VANISH_TOL);
    s.verdict("cfl", field.max_courant <= 1.0);
    if let (Some(fine), Some(coarse)) = (
        fine_rows.last().and_then(|r| r.oracle_error),
        coarse_oracle.last().copied().flatten(),
    ) {
        let ratio = coarse / fine;
        s.verdict("second_order", (3.0..=5.0).contains(&ratio));
        s.exponent("observed_order", ratio.log2());
        s.value("oracle_error", fine)?;
        s.value("oracle_ratio", ratio)?;
    }
    s.value("max_outside_support", outside)?;
    s.value("max_courant", field.max_courant)?;
    s.value("n_t", field.n_t)?;
    s.value("n_r", field.n_r)?;
    s.value("dt", field.dt)?;
    s.value("t_max", field.t_max())?;
    Ok(())
}

/// `max |v|` over stored nodes with `r − t ≥ R + 2dr`.
pub fn outside_support_max(field: &RadialField) -> f64 {
    let mut worst = 0.0f64;
    for n in 0..field.n_t {
        let t = field.t_at(n);
        let row = field.row(n);
        let j0 = ((t + field.r_support + 2.0 * field.dr) / field.dr).ceil() as usize;
        for v in row.iter().skip(j0) {
            worst = worst.max(v.abs());
        }
    }
    worst
}

const GAUGE_TOL: f64 = 0.05;

fn scatter(cx: &mut RunContext) -> Result<()> {
    let cfg = cx.cfg;
    let field = cx.field()?;
    let (traces, ex) = pipeline::extract(cfg, &field, cfg.numbers.kappa)?;
    write_scattering(&ex.data, &cx.path(SCATTERING_CSV), &cx.path(SCATTERING_JSON))?;
    cx.wrote(SCATTERING_CSV);
    cx.wrote(SCATTERING_JSON);
    if cfg.writes("csv") {
        write_traces(&traces, &cx.path(TRACES))?;
        cx.wrote(TRACES);
    }
    let s = &mut cx.summary;
    s.verdict("a1_in_range", !ex.a1_warning);
    s.tolerance("a1_range", cfg.extract_options().a1_tolerance);
    s.exponent("tail", ex.data.a_hat.tail_exponent.unwrap_or(f64::NAN));
    s.value("drift", ex.drift)?;
    s.value("t_final", ex.t_final)?;
    s.value("max_abs_a_hat", ex.data.a_hat.max_abs())?;
    s.value("q_range", [ex.data.a_hat.lower(), ex.data.a_hat.upper()])?;
    s.value("labels", ex.labels.len())?;
    if let Some(kappa_b) = cfg.numbers.kappa_alt {
        let params = GaugeCheckParams {
            kappa_a: cfg.numbers.kappa,
            kappa_b,
            q_min: cfg.q_min(),
            dq: cfg.dq(),
            trace: cfg.trace_options(),
            extract: cfg.extract_options(),
            tolerance: GAUGE_TOL,
        };
        let d = cfg.numbers.delta;
        let (rep, _, _) = gauge_independence_check(&field, field.metric.radial_g(), d, d, &params)?;
        s.verdict("gauge_independent", rep.passed);
        s.tolerance("gauge_relative", GAUGE_TOL);
        s.value("gauge", &rep)?;
    }
    Ok(())
}

const AXIS_TOL: f64 = 0.3;

fn verify_interior_cmd(cx: &mut RunContext) -> Result<()> {
    let cfg = cx.cfg;
    let field = cx.field()?;
    let sd = cx.scattering()?;
    let sphere = sphere_rule(cfg.numbers.sphere_degree)?;
    let times = cfg.slice_times();

    let axis = axis_residuals(&field, &sd, &times)?;
    cx.csv(
        AXIS,
        &["t", "u", "prediction", "relative"],
        axis.iter()
            .map(|a| vec![fmt_f64(a.t), fmt_f64(a.u), fmt_f64(a.prediction), fmt_f64(a.relative)]),
    )?;
    let monotone = axis.windows(2).all(|w| !(w[1].relative > w[0].relative));
    let last = axis.last().map(|a| a.relative).unwrap_or(f64::NAN);

    let spec = SampleSpec {
        t_slices: times,
        r_points: cfg.numbers.r_points,
        zero_floor: zero_floor(&sd),
    };
    let mut reports = Vec::new();
    for word in ["", "S"] {
        let w: MultiIndexWord = word.parse()?;
        reports.push(verify_interior(&field, &sd, &w, cfg.numbers.gamma, &spec, &sphere)?);
    }
    let header = ["word", "t", "r", "u_num", "prediction", "abs_err", "bound_ref"];
    let rows: Vec<Vec<String>> = reports
        .iter()
        .flat_map(|rep| {
            rep.rows.iter().map(|w| {
                vec![
                    rep.word.clone(),
                    fmt_f64(w.t),
                    fmt_f64(w.r),
                    fmt_f64(w.u_num),
                    fmt_f64(w.prediction),
                    fmt_f64(w.abs_err),
                    fmt_f64(w.bound_ref),
                ]
            })
        })
        .collect();
    cx.csv(INTERIOR, &header, rows)?;

    let s = &mut cx.summary;
    s.verdict("axis_monotone", monotone);
    s.verdict("axis_final", last <= AXIS_TOL);
    s.tolerance("axis_final", AXIS_TOL);
    s.tolerance("exponent_q_lo", -2.5);
    s.tolerance("exponent_q_hi", -1.5);
    s.tolerance("zero_floor", spec.zero_floor);
    s.value("axis", &axis)?;
    for rep in &reports {
        let key = if rep.word.is_empty() {
            "empty"
        } else {
            rep.word.as_str()
        };
        s.verdict(&format!("interior_{key}"), rep.passed);
        s.exponent(&format!("q_{key}"), rep.fitted_exponent_q);
        s.exponent(&format!("t_{key}"), rep.fitted_exponent_t);
        s.value(
            &format!("report_{key}"),
            json!({
                "below_leading_term": rep.below_leading_term,
                "trivial": rep.trivial,
                "fit_residual": rep.fit_residual,
                "warnings": rep.warnings,
            }),
        )?;
    }
    Ok(())
}

/// Errors below this are treated as exact zeros in the fits.
pub fn zero_floor(sd: &ScatteringData) -> f64 {
    1e-10 * (sd.epsilon * sd.a_hat.max_abs()).max(f64::MIN_POSITIVE)
}

/// One backward-representation evaluation point `(t, x, T)`.
pub type KirchhoffPoint = (f64, Vec3, f64);

pub const KIRCHHOFF_POINTS: [KirchhoffPoint; 3] = [
    (1.0, [0.2, 0.0, 0.0], 4.0),
    (2.0, [1.0, 0.0, 0.0], 10.0),
    (0.5, [0.3, -0.2, 0.1], 3.0),
];
const KIRCHHOFF_TOL: f64 = 1e-6;
const ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KirchhoffRow {
    pub t: f64,
    pub x: Vec3,
    pub t_end: f64,
    pub degree: usize,
    pub radial_nodes: usize,
    pub value: f64,
    pub exact: f64,
    pub abs_error: f64,
}

pub fn kirchhoff_rows(
    s: &SpacetimeSampler,
    ladder: &[(usize, usize)],
    points: &[KirchhoffPoint],
) -> Result<Vec<KirchhoffRow>> {
    let mut rows = Vec::new();
    for &(t, x, t_end) in points {
        let exact = (s.phi)(t, &x);
        for &(degree, radial_nodes) in ladder {
            let sphere = sphere_rule(degree)?;
            let value = backward_representation(s, t, &x, t_end, &sphere, radial_nodes)?;
            rows.push(KirchhoffRow {
                t,
                x,
                t_end,
                degree,
                radial_nodes,
                value,
                exact,
                abs_error: (value - exact).abs(),
            });
        }
    }
    Ok(rows)
}

/// Smallest `log₂` error ratio over successive ladder rungs whose finer
/// error is above round-off; `+∞` when every refinement is at round-off.
pub fn observed_order(errors: &[f64]) -> f64 {
    errors
        .windows(2)
        .filter(|w| w[1] > ROUNDOFF)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::INFINITY, f64::min)
}

fn verify_kirchhoff(cx: &mut RunContext) -> Result<()> {
    let n = &cx.cfg.numbers;
    let (d, m) = (n.sphere_degree, n.radial_nodes);
    let ladder: Vec<(usize, usize)> = [4usize, 2, 1]
        .iter()
        .map(|&k| ((d / k).max(2), (m / k).max(1)))
        .collect();
    let mut all = Vec::new();
    let mut order_ok = true;
    let mut worst_final = 0.0f64;
    let mut worst_order = f64::INFINITY;
    let mut verdicts = Vec::new();
    for s in catalog() {
        let rows = kirchhoff_rows(&s, &ladder, &KIRCHHOFF_POINTS)?;
        let mut case_final = 0.0f64;
        for chunk in rows.chunks(ladder.len()) {
            let errs: Vec<f64> = chunk.iter().map(|r| r.abs_error).collect();
            let p = observed_order(&errs);
            worst_order = worst_order.min(p);
            order_ok &= p >= 2.0;
            case_final = case_final.max(*errs.last().unwrap());
        }
        worst_final = worst_final.max(case_final);
        verdicts.push((s.name().to_string(), case_final <= KIRCHHOFF_TOL));
        all.push((s.name().to_string(), rows));
    }
    let affine = catalog().into_iter().next().unwrap();
    let low = kirchhoff_rows(&affine, &[(2, 1)], &KIRCHHOFF_POINTS)?;
    let affine_exact = low.iter().all(|r| r.abs_error <= ROUNDOFF);
    all.push((affine.name().to_string(), low));

    let t = 1.5;
    let x = [0.4, 0.1, -0.2];
    let mut t_spread = 0.0f64;
    for s in catalog() {
        let vals: Vec<f64> = kirchhoff_rows(&s, &[(d, m)], &[(t, x, 4.0 * t), (t, x, 8.0 * t), (t, x, t * t * t)])?
            .iter()
            .map(|r| r.value)
            .collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        t_spread = t_spread.max(hi - lo);
    }

    let header = [
        "case",
        "t",
        "x1",
        "x2",
        "x3",
        "T",
        "degree",
        "radial_nodes",
        "value",
        "exact",
        "abs_error",
    ];
    let rows: Vec<Vec<String>> = all
        .iter()
        .flat_map(|(name, rows)| {
            rows.iter().map(move |r| {
                vec![
                    name.clone(),
                    fmt_f64(r.t),
                    fmt_f64(r.x[0]),
                    fmt_f64(r.x[1]),
                    fmt_f64(r.x[2]),
                    fmt_f64(r.t_end),
                    r.degree.to_string(),
                    r.radial_nodes.to_string(),
                    fmt_f64(r.value),
                    fmt_f64(r.exact),
                    fmt_f64(r.abs_error),
                ]
            })
        })
        .collect();
    cx.csv(KIRCHHOFF, &header, rows)?;

    let s = &mut cx.summary;
    for (name, ok) in verdicts {
        s.verdict(&format!("exact_{name}"), ok);
    }
    s.verdict("order", order_ok);
    s.verdict("affine_low_degree", affine_exact);
    s.verdict("t_independent", t_spread <= KIRCHHOFF_TOL);
    s.exponent("worst_order", worst_order);
    s.tolerance("abs_error", KIRCHHOFF_TOL);
    s.tolerance("affine", ROUNDOFF);
    s.tolerance("order_min", 2.0);
    s.value("worst_error", worst_final)?;
    s.value("t_spread", t_spread)?;
    s.value("ladder", &ladder)?;
    Ok(())
}

const DECAY_MAX_EXPONENT: f64 = -0.2;

fn decay(cx: &mut RunContext) -> Result<()> {
    let cfg = cx.cfg;
    let sd = cx.scattering()?;
    let g = cfg.metric()?.radial_g();
    let table = spherical_means_decay(&sd, g, &cfg.dyadic_times())?;
    cx.csv(
        DECAY,
        &["t", "M"],
        table.rows.iter().map(|&(t, m)| vec![fmt_f64(t), fmt_f64(m)]),
    )?;
    let s = &mut cx.summary;
    s.verdict("decay", table.passed);
    s.exponent("decay", table.exponent);
    s.tolerance("decay_max_exponent", DECAY_MAX_EXPONENT);
    s.value("fit_residual", table.residual)?;
    s.value("max_m", table.rows.iter().fold(0.0f64, |m, r| m.max(r.1)))?;
    Ok(())
}

fn classify(cx: &mut RunContext) -> Result<()> {
    let cfg = cx.cfg;
    let sd = cx.scattering()?;
    let c = classify_vanishing(&sd, &cfg.metric()?, &sphere_rule(cfg.numbers.sphere_degree)?)?;
    let s = &mut cx.summary;
    s.verdict("hypothesis_a", c.hypothesis_a);
    s.verdict("hypothesis_b", c.hypothesis_b);
    s.verdict("hypothesis_c", c.hypothesis_c);
    s.exponent("tail", c.tail_exponent.unwrap_or(f64::NAN));
    s.exponent("signed_part", c.signed_part_exponent.unwrap_or(f64::NAN));
    s.tolerance("c_threshold", c.c_threshold);
    s.tolerance("tau", c.tau);
    s.value("classification", &c)?;
    Ok(())
}

fn scan(cx: &mut RunContext) -> Result<()> {
    let cfg = cx.cfg;
    let field = cx.field()?;
    let sd = cx.scattering()?;
    let times: Vec<f64> = cfg.dyadic_times().into_iter().filter(|&t| t <= field.t_max()).collect();
    let table = assumption_scan(&field, &sd, cfg.numbers.nu0, &times)?;
    cx.csv(
        SCAN,
        &["t", "d1", "d2", "d3"],
        table
            .rows
            .iter()
            .map(|r| vec![fmt_f64(r.t), fmt_f64(r.d1), fmt_f64(r.d2), fmt_f64(r.d3)]),
    )?;
    let s = &mut cx.summary;
    s.verdict("consistent_with_nonzero", table.consistent_with_nonzero);
    for (k, name) in ["d1", "d2", "d3"].iter().enumerate() {
        s.exponent(name, table.exponents[k]);
        s.tolerance(&format!("{name}_threshold"), table.thresholds[k]);
    }
    s.value("b0", table.b0)?;
    s.value("b1", table.b1)?;
    s.value("satisfied", table.satisfied)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub command: String,
    pub check: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub run_id: String,
    pub rows: Vec<ReportRow>,
    pub all_passed: bool,
}

fn report(cx: &mut RunContext) -> Result<()> {
    let mut rows = Vec::new();
    for c in Command::ALL.iter().filter(|&&c| c != Command::Report) {
        let name = c.summary_file();
        if !cx.manifest.artifacts.contains_key(&name) {
            continue;
        }
        let text = std::fs::read_to_string(cx.path(&name)).with_context(|| format!("reading {name}"))?;
        let sum: Summary = serde_json::from_str(&text).with_context(|| format!("parsing {name}"))?;
        for (check, &passed) in &sum.verdicts {
            rows.push(ReportRow {
                command: c.name().to_string(),
                check: check.clone(),
                passed,
            });
        }
        cx.summary
            .verdicts
            .extend(sum.verdicts.iter().map(|(k, &v)| (format!("{}.{k}", c.name()), v)));
    }
    if rows.is_empty() {
        bail!(
            "dependency error: 'report' found no command summaries in {}; run another command first",
            cx.out.display()
        );
    }
    let rep = Report {
        run_id: cx.summary.run_id.clone(),
        all_passed: rows.iter().all(|r| r.passed),
        rows,
    };
    write_json(&cx.path(REPORT), &rep)?;
    cx.wrote(REPORT);
    Ok(())
}

/// The verdict table of a report as aligned text.
pub fn format_report(rep: &Report) -> String {
    let w = rep
        .rows
        .iter()
        .map(|r| r.command.len() + r.check.len() + 1)
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    for r in &rep.rows {
        let name = format!("{}.{}", r.command, r.check);
        out.push_str(&format!("{name:<w$}  {}\n", if r.passed { "pass" } else { "FAIL" }));
    }
    out
}
