//! Closed-form reduced system, gauge map, normalized scattering profiles and
//! the `A_I` / `U_I` recursions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{angular_derivative, AngularPolynomial, Profile1D, Vec3};
use crate::numerics::{gauss_legendre, hermite, japanese, pairwise_sum, spline_slopes_clamped};

fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(8))
}

fn gl_panel<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> f64 {
    let (x, w) = gl8();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        acc += wi * f(c + h * xi);
    }
    acc * h
}

/// `∫_a^b f` for `a < b` with panels whose width doubles away from `b`; suited
/// to slowly varying power-law tails over long ranges.
pub fn integrate_toward<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> f64 {
    if !(a < b) {
        return 0.0;
    }
    let mut parts = Vec::new();
    let mut hi = b;
    let mut width: f64 = 0.25;
    while hi > a {
        let lo = (hi - width).max(a);
        parts.push(gl_panel(f, lo, hi));
        hi = lo;
        width *= 2.0;
    }
    pairwise_sum(&parts)
}

/// Cubic spline profile on a strictly increasing grid, with an optional
/// power-law model below the grid and an optional support cutoff above.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction1D {
    q_grid: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    /// Exponent `p` of the model `f(q₀)·(⟨q⟩/⟨q₀⟩)^p` used below the first
    /// node; `-∞` means the profile vanishes there.
    pub tail_exponent: Option<f64>,
    /// Values vanish for `q ≥ support`.
    pub support: Option<f64>,
}

impl GridFunction1D {
    pub fn new(q_grid: Vec<f64>, values: Vec<f64>, tail_exponent: Option<f64>, support: Option<f64>) -> Result<Self> {
        if q_grid.len() != values.len() {
            return Err(Error::InputDomain(format!(
                "grid has {} nodes but {} values",
                q_grid.len(),
                values.len()
            )));
        }
        if q_grid.len() < 2 {
            return Err(Error::InputDomain("a profile needs at least two nodes".into()));
        }
        if q_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InputDomain("q grid must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InputDomain("profile values must be finite".into()));
        }
        let first = (tail_exponent == Some(f64::NEG_INFINITY)).then_some(0.0);
        let last = support.filter(|&s| q_grid[q_grid.len() - 1] >= s).map(|_| 0.0);
        let slopes = spline_slopes_clamped(&q_grid, &values, first, last);
        Ok(Self {
            q_grid,
            values,
            slopes,
            tail_exponent,
            support,
        })
    }

    /// Tabulates `f` on `n` uniform nodes over `[a, b]`.
    pub fn from_fn<F: Fn(f64) -> f64>(
        a: f64,
        b: f64,
        n: usize,
        f: F,
        tail_exponent: Option<f64>,
        support: Option<f64>,
    ) -> Result<Self> {
        let grid = uniform_grid(a, b, n);
        let values = grid.iter().map(|&q| f(q)).collect();
        Self::new(grid, values, tail_exponent, support)
    }

    pub fn q_grid(&self) -> &[f64] {
        &self.q_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn lower(&self) -> f64 {
        self.q_grid[0]
    }

    pub fn upper(&self) -> f64 {
        *self.q_grid.last().unwrap()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn cut(&self, q: f64) -> bool {
        matches!(self.support, Some(r) if q >= r) || q > self.upper()
    }

    fn interval(&self, q: f64) -> usize {
        let i = self.q_grid.partition_point(|&x| x <= q);
        i.clamp(1, self.q_grid.len() - 1) - 1
    }

    fn spline(&self, q: f64) -> (f64, f64) {
        let i = self.interval(q);
        let h = self.q_grid[i + 1] - self.q_grid[i];
        let s = (q - self.q_grid[i]) / h;
        hermite(
            self.values[i],
            self.values[i + 1],
            self.slopes[i],
            self.slopes[i + 1],
            h,
            s,
        )
    }

    fn tail(&self, q: f64) -> Result<(f64, f64)> {
        let p = self
            .tail_exponent
            .ok_or(Error::Extrapolation { q, lower: self.lower() })?;
        if p == f64::NEG_INFINITY {
            return Ok((0.0, 0.0));
        }
        let q0 = self.lower();
        let f0 = self.values[0];
        let v = f0 * (japanese(q) / japanese(q0)).powf(p);
        Ok((v, v * p * q / (1.0 + q * q)))
    }

    pub fn value(&self, q: f64) -> Result<f64> {
        if self.cut(q) {
            Ok(0.0)
        } else if q < self.lower() {
            Ok(self.tail(q)?.0)
        } else {
            Ok(self.spline(q).0)
        }
    }

    pub fn derivative(&self, q: f64) -> Result<f64> {
        if self.cut(q) {
            Ok(0.0)
        } else if q < self.lower() {
            Ok(self.tail(q)?.1)
        } else {
            Ok(self.spline(q).1)
        }
    }

    /// Spline value with the query clamped to the grid, ignoring support.
    pub fn spline_at(&self, q: f64) -> f64 {
        self.spline(q.clamp(self.lower(), self.upper())).0
    }

    /// Value for a query known to lie in the tabulated or modelled range.
    pub fn at(&self, q: f64) -> f64 {
        self.value(q).unwrap_or(f64::NAN)
    }

    fn spline_integral_partial(&self, i: usize, tau: f64) -> f64 {
        let h = self.q_grid[i + 1] - self.q_grid[i];
        let t2 = tau * tau;
        let t3 = t2 * tau;
        let t4 = t3 * tau;
        let a00 = t4 / 2.0 - t3 + tau;
        let a10 = t4 / 4.0 - 2.0 * t3 / 3.0 + t2 / 2.0;
        let a01 = -t4 / 2.0 + t3;
        let a11 = t4 / 4.0 - t3 / 3.0;
        h * (self.values[i] * a00 + h * self.slopes[i] * a10 + self.values[i + 1] * a01 + h * self.slopes[i + 1] * a11)
    }

    /// `∫_{q_grid[0]}^{x}` of the spline restricted to the grid.
    fn spline_integral_from_start(&self, x: f64) -> f64 {
        let x = x.clamp(self.lower(), self.upper());
        let k = self.interval(x);
        let mut parts = Vec::with_capacity(k + 1);
        for i in 0..k {
            parts.push(self.spline_integral_partial(i, 1.0));
        }
        let h = self.q_grid[k + 1] - self.q_grid[k];
        parts.push(self.spline_integral_partial(k, (x - self.q_grid[k]) / h));
        pairwise_sum(&parts)
    }

    /// `∫_a^b` of the profile, including the tail model and support cutoff.
    pub fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        if a > b {
            return Ok(-self.integrate(b, a)?);
        }
        let mut hi = b.min(self.upper());
        if let Some(r) = self.support {
            hi = hi.min(r);
        }
        let lo = a;
        if !(lo < hi) {
            return Ok(0.0);
        }
        let mut total = 0.0;
        let q0 = self.lower();
        if lo < q0 {
            let p = self.tail_exponent.ok_or(Error::Extrapolation { q: lo, lower: q0 })?;
            if p != f64::NEG_INFINITY {
                let tail_hi = hi.min(q0);
                total += integrate_toward(&|q| self.tail(q).map(|v| v.0).unwrap_or(0.0), lo, tail_hi);
            }
        }
        let glo = lo.max(q0);
        if glo < hi {
            total += self.spline_integral_from_start(hi) - self.spline_integral_from_start(glo);
        }
        Ok(total)
    }

    /// Same grid, new node values (splined afresh).
    pub fn with_values(&self, values: Vec<f64>, tail_exponent: Option<f64>) -> Result<Self> {
        Self::new(self.q_grid.clone(), values, tail_exponent, self.support)
    }

    pub fn map<F: Fn(f64, f64) -> f64>(&self, f: F) -> Result<Self> {
        let v = self.q_grid.iter().zip(&self.values).map(|(&q, &y)| f(q, y)).collect();
        self.with_values(v, self.tail_exponent)
    }

    pub fn scale(&self, k: f64) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= k;
        }
        for s in out.slopes.iter_mut() {
            *s *= k;
        }
        out
    }

    /// `q ∂_q` of the profile, re-splined on the same grid.
    pub fn q_dq(&self) -> Result<Self> {
        let v = self.q_grid.iter().zip(&self.slopes).map(|(q, s)| q * s).collect();
        self.with_values(v, self.tail_exponent)
    }

    /// Restriction to the nodes in `[a, b]`.
    pub fn restrict(&self, a: f64, b: f64) -> Result<Self> {
        let (q, v): (Vec<f64>, Vec<f64>) = self
            .q_grid
            .iter()
            .zip(&self.values)
            .filter(|(q, _)| **q >= a && **q <= b)
            .map(|(q, v)| (*q, *v))
            .unzip();
        Self::new(q, v, self.tail_exponent, self.support)
    }
}

impl Profile1D for GridFunction1D {
    fn value(&self, q: f64) -> Result<f64> {
        GridFunction1D::value(self, q)
    }

    fn integral(&self, a: f64, b: f64) -> Result<f64> {
        self.integrate(a, b)
    }
}

pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { b } else { a + h * i as f64 }).collect()
}

/// Scattering data `Â` with the limits it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringData {
    pub a_hat: GridFunction1D,
    pub a_raw: GridFunction1D,
    pub a1: GridFunction1D,
    pub epsilon: f64,
    pub delta: f64,
    pub r_support: f64,
}

impl ScatteringData {
    /// `A₂ = −2A/A₁` at node `i` of `a_raw`.
    pub fn a2_at(&self, q: f64) -> Result<f64> {
        Ok(-2.0 * self.a_raw.value(q)? / self.a1.value(q)?)
    }

    /// Whether every tabulated `A₁` lies in `[−3 − tol, −1 + tol]`.
    pub fn a1_in_range(&self, tol: f64) -> bool {
        self.a1.values().iter().all(|&a| a >= -3.0 - tol && a <= -1.0 + tol)
    }
}

/// `μ = a₁ exp(¼G a₁a₂ s)`, `U_q = a₂ exp(−¼G a₁a₂ s)`.
pub fn reduced_solution(a1: f64, a2: f64, g: f64, s: f64) -> (f64, f64) {
    let k = 0.25 * g * a1 * a2 * s;
    (a1 * k.exp(), a2 * (-k).exp())
}

/// `μ̂ = −2 exp(−½GÂs)` and `Û_q = Â exp(½GÂs)` on the grid of `Â`.
pub fn normalized_profiles(sd: &ScatteringData, g: f64, s: f64) -> Result<(GridFunction1D, GridFunction1D)> {
    let a = &sd.a_hat;
    let mu = a.map(|_, ah| -2.0 * (-0.5 * g * ah * s).exp())?;
    let mut mu = mu;
    mu.support = None;
    mu.tail_exponent = None;
    let uq = a.map(|_, ah| ah * (0.5 * g * ah * s).exp())?;
    Ok((mu, uq))
}

/// `∂_s^m Û(s, q) = −∫_q^R Â (½GÂ)^m exp(½GÂs) dp`.
pub fn u_hat_s_derivative(sd: &ScatteringData, g: f64, s: f64, m: u32, q: f64) -> Result<f64> {
    let a = &sd.a_hat;
    let r = sd.r_support.min(a.upper());
    if q >= r {
        return Ok(0.0);
    }
    let integrand = |p: f64| {
        let ah = a.at(p);
        ah * (0.5 * g * ah).powi(m as i32) * (0.5 * g * ah * s).exp()
    };
    let mut total = 0.0;
    let q0 = a.lower();
    if q < q0 {
        let tail = a.tail_exponent.ok_or(Error::Extrapolation { q, lower: q0 })?;
        if tail != f64::NEG_INFINITY {
            total += integrate_toward(&integrand, q, q0);
        }
    }
    if m == 0 && (g == 0.0 || s == 0.0) {
        // Integrand is the spline itself.
        total += a.integrate(q.max(q0), r)?;
    } else if !(m > 0 && g == 0.0) {
        total += gl_grid(a, &integrand, q.max(q0), r);
    }
    Ok(-total)
}

/// 8-point Gauss–Legendre on every grid interval meeting `[lo, hi]`.
fn gl_grid<F: Fn(f64) -> f64>(a: &GridFunction1D, f: &F, lo: f64, hi: f64) -> f64 {
    if !(lo < hi) {
        return 0.0;
    }
    let g = a.q_grid();
    let mut parts = Vec::new();
    for w in g.windows(2) {
        let x0 = w[0].max(lo);
        let x1 = w[1].min(hi);
        if x0 < x1 {
            parts.push(gl_panel(f, x0, x1));
        }
    }
    pairwise_sum(&parts)
}

/// `Û(s, q) = −∫_q^R Â exp(½GÂs) dp`.
pub fn u_hat_profile(sd: &ScatteringData, g: f64, s: f64, q: f64) -> Result<f64> {
    u_hat_s_derivative(sd, g, s, 0, q)
}

const A1_FLOOR: f64 = -1e-8;

/// `F(q) = 2R − ∫_{2R}^q 2/A₁`, with `A₁ = −2` beyond the tabulated range.
#[derive(Debug, Clone)]
pub struct GaugeMap {
    a1: GridFunction1D,
    anchor: f64,
    /// `∫_{q_0}^{q_i} (2/A₁ + 1)` at every node.
    cumulative: Vec<f64>,
}

impl GaugeMap {
    pub fn new(a1: &GridFunction1D, r_support: f64) -> Result<Self> {
        let g = a1.q_grid();
        for (&q, &v) in g.iter().zip(a1.values()) {
            if v >= A1_FLOOR {
                return Err(Error::GaugeDegeneracy { q, a1: v });
            }
        }
        let (x, _) = gl8();
        let mut cumulative = vec![0.0; g.len()];
        for i in 0..g.len() - 1 {
            let (lo, hi) = (g[i], g[i + 1]);
            for xi in x {
                let q = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xi;
                let v = a1.spline_at(q);
                if v >= A1_FLOOR {
                    return Err(Error::GaugeDegeneracy { q, a1: v });
                }
            }
            cumulative[i + 1] = cumulative[i] + gl_panel(&|q: f64| 2.0 / a1.spline_at(q) + 1.0, lo, hi);
        }
        Ok(Self {
            a1: a1.clone(),
            anchor: 2.0 * r_support,
            cumulative,
        })
    }

    pub fn lower(&self) -> f64 {
        self.a1.lower()
    }

    /// `∫_{q_0}^{q} (2/A₁ + 1)`.
    fn primitive(&self, q: f64) -> f64 {
        let g = self.a1.q_grid();
        if q >= self.a1.upper() {
            return *self.cumulative.last().unwrap();
        }
        let i = g.partition_point(|&x| x <= q).clamp(1, g.len() - 1) - 1;
        self.cumulative[i] + gl_panel(&|p: f64| 2.0 / self.a1.spline_at(p) + 1.0, g[i], q)
    }

    pub fn forward(&self, q: f64) -> Result<f64> {
        if q < self.a1.lower() {
            return Err(Error::Extrapolation {
                q,
                lower: self.a1.lower(),
            });
        }
        Ok(q + self.primitive(self.anchor) - self.primitive(q))
    }

    pub fn derivative(&self, q: f64) -> f64 {
        if q >= self.a1.upper() {
            1.0
        } else {
            -2.0 / self.a1.spline_at(q)
        }
    }

    /// Solves `F(q) = ρ` by safeguarded Newton iteration.
    pub fn inverse(&self, rho: f64) -> Result<f64> {
        let upper = self.a1.upper();
        let f_up = self.forward(upper)?;
        if rho >= f_up {
            return Ok(rho - (f_up - upper));
        }
        let mut lo = self.a1.lower();
        let f_lo = self.forward(lo)?;
        if rho < f_lo {
            return Err(Error::Extrapolation { q: rho, lower: f_lo });
        }
        let mut hi = upper;
        let mut q = rho.clamp(lo, hi);
        for _ in 0..200 {
            let f = self.forward(q)? - rho;
            if f == 0.0 {
                return Ok(q);
            }
            if f > 0.0 {
                hi = q;
            } else {
                lo = q;
            }
            let mut next = q - f / self.derivative(q);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - q).abs() <= 1e-14 * (1.0 + q.abs()) {
                return Ok(next);
            }
            q = next;
        }
        Ok(q)
    }
}

pub fn gauge_map(a1: &GridFunction1D, r_support: f64, q: f64) -> Result<f64> {
    GaugeMap::new(a1, r_support)?.forward(q)
}

pub fn gauge_map_inverse(a1: &GridFunction1D, r_support: f64, rho: f64) -> Result<f64> {
    GaugeMap::new(a1, r_support)?.inverse(rho)
}

/// `Â(q) = A(F̂(q))`, tabulated on the nodes of `a_raw` where `F̂` stays on
/// the grid.
pub fn scattering_from_limits(a_raw: &GridFunction1D, a1: &GridFunction1D, r_support: f64) -> Result<GridFunction1D> {
    let map = GaugeMap::new(a1, r_support)?;
    let start = map.forward(map.lower())?.max(a_raw.lower()).max(map.lower());
    let nodes: Vec<f64> = a_raw.q_grid().iter().copied().filter(|&q| q >= start).collect();
    let values = nodes
        .par_iter()
        .map(|&q| {
            if q >= r_support {
                Ok(0.0)
            } else {
                a_raw.value(map.inverse(q)?)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    GridFunction1D::new(nodes, values, a_raw.tail_exponent, Some(r_support))
}

/// Letters of a commuting-vector-field word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    /// Scaling `S`.
    S,
    /// Rotation `Ω_{ij}`, `i < j`, zero-based axes.
    Rotation(usize, usize),
    /// Boost `B_i`, zero-based axis.
    Boost(usize),
    /// Translation.
    Translation,
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::S => write!(f, "S"),
            Letter::Rotation(i, j) => write!(f, "O{}{}", i + 1, j + 1),
            Letter::Boost(i) => write!(f, "B{}", i + 1),
            Letter::Translation => write!(f, "D"),
        }
    }
}

impl FromStr for Letter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InputDomain(format!("unknown letter {s:?}"));
        let axis = |c: char| match c {
            '1' => Ok(0),
            '2' => Ok(1),
            '3' => Ok(2),
            _ => Err(bad()),
        };
        let chars: Vec<char> = s.chars().collect();
        match chars.as_slice() {
            ['S'] => Ok(Letter::S),
            ['D'] | ['T'] => Ok(Letter::Translation),
            ['B', i] => Ok(Letter::Boost(axis(*i)?)),
            ['O', i, j] => {
                let (i, j) = (axis(*i)?, axis(*j)?);
                if i < j {
                    Ok(Letter::Rotation(i, j))
                } else {
                    Err(bad())
                }
            }
            _ => Err(bad()),
        }
    }
}

/// `Z^I` as a sequence of letters; the first letter is the outermost factor.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct MultiIndexWord {
    pub letters: Vec<Letter>,
}

impl MultiIndexWord {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(letters: Vec<Letter>) -> Self {
        Self { letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

impl FromStr for MultiIndexWord {
    type Err = Error;

    /// Letters separated by whitespace or commas, e.g. `"S B1 O23"`.
    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(Letter::from_str)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { letters })
    }
}

impl fmt::Display for MultiIndexWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

fn add_into<K: Ord>(map: &mut BTreeMap<K, AngularPolynomial>, key: K, p: AngularPolynomial) {
    if p.is_zero() {
        return;
    }
    let e = map.entry(key).or_default();
    *e = e.add(&p);
}

fn drop_zeros<K: Ord>(map: BTreeMap<K, AngularPolynomial>) -> BTreeMap<K, AngularPolynomial> {
    map.into_iter().filter(|(_, p)| !p.is_zero()).collect()
}

/// `A_I = Σ_k P_k(ω) (q∂_q)^k A₀` with `A₀ = −2Â` radial.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymbolicA {
    pub terms: BTreeMap<u32, AngularPolynomial>,
}

impl SymbolicA {
    pub fn base() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(0, AngularPolynomial::constant(1.0));
        Self { terms }
    }

    pub fn apply(&self, letter: Letter) -> Self {
        let mut out = BTreeMap::new();
        for (&k, p) in &self.terms {
            match letter {
                Letter::S => add_into(&mut out, k + 1, p.clone()),
                Letter::Rotation(i, j) => {
                    let r = AngularPolynomial::omega(i)
                        .mul(&angular_derivative(p, j))
                        .add(&AngularPolynomial::omega(j).mul(&angular_derivative(p, i)).scale(-1.0));
                    add_into(&mut out, k, r);
                }
                Letter::Boost(i) => {
                    let wp = AngularPolynomial::omega(i).mul(p);
                    add_into(&mut out, k + 1, wp.scale(-1.0));
                    add_into(&mut out, k, angular_derivative(p, i).add(&wp.scale(-2.0)));
                }
                Letter::Translation => {}
            }
        }
        Self { terms: drop_zeros(out) }
    }
}

pub fn derive_ai_symbolic(word: &MultiIndexWord) -> SymbolicA {
    word.letters
        .iter()
        .rev()
        .fold(SymbolicA::base(), |acc, &l| acc.apply(l))
}

/// `U_I = Σ_{k,m} P_{k,m}(ω) ε^m (q∂_q)^k ∂_s^m Û`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymbolicU {
    pub terms: BTreeMap<(u32, u32), AngularPolynomial>,
}

impl SymbolicU {
    pub fn base() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((0, 0), AngularPolynomial::constant(1.0));
        Self { terms }
    }

    pub fn apply(&self, letter: Letter) -> Self {
        let mut out = BTreeMap::new();
        for (&(k, m), p) in &self.terms {
            match letter {
                Letter::S => {
                    add_into(&mut out, (k, m + 1), p.clone());
                    add_into(&mut out, (k + 1, m), p.clone());
                    add_into(&mut out, (k, m), p.scale(-1.0));
                }
                Letter::Rotation(i, j) => {
                    let r = AngularPolynomial::omega(i)
                        .mul(&angular_derivative(p, j))
                        .add(&AngularPolynomial::omega(j).mul(&angular_derivative(p, i)).scale(-1.0));
                    add_into(&mut out, (k, m), r);
                }
                Letter::Boost(i) => {
                    let wp = AngularPolynomial::omega(i).mul(p);
                    add_into(&mut out, (k, m + 1), wp.clone());
                    add_into(&mut out, (k + 1, m), wp.scale(-1.0));
                    add_into(&mut out, (k, m), angular_derivative(p, i).add(&wp.scale(-1.0)));
                }
                Letter::Translation => {}
            }
        }
        Self { terms: drop_zeros(out) }
    }
}

pub fn derive_ui_symbolic(word: &MultiIndexWord) -> SymbolicU {
    word.letters
        .iter()
        .rev()
        .fold(SymbolicU::base(), |acc, &l| acc.apply(l))
}

/// One summand `profile(q)·angular(ω)` of a [`TermList`].
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub profile: GridFunction1D,
    pub angular: AngularPolynomial,
    /// Number of `ε∂_s` factors folded into `profile`.
    pub s_order: u32,
}

/// Finite sum `Σ_k p_k(q) P_k(ω)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TermList {
    pub terms: Vec<Term>,
}

impl TermList {
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn evaluate(&self, q: f64, omega: &Vec3) -> Result<f64> {
        let mut parts = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            parts.push(t.profile.value(q)? * t.angular.evaluate(omega));
        }
        Ok(pairwise_sum(&parts))
    }

    /// True when every angular factor is a constant.
    pub fn is_radial(&self) -> bool {
        self.terms.iter().all(|t| t.angular.is_constant())
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    profile: t.profile.scale(k),
                    angular: t.angular.clone(),
                    s_order: t.s_order,
                })
                .collect(),
        }
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }
    }
}

fn q_dq_powers(base: GridFunction1D, kmax: u32) -> Result<Vec<GridFunction1D>> {
    let mut out = vec![base];
    for _ in 0..kmax {
        let next = out.last().unwrap().q_dq()?;
        out.push(next);
    }
    Ok(out)
}

/// `A_I` as a [`TermList`] of tabulated profiles.
pub fn derive_ai(a_hat: &GridFunction1D, word: &MultiIndexWord) -> Result<TermList> {
    let sym = derive_ai_symbolic(word);
    let Some(&kmax) = sym.terms.keys().max() else {
        return Ok(TermList::default());
    };
    let powers = q_dq_powers(a_hat.scale(-2.0), kmax)?;
    let terms = sym
        .terms
        .into_iter()
        .map(|(k, angular)| Term {
            profile: powers[k as usize].clone(),
            angular,
            s_order: 0,
        })
        .collect();
    Ok(TermList { terms })
}

/// `U_I` at slow time `s` as a [`TermList`]; the `ε^m ∂_s^m` factors are
/// evaluated on the closed-form exponential.
pub fn derive_ui(sd: &ScatteringData, g: f64, s: f64, word: &MultiIndexWord) -> Result<TermList> {
    let sym = derive_ui_symbolic(word);
    if sym.terms.is_empty() {
        return Ok(TermList::default());
    }
    let a = &sd.a_hat;
    let grid = a.q_grid().to_vec();
    let eps = sd.epsilon;
    let mut cache: BTreeMap<u32, Vec<GridFunction1D>> = BTreeMap::new();
    let mut terms = Vec::new();
    for (&(k, m), angular) in &sym.terms {
        if !cache.contains_key(&m) {
            let kmax = sym
                .terms
                .keys()
                .filter(|(_, mm)| *mm == m)
                .map(|(kk, _)| *kk)
                .max()
                .unwrap();
            let scale = eps.powi(m as i32);
            let values = grid
                .par_iter()
                .map(|&q| u_hat_s_derivative(sd, g, s, m, q).map(|v| v * scale))
                .collect::<Result<Vec<f64>>>()?;
            let base = GridFunction1D::new(grid.clone(), values, None, Some(sd.r_support))?;
            let mut profiles = vec![base];
            if kmax >= 1 {
                // q∂_q of the integral is exact pointwise.
                let d1: Vec<f64> = grid
                    .iter()
                    .map(|&q| {
                        let ah = a.at(q);
                        scale * q * ah * (0.5 * g * ah).powi(m as i32) * (0.5 * g * ah * s).exp()
                    })
                    .collect();
                let mut p = GridFunction1D::new(grid.clone(), d1, None, Some(sd.r_support))?;
                profiles.push(p.clone());
                for _ in 1..kmax {
                    p = p.q_dq()?;
                    profiles.push(p.clone());
                }
            }
            cache.insert(m, profiles);
        }
        terms.push(Term {
            profile: cache[&m][k as usize].clone(),
            angular: angular.clone(),
            s_order: m,
        });
    }
    Ok(TermList { terms })
}

/// Max-norm central-difference residuals of `∂_s(μU_q) = 0` and
/// `∂_sμ = ¼Gμ²U_q` on a uniform `s` grid; tables are indexed `[s][q]`.
pub fn reduced_residual(s_grid: &[f64], mu: &[Vec<f64>], uq: &[Vec<f64>], g: f64) -> Result<(f64, f64)> {
    let ns = s_grid.len();
    if ns < 3 || mu.len() != ns || uq.len() != ns {
        return Err(Error::InputDomain(
            "residual needs at least three s levels and matching tables".into(),
        ));
    }
    let mut r1: f64 = 0.0;
    let mut r2: f64 = 0.0;
    for n in 1..ns - 1 {
        let ds = s_grid[n + 1] - s_grid[n - 1];
        let nq = mu[n].len();
        if mu[n - 1].len() != nq || mu[n + 1].len() != nq || uq[n].len() != nq {
            return Err(Error::InputDomain("ragged residual tables".into()));
        }
        for j in 0..nq {
            let p_next = mu[n + 1][j] * uq[n + 1][j];
            let p_prev = mu[n - 1][j] * uq[n - 1][j];
            r1 = r1.max(((p_next - p_prev) / ds).abs());
            let dmu = (mu[n + 1][j] - mu[n - 1][j]) / ds;
            r2 = r2.max((dmu - 0.25 * g * mu[n][j] * mu[n][j] * uq[n][j]).abs());
        }
    }
    Ok((r1, r2))
}
