//! Metric model, sphere quadrature and angular polynomial calculus.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, integrate_gl, pairwise_sum};

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Coefficients of `g^{αβ}(u)`: the radial sound speed polynomial `c(u)` and
/// the linearization `g0^{αβ} = d/du g^{αβ}(u)` at `u = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricModel {
    pub c_coeffs: Vec<f64>,
    pub g0: [[f64; 4]; 4],
    pub radial: bool,
}

impl MetricModel {
    pub fn new(c_coeffs: Vec<f64>, g0: [[f64; 4]; 4], radial: bool) -> Result<Self> {
        let m = Self { c_coeffs, g0, radial };
        m.validate()?;
        Ok(m)
    }

    /// Radial model `g^{ij} = c(u) δ^{ij}`; `g0` follows from `c₁`.
    pub fn radial(c_coeffs: Vec<f64>) -> Result<Self> {
        let c1 = c_coeffs.get(1).copied().unwrap_or(0.0);
        let mut g0 = [[0.0; 4]; 4];
        for (i, row) in g0.iter_mut().enumerate().skip(1) {
            row[i] = c1;
        }
        Self::new(c_coeffs, g0, true)
    }

    pub fn minkowski() -> Self {
        Self {
            c_coeffs: vec![1.0],
            g0: [[0.0; 4]; 4],
            radial: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c_coeffs.first() != Some(&1.0) {
            return Err(Error::InvalidMetric(format!(
                "c(0) must be 1, got coefficients {:?}",
                self.c_coeffs
            )));
        }
        if self
            .c_coeffs
            .iter()
            .chain(self.g0.iter().flatten())
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidMetric("non-finite coefficient".into()));
        }
        for a in 0..4 {
            for b in 0..4 {
                if self.g0[a][b] != self.g0[b][a] {
                    return Err(Error::InvalidMetric(format!("g0 not symmetric at ({a},{b})")));
                }
            }
        }
        if self.g0[0][0] != 0.0 {
            return Err(Error::InvalidMetric("g0[0][0] must vanish (g^00 is constant)".into()));
        }
        if self.radial {
            let c1 = self.c_coeffs.get(1).copied().unwrap_or(0.0);
            for a in 0..4 {
                for b in 0..4 {
                    let want = if a == b && a > 0 { c1 } else { 0.0 };
                    if self.g0[a][b] != want {
                        return Err(Error::InvalidMetric(format!(
                            "radial model requires g0 = c1·δ on the spatial block, entry ({a},{b}) is {}",
                            self.g0[a][b]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// `c(u)` by Horner's rule.
    pub fn c(&self, u: f64) -> f64 {
        self.c_coeffs.iter().rev().fold(0.0, |acc, &k| acc * u + k)
    }

    /// `c'(u)`.
    pub fn c_prime(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for (k, &ck) in self.c_coeffs.iter().enumerate().skip(1).rev() {
            acc = acc * u + k as f64 * ck;
        }
        acc
    }

    pub fn is_linear(&self) -> bool {
        self.c_coeffs.iter().skip(1).all(|&c| c == 0.0)
    }

    /// `G(ω)` for the radial model, which does not depend on `ω`.
    pub fn radial_g(&self) -> f64 {
        self.c_coeffs.get(1).copied().unwrap_or(0.0)
    }
}

/// `G(ω) = g0^{αβ} ŵ_α ŵ_β` with `ŵ = (−1, ω)`.
pub fn evaluate_g(metric: &MetricModel, omega: &Vec3) -> Result<f64> {
    let n = norm(omega);
    if !n.is_finite() || (n - 1.0).abs() > 1e-10 {
        return Err(Error::InputDomain(format!(
            "omega must be a unit vector, |omega| = {n}"
        )));
    }
    let w = [-1.0, omega[0], omega[1], omega[2]];
    let mut acc = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            acc += metric.g0[a][b] * w[a] * w[b];
        }
    }
    Ok(acc)
}

pub fn null_condition_satisfied(metric: &MetricModel) -> bool {
    metric.g0.iter().flatten().all(|&g| g == 0.0)
}

/// Quadrature rule on the unit sphere.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl SphereRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(&Vec3) -> f64 + ?Sized>(&self, f: &F) -> f64 {
        let vals: Vec<f64> = self.nodes.iter().zip(&self.weights).map(|(w, &wt)| wt * f(w)).collect();
        pairwise_sum(&vals)
    }
}

/// Gauss–Legendre in `cos θ` times the uniform azimuthal rule; exact for
/// spherical polynomials of total degree at most `degree`.
pub fn sphere_rule(degree: usize) -> Result<SphereRule> {
    if degree < 2 {
        return Err(Error::InputDomain(format!(
            "sphere rule degree must be >= 2, got {degree}"
        )));
    }
    let n = (degree + 2) / 2;
    let m = degree + 1;
    let (zs, wz) = gauss_legendre(n);
    let mut nodes = Vec::with_capacity(n * m);
    let mut weights = Vec::with_capacity(n * m);
    let wphi = 2.0 * PI / m as f64;
    for (z, w) in zs.iter().zip(&wz) {
        let s = (1.0 - z * z).max(0.0).sqrt();
        for k in 0..m {
            let phi = wphi * (k as f64 + 0.5);
            let (sp, cp) = phi.sin_cos();
            let mut v = [s * cp, s * sp, *z];
            let nv = norm(&v);
            for c in v.iter_mut() {
                *c /= nv;
            }
            nodes.push(v);
            weights.push(w * wphi);
        }
    }
    Ok(SphereRule { nodes, weights, degree })
}

/// A real function of one variable that knows how to integrate itself.
pub trait Profile1D {
    fn value(&self, q: f64) -> Result<f64>;

    fn integral(&self, a: f64, b: f64) -> Result<f64>;
}

impl<F: Fn(f64) -> f64> Profile1D for F {
    fn value(&self, q: f64) -> Result<f64> {
        Ok(self(q))
    }

    fn integral(&self, a: f64, b: f64) -> Result<f64> {
        let panels = (((b - a).abs() * 16.0).ceil() as usize).clamp(8, 1 << 16);
        Ok(integrate_gl(self, a, b, panels))
    }
}

/// `∫_{S²} f(−t + r ω·θ) dS_ω = 2π r⁻¹ ∫_{−t−r}^{−t+r} f`.
pub fn spherical_mean_reduction<P: Profile1D + ?Sized>(profile: &P, t: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InputDomain(format!("radius must be positive, got {r}")));
    }
    Ok(2.0 * PI / r * profile.integral(-t - r, -t + r)?)
}

pub type Monomial = (u32, u32, u32);

/// Polynomial in `ω₁, ω₂, ω₃` modulo `|ω|² = 1`, stored with no monomial
/// divisible by `ω₃²`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AngularPolynomial {
    terms: BTreeMap<Monomial, f64>,
}

impl AngularPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms([((0, 0, 0), c)])
    }

    /// `ω_i` for axis `i ∈ {0, 1, 2}`.
    pub fn omega(i: usize) -> Self {
        let mut e = [0u32; 3];
        e[i] = 1;
        Self::from_terms([((e[0], e[1], e[2]), 1.0)])
    }

    pub fn monomial(exp: Monomial, coeff: f64) -> Self {
        Self::from_terms([(exp, coeff)])
    }

    /// Builds the reduced form of an arbitrary (unreduced) sum of monomials.
    pub fn from_terms<I: IntoIterator<Item = (Monomial, f64)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_reduced_monomial(m, c);
        }
        p
    }

    fn add_reduced_monomial(&mut self, (a, b, c): Monomial, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        if c < 2 {
            let e = self.terms.entry((a, b, c)).or_insert(0.0);
            *e += coeff;
            if *e == 0.0 {
                self.terms.remove(&(a, b, c));
            }
            return;
        }
        // ω₃² = 1 − ω₁² − ω₂²
        self.add_reduced_monomial((a, b, c - 2), coeff);
        self.add_reduced_monomial((a + 2, b, c - 2), -coeff);
        self.add_reduced_monomial((a, b + 2, c - 2), -coeff);
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &f64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: Monomial) -> f64 {
        self.terms.get(&m).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|&m| m == (0, 0, 0))
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(a, b, c)| a + b + c).max().unwrap_or(0)
    }

    pub fn evaluate(&self, w: &Vec3) -> f64 {
        self.terms
            .iter()
            .map(|(&(a, b, c), k)| k * w[0].powi(a as i32) * w[1].powi(b as i32) * w[2].powi(c as i32))
            .sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&m, &c) in &other.terms {
            out.add_reduced_monomial(m, c);
        }
        out
    }

    pub fn scale(&self, k: f64) -> Self {
        if k == 0.0 {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(&m, &c)| (m, c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (&(a, b, c), &x) in &self.terms {
            for (&(d, e, f), &y) in &other.terms {
                out.add_reduced_monomial((a + d, b + e, c + f), x * y);
            }
        }
        out
    }
}

impl fmt::Display for AngularPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(a, b, c), &k) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{k}")?;
            for (i, e) in [a, b, c].iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "·w{}", i + 1)?,
                    _ => write!(f, "·w{}^{}", i + 1, e)?,
                }
            }
        }
        Ok(())
    }
}

/// Tangential derivative `∂_{ω_i}` of the degree-0 extension `p(x/|x|)`,
/// restricted to the sphere.
pub fn angular_derivative(p: &AngularPolynomial, i: usize) -> AngularPolynomial {
    assert!(i < 3, "axis index must be 0, 1 or 2");
    let mut out = AngularPolynomial::zero();
    for (&(a, b, c), &k) in p.terms() {
        let e = [a, b, c];
        let deg = (a + b + c) as f64;
        if e[i] > 0 {
            let mut d = e;
            d[i] -= 1;
            out.add_reduced_monomial((d[0], d[1], d[2]), k * e[i] as f64);
        }
        if deg > 0.0 {
            let mut d = e;
            d[i] += 1;
            out.add_reduced_monomial((d[0], d[1], d[2]), -k * deg);
        }
    }
    out
}
