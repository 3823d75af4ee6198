//! Backward representation of `□φ = F` inside the light cone, with
//! `□ = −∂_t² + Δ`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, SphereRule, Vec3};
use crate::numerics::{gauss_legendre, japanese, pairwise_sum};

type ScalarFn = Box<dyn Fn(f64, &Vec3) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(f64, &Vec3) -> (f64, Vec3) + Send + Sync>;
type DomainFn = Box<dyn Fn(f64, &Vec3) -> bool + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerDescriptor {
    pub name: String,
    pub params: Vec<(String, f64)>,
}

/// A function `φ(t, x)` with its gradient `(φ_t, ∇φ)` and `F = □φ`.
pub struct SpacetimeSampler {
    pub phi: ScalarFn,
    pub grad: GradFn,
    pub forcing: ScalarFn,
    /// Where the three closures may be sampled.
    pub valid: DomainFn,
    pub descriptor: SamplerDescriptor,
}

impl std::fmt::Debug for SpacetimeSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpacetimeSampler")
            .field("descriptor", &self.descriptor)
            .finish()
    }
}

impl SpacetimeSampler {
    pub fn new(
        name: &str,
        params: Vec<(String, f64)>,
        phi: impl Fn(f64, &Vec3) -> f64 + Send + Sync + 'static,
        grad: impl Fn(f64, &Vec3) -> (f64, Vec3) + Send + Sync + 'static,
        forcing: impl Fn(f64, &Vec3) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            phi: Box::new(phi),
            grad: Box::new(grad),
            forcing: Box::new(forcing),
            valid: Box::new(|_, _| true),
            descriptor: SamplerDescriptor {
                name: name.to_string(),
                params,
            },
        }
    }

    pub fn with_domain(mut self, valid: impl Fn(f64, &Vec3) -> bool + Send + Sync + 'static) -> Self {
        self.valid = Box::new(valid);
        self
    }

    pub fn name(&self) -> &str {
        &self.descriptor.name
    }

    fn check(&self, t: f64, x: &Vec3) -> Result<()> {
        if (self.valid)(t, x) {
            Ok(())
        } else {
            Err(Error::InputDomain(format!(
                "sampler '{}' is not valid at t = {t}, x = {x:?}",
                self.descriptor.name
            )))
        }
    }

    /// Largest deviation between `grad` and central differences of `phi`
    /// with step `h` over `probes`.
    pub fn gradient_mismatch(&self, probes: &[(f64, Vec3)], h: f64) -> f64 {
        let mut worst = 0.0f64;
        for (t, x) in probes {
            let (pt, px) = (self.grad)(*t, x);
            let fd_t = ((self.phi)(t + h, x) - (self.phi)(t - h, x)) / (2.0 * h);
            worst = worst.max((fd_t - pt).abs());
            for i in 0..3 {
                let mut xp = *x;
                let mut xm = *x;
                xp[i] += h;
                xm[i] -= h;
                let fd = ((self.phi)(*t, &xp) - (self.phi)(*t, &xm)) / (2.0 * h);
                worst = worst.max((fd - px[i]).abs());
            }
        }
        worst
    }
}

/// `φ = t`, `F = 0`.
pub fn affine_time() -> SpacetimeSampler {
    SpacetimeSampler::new("t", vec![], |t, _| t, |_, _| (1.0, [0.0; 3]), |_, _| 0.0)
}

/// `φ = t³`, `F = −6t`.
pub fn cubic_time() -> SpacetimeSampler {
    SpacetimeSampler::new(
        "t^3",
        vec![],
        |t, _| t * t * t,
        |t, _| (3.0 * t * t, [0.0; 3]),
        |t, _| -6.0 * t,
    )
}

/// `φ = cos(k·x − |k|t)`, `F = 0`.
pub fn plane_wave(k: Vec3) -> SpacetimeSampler {
    let w = norm(&k);
    SpacetimeSampler::new(
        "plane_wave",
        vec![("k1".into(), k[0]), ("k2".into(), k[1]), ("k3".into(), k[2])],
        move |t, x| (dot(&k, x) - w * t).cos(),
        move |t, x| {
            let s = -(dot(&k, x) - w * t).sin();
            (-w * s, [k[0] * s, k[1] * s, k[2] * s])
        },
        |_, _| 0.0,
    )
}

/// `φ = |x|² + a t²`, `F = 6 − 2a`.
pub fn quadratic(a: f64) -> SpacetimeSampler {
    SpacetimeSampler::new(
        "quadratic",
        vec![("a".into(), a)],
        move |t, x| dot(x, x) + a * t * t,
        move |t, x| (2.0 * a * t, [2.0 * x[0], 2.0 * x[1], 2.0 * x[2]]),
        move |_, _| 6.0 - 2.0 * a,
    )
}

/// The manufactured cases: `t`, `t³`, a plane wave, `|x|² + 3t²` (free)
/// and `|x|² + t²` (`F = 4`).
pub fn catalog() -> Vec<SpacetimeSampler> {
    vec![
        affine_time(),
        cubic_time(),
        plane_wave([1.0, 0.0, 0.0]),
        quadratic(3.0),
        quadratic(1.0),
    ]
}

fn check_times(t: f64, t_end: f64) -> Result<()> {
    if !(t < t_end) || !t.is_finite() || !t_end.is_finite() {
        return Err(Error::InputDomain(format!("need t < T, got t = {t}, T = {t_end}")));
    }
    Ok(())
}

fn backward_point(x: &Vec3, d: f64, theta: &Vec3) -> Vec3 {
    [x[0] - d * theta[0], x[1] - d * theta[1], x[2] - d * theta[2]]
}

/// `(4π)⁻¹ ∫_{S²} φ(T,y) − (T−t)(φ_t + θ·∇φ)(T,y) dS_θ`, `y = x − (T−t)θ`.
pub fn linear_part(s: &SpacetimeSampler, t: f64, x: &Vec3, t_end: f64, sphere: &SphereRule) -> Result<f64> {
    check_times(t, t_end)?;
    let d = t_end - t;
    for th in &sphere.nodes {
        s.check(t_end, &backward_point(x, d, th))?;
    }
    let total = sphere.integrate(&|th: &Vec3| {
        let y = backward_point(x, d, th);
        let (pt, px) = (s.grad)(t_end, &y);
        (s.phi)(t_end, &y) - d * (pt + dot(th, &px))
    });
    Ok(total / (4.0 * PI))
}

/// `−(4π)⁻¹ ∫_{|y|<T−t} F(t+|y|, x+y)|y|⁻¹ dy` in polar form, Gauss–Legendre
/// in `ρ` times `sphere`.
pub fn inhomogeneous_part(
    s: &SpacetimeSampler,
    t: f64,
    x: &Vec3,
    t_end: f64,
    sphere: &SphereRule,
    radial_nodes: usize,
) -> Result<f64> {
    check_times(t, t_end)?;
    if radial_nodes == 0 {
        return Err(Error::InputDomain("radial_nodes must be positive".into()));
    }
    let d = t_end - t;
    let (z, w) = gauss_legendre(radial_nodes);
    let shells: Vec<f64> = z
        .par_iter()
        .zip(w.par_iter())
        .map(|(&zi, &wi)| {
            let rho = 0.5 * d * (zi + 1.0);
            for eta in &sphere.nodes {
                let p = backward_point(x, -rho, eta);
                s.check(t + rho, &p)?;
            }
            let inner = sphere.integrate(&|eta: &Vec3| (s.forcing)(t + rho, &backward_point(x, -rho, eta)));
            Ok(0.5 * d * wi * rho * inner)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(-pairwise_sum(&shells) / (4.0 * PI))
}

/// `φ(t, x)` reconstructed from data at time `T` and the forcing in between.
pub fn backward_representation(
    s: &SpacetimeSampler,
    t: f64,
    x: &Vec3,
    t_end: f64,
    sphere: &SphereRule,
    radial_nodes: usize,
) -> Result<f64> {
    let lin = linear_part(s, t, x, t_end, sphere)?;
    let inh = inhomogeneous_part(s, t, x, t_end, sphere, radial_nodes)?;
    Ok(lin + inh)
}

/// Measured gap between the linear part and the `Φ`-form, next to the
/// bound `|x|·max(|φ_t| + |∇φ|)` over the sampled points at time `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiFormDifference {
    pub difference: f64,
    pub bound: f64,
}

/// `Φ(t, y) = (−∂_t + ∂_r)(|y|φ) = φ − |y|φ_t + y·∇φ`.
pub fn phi_form(s: &SpacetimeSampler, t: f64, y: &Vec3) -> f64 {
    let (pt, px) = (s.grad)(t, y);
    (s.phi)(t, y) - norm(y) * pt + dot(y, &px)
}

pub fn phi_form_difference(
    s: &SpacetimeSampler,
    t: f64,
    x: &Vec3,
    t_end: f64,
    sphere: &SphereRule,
) -> Result<PhiFormDifference> {
    let lin = linear_part(s, t, x, t_end, sphere)?;
    let d = t_end - t;
    let form = sphere.integrate(&|th: &Vec3| phi_form(s, t_end, &backward_point(x, d, th))) / (4.0 * PI);
    let sup = sphere.nodes.iter().fold(0.0f64, |m, th| {
        let (pt, px) = (s.grad)(t_end, &backward_point(x, d, th));
        m.max(pt.abs() + norm(&px))
    });
    Ok(PhiFormDifference {
        difference: (lin - form).abs(),
        bound: norm(x) * sup,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitGeometry {
    pub norm_y: f64,
    pub t_minus_norm_y: f64,
    /// `|y/|y| + θ|`.
    pub direction_error: f64,
}

/// Geometry of `y = x − (T−t)θ` for large `T`.
pub fn limit_geometry(t: f64, x: &Vec3, t_end: f64, theta: &Vec3) -> LimitGeometry {
    let y = backward_point(x, t_end - t, theta);
    let ny = norm(&y);
    let dir = if ny > 0.0 {
        let e = [y[0] / ny + theta[0], y[1] / ny + theta[1], y[2] / ny + theta[2]];
        norm(&e)
    } else {
        0.0
    };
    LimitGeometry {
        norm_y: ny,
        t_minus_norm_y: t_end - ny,
        direction_error: dir,
    }
}

/// Closed form of the bound on `∫_{t²}^{T̃²} (1+ρ)^{−γ₁/2} dρ`.
pub fn remainder_integral(t: f64, t_tilde: f64, gamma1: f64) -> f64 {
    if gamma1 == 2.0 {
        2.0 * (japanese(t_tilde) / japanese(t)).ln()
    } else if gamma1 < 2.0 {
        japanese(t_tilde).powf(2.0 - gamma1) / (1.0 - 0.5 * gamma1)
    } else {
        japanese(t).powf(2.0 - gamma1) / (0.5 * gamma1 - 1.0)
    }
}

/// `|x|·sup|∂φ(T)| + M⟨t−|x|⟩^{−γ₂}(⟨t⟩^{2−γ₁} + ∫_{t²}^{(T−t)²}(1+ρ)^{−γ₁/2}dρ)`,
/// with the integral in closed form and unit constant.
pub fn remainder_budget(t: f64, x: &Vec3, t_end: f64, m: f64, gamma1: f64, gamma2: f64, sup_grad_t: f64) -> f64 {
    let r = norm(x);
    let lin = r * sup_grad_t;
    if m == 0.0 {
        return lin;
    }
    lin + m
        * japanese(t - r).powf(-gamma2)
        * (japanese(t).powf(2.0 - gamma1) + remainder_integral(t, t_end - t, gamma1))
}
