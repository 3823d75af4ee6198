//! Leapfrog solver for the radial equation `v_tt = c(v/r) v_rr`, `v = r u`,
//! and the exact d'Alembert solution of the flat problem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MetricModel;
use crate::numerics::{hermite, integrate_gl};

/// Smooth, compactly supported radial data
/// `u0 = a0·b(r)`, `u1 = a1·b(r)` with `b(r) = exp(−1/(1−(r/R)²))` on `r < R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub u0_amplitude: f64,
    pub u1_amplitude: f64,
    pub radius: f64,
}

impl InitialData {
    pub fn bump(u0_amplitude: f64, u1_amplitude: f64, radius: f64) -> Result<Self> {
        let d = Self {
            u0_amplitude,
            u1_amplitude,
            radius,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.u0_amplitude.is_finite() || !self.u1_amplitude.is_finite() {
            return Err(Error::Configuration(format!("invalid bump data {self:?}")));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.u0_amplitude == 0.0 && self.u1_amplitude == 0.0
    }

    fn b(&self, r: f64) -> f64 {
        let x = r / self.radius;
        let d = 1.0 - x * x;
        if d <= 0.0 {
            0.0
        } else {
            (-1.0 / d).exp()
        }
    }

    fn b_prime(&self, r: f64) -> f64 {
        let x = r / self.radius;
        let d = 1.0 - x * x;
        if d <= 0.0 {
            0.0
        } else {
            (-1.0 / d).exp() * (-2.0 * x / self.radius) / (d * d)
        }
    }

    pub fn u0(&self, r: f64) -> f64 {
        self.u0_amplitude * self.b(r)
    }

    pub fn u1(&self, r: f64) -> f64 {
        self.u1_amplitude * self.b(r)
    }

    /// Odd extension of `r·u0`.
    pub fn v0(&self, q: f64) -> f64 {
        q * self.u0(q)
    }

    pub fn v0_prime(&self, q: f64) -> f64 {
        self.u0_amplitude * (self.b(q) + q * self.b_prime(q))
    }

    /// Odd extension of `r·u1`.
    pub fn v1(&self, q: f64) -> f64 {
        q * self.u1(q)
    }

    /// `∫_0^x v1`, an even function.
    pub fn w1(&self, x: f64) -> f64 {
        if self.u1_amplitude == 0.0 {
            return 0.0;
        }
        let a = x.abs().min(self.radius);
        integrate_gl(&|p: f64| self.v1(p), 0.0, a, 64)
    }

    /// `sup |v0'| + R·sup |u1|`, a bound for `|v_r|` of the linear flow.
    pub fn derivative_bound(&self) -> f64 {
        let n = 2000;
        let mut m0: f64 = 0.0;
        let mut m1: f64 = 0.0;
        for i in 0..=n {
            let r = self.radius * i as f64 / n as f64;
            m0 = m0.max(self.v0_prime(r).abs());
            m1 = m1.max(self.u1(r).abs());
        }
        m0 + self.radius * m1
    }
}

/// `(v, v_t, v_r)` of the flat solution with data `(εu0, εu1)`.
pub fn dalembert_state(data: &InitialData, epsilon: f64, t: f64, r: f64) -> (f64, f64, f64) {
    let (a, b) = (r - t, r + t);
    let v = 0.5 * (data.v0(a) + data.v0(b)) + 0.5 * (data.w1(b) - data.w1(a));
    let vt = 0.5 * (data.v0_prime(b) - data.v0_prime(a)) + 0.5 * (data.v1(b) + data.v1(a));
    let vr = 0.5 * (data.v0_prime(b) + data.v0_prime(a)) + 0.5 * (data.v1(b) - data.v1(a));
    (epsilon * v, epsilon * vt, epsilon * vr)
}

/// Exact `u(t, r)` of the flat problem; at `r = 0` the limit `v_r(t, 0)`.
pub fn dalembert_linear(data: &InitialData, epsilon: f64, t: f64, r: f64) -> f64 {
    if r.abs() < 1e-9 {
        return epsilon * (data.v0_prime(t) + data.v1(t));
    }
    dalembert_state(data, epsilon, t, r).0 / r
}

/// Flat-space radiation field per unit amplitude, `½(v0'(q) − v1(q))`.
pub fn exact_linear_radiation_field(data: &InitialData, q: f64) -> f64 {
    0.5 * (data.v0_prime(q) - data.v1(q))
}

/// What [`RadialField::evaluate`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    U,
    Ut,
    Ur,
    /// `(∂_t − ∂_r)(r u)`.
    Trz,
}

/// Interpolated values at one space-time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub v: f64,
    pub v_t: f64,
    pub v_r: f64,
    pub u: f64,
    pub u_t: f64,
    pub u_r: f64,
}

/// Simulated `v = r u` on stored time levels `t_n = n·dt_stored`, `r_j = j·dr`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub metric: MetricModel,
    pub data: InitialData,
    pub epsilon: f64,
    pub r_support: f64,
    pub dr: f64,
    pub n_r: usize,
    /// Leapfrog step.
    pub dt: f64,
    pub stride: usize,
    pub n_t: usize,
    pub cfl: f64,
    /// Largest `λ²c(u)` met during the run.
    pub max_courant: f64,
    /// Row-major `[n_t][n_r]`.
    pub v: Vec<f64>,
    pub v_t: Vec<f64>,
}

impl RadialField {
    pub fn dt_stored(&self) -> f64 {
        self.dt * self.stride as f64
    }

    pub fn t_max(&self) -> f64 {
        (self.n_t - 1) as f64 * self.dt_stored()
    }

    pub fn r_max(&self) -> f64 {
        (self.n_r - 1) as f64 * self.dr
    }

    pub fn t_at(&self, n: usize) -> f64 {
        n as f64 * self.dt_stored()
    }

    pub fn r_at(&self, j: usize) -> f64 {
        j as f64 * self.dr
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.v[n * self.n_r..(n + 1) * self.n_r]
    }

    pub fn row_t(&self, n: usize) -> &[f64] {
        &self.v_t[n * self.n_r..(n + 1) * self.n_r]
    }

    pub fn contains(&self, t: f64, r: f64) -> bool {
        t >= 0.0 && t <= self.t_max() && r >= 0.0 && r <= self.r_max()
    }

    /// Fourth-order `∂_r` of a row at node `j`, odd across `r = 0`.
    fn d_r(&self, row: &[f64], j: usize) -> f64 {
        let at = |k: isize| -> f64 {
            if k < 0 {
                -row[(-k) as usize]
            } else if (k as usize) < self.n_r {
                row[k as usize]
            } else {
                0.0
            }
        };
        let j = j as isize;
        (-at(j + 2) + 8.0 * at(j + 1) - 8.0 * at(j - 1) + at(j - 2)) / (12.0 * self.dr)
    }

    /// Bicubic Hermite interpolation of `(v, v_t, v_r, v_tr)`.
    fn interp_v(&self, t: f64, r: f64) -> Result<(f64, f64, f64, f64)> {
        if !self.contains(t, r) {
            return Err(Error::Range { t, r });
        }
        let ht = self.dt_stored();
        let hr = self.dr;
        let n = ((t / ht).floor() as usize).min(self.n_t - 2);
        let j = ((r / hr).floor() as usize).min(self.n_r - 2);
        let st = (t - n as f64 * ht) / ht;
        let sr = (r - j as f64 * hr) / hr;
        // Corner data (f, f_t, f_r, f_tr) at (n + a, j + b).
        let mut f = [[0.0; 2]; 2];
        let mut ft = [[0.0; 2]; 2];
        let mut fr = [[0.0; 2]; 2];
        let mut ftr = [[0.0; 2]; 2];
        for a in 0..2 {
            let row = self.row(n + a);
            let row_t = self.row_t(n + a);
            for b in 0..2 {
                let jj = j + b;
                f[a][b] = row[jj];
                ft[a][b] = row_t[jj];
                fr[a][b] = self.d_r(row, jj);
                ftr[a][b] = self.d_r(row_t, jj);
            }
        }
        // Interpolate along r at both time levels, then along t.
        let mut g = [0.0; 2];
        let mut g_r = [0.0; 2];
        let mut gt = [0.0; 2];
        let mut gt_r = [0.0; 2];
        for a in 0..2 {
            let (v, dv) = hermite(f[a][0], f[a][1], fr[a][0], fr[a][1], hr, sr);
            g[a] = v;
            g_r[a] = dv;
            let (w, dw) = hermite(ft[a][0], ft[a][1], ftr[a][0], ftr[a][1], hr, sr);
            gt[a] = w;
            gt_r[a] = dw;
        }
        let (v, v_t) = hermite(g[0], g[1], gt[0], gt[1], ht, st);
        let (v_r, v_tr) = hermite(g_r[0], g_r[1], gt_r[0], gt_r[1], ht, st);
        Ok((v, v_t, v_r, v_tr))
    }

    pub fn sample(&self, t: f64, r: f64) -> Result<FieldSample> {
        let (v, v_t, v_r, _) = self.interp_v(t, r)?;
        let dr = self.dr;
        if r >= dr {
            let u = v / r;
            return Ok(FieldSample {
                v,
                v_t,
                v_r,
                u,
                u_t: v_t / r,
                u_r: (v_r - u) / r,
            });
        }
        // Near the axis u is even in r: blend u(0) = v_r(t, 0) with u(dr).
        let (_, _, vr0, utr0) = self.interp_v(t, 0.0)?;
        let (va, vta, _, _) = self.interp_v(t, dr)?;
        let (ua, uta) = (va / dr, vta / dr);
        let x = (r / dr).powi(2);
        let bu = ua - vr0;
        let bt = uta - utr0;
        Ok(FieldSample {
            v,
            v_t,
            v_r,
            u: vr0 + bu * x,
            u_t: utr0 + bt * x,
            u_r: 2.0 * bu * r / (dr * dr),
        })
    }

    pub fn evaluate(&self, t: f64, r: f64, what: Quantity) -> Result<f64> {
        let s = self.sample(t, r)?;
        Ok(match what {
            Quantity::U => s.u,
            Quantity::Ut => s.u_t,
            Quantity::Ur => s.u_r,
            Quantity::Trz => s.v_t - s.v_r,
        })
    }
}

/// One leapfrog step `v⁺ = 2v − v⁻ + λ²c(v/r)(δ²v)`; returns the largest
/// `λ²c` used. `v⁺` may alias neither input.
pub fn leapfrog_step(
    metric: &MetricModel,
    lambda2: f64,
    dr: f64,
    t: f64,
    prev: &[f64],
    cur: &[f64],
    next: &mut [f64],
) -> Result<f64> {
    let n = cur.len();
    next[0] = 0.0;
    next[n - 1] = 0.0;
    let mut courant: f64 = 0.0;
    let linear = metric.is_linear();
    for j in 1..n - 1 {
        let lap = cur[j + 1] - 2.0 * cur[j] + cur[j - 1];
        let k = if linear {
            lambda2
        } else {
            let r = j as f64 * dr;
            let c = metric.c(cur[j] / r);
            if !(c > 0.0) {
                return Err(Error::SpeedDegeneracy { t, r, c });
            }
            lambda2 * c
        };
        courant = courant.max(k);
        next[j] = 2.0 * cur[j] - prev[j] + k * lap;
    }
    Ok(courant)
}

fn check_courant(courant: f64, t: f64) -> Result<()> {
    if courant > 1.0 {
        return Err(Error::Configuration(format!(
            "CFL violated at t = {t}: lambda^2 c = {courant} > 1 (lower cfl or epsilon)"
        )));
    }
    Ok(())
}

pub fn simulate_radial(
    metric: &MetricModel,
    data: &InitialData,
    epsilon: f64,
    t_max: f64,
    dr: f64,
    cfl: f64,
) -> Result<RadialField> {
    simulate_radial_strided(metric, data, epsilon, t_max, dr, cfl, 1)
}

/// As [`simulate_radial`], keeping every `stride`-th time level.
pub fn simulate_radial_strided(
    metric: &MetricModel,
    data: &InitialData,
    epsilon: f64,
    t_max: f64,
    dr: f64,
    cfl: f64,
    stride: usize,
) -> Result<RadialField> {
    if !metric.radial {
        return Err(Error::Configuration("the radial solver needs a radial metric".into()));
    }
    data.validate()?;
    if !(cfl > 0.0 && cfl <= 0.95) {
        return Err(Error::Configuration(format!("cfl must lie in (0, 0.95], got {cfl}")));
    }
    if !(dr > 0.0 && t_max > 0.0 && epsilon.is_finite()) || stride == 0 {
        return Err(Error::Configuration(format!(
            "need dr > 0, t_max > 0, stride >= 1 (dr = {dr}, t_max = {t_max}, stride = {stride})"
        )));
    }
    let r_support = data.radius;
    let u_bound = 1.5 * epsilon.abs() * data.derivative_bound();
    let mut c_max: f64 = 1.0;
    for i in 0..=200 {
        let u = -u_bound + 2.0 * u_bound * i as f64 / 200.0;
        c_max = c_max.max(metric.c(u));
    }
    let dt_cap = cfl * dr / c_max.sqrt();
    let blocks = (t_max / (dt_cap * stride as f64)).ceil().max(1.0) as usize;
    let steps = blocks * stride;
    let dt = t_max / steps as f64;
    let lambda2 = (dt / dr).powi(2);

    let r_max = t_max + r_support + 2.0 * dr;
    let n_r = (r_max / dr).ceil() as usize + 1;
    let n_t = blocks + 1;
    let mut v_store = vec![0.0; n_t * n_r];
    let mut vt_store = vec![0.0; n_t * n_r];

    let mut prev = vec![0.0; n_r];
    let mut cur = vec![0.0; n_r];
    let mut next = vec![0.0; n_r];
    let mut vt0 = vec![0.0; n_r];
    for j in 1..n_r - 1 {
        let r = j as f64 * dr;
        cur[j] = epsilon * data.v0(r);
        vt0[j] = epsilon * data.v1(r);
    }
    // Taylor start: v¹ = v⁰ + dt v_t + ½dt² c v_rr.
    let mut courant: f64 = 0.0;
    next[0] = 0.0;
    next[n_r - 1] = 0.0;
    for j in 1..n_r - 1 {
        let r = j as f64 * dr;
        let c = metric.c(cur[j] / r);
        if !(c > 0.0) {
            return Err(Error::SpeedDegeneracy { t: 0.0, r, c });
        }
        courant = courant.max(lambda2 * c);
        let lap = cur[j + 1] - 2.0 * cur[j] + cur[j - 1];
        next[j] = cur[j] + dt * vt0[j] + 0.5 * lambda2 * c * lap;
    }
    check_courant(courant, 0.0)?;
    v_store[..n_r].copy_from_slice(&cur);
    vt_store[..n_r].copy_from_slice(&vt0);
    std::mem::swap(&mut prev, &mut cur);
    std::mem::swap(&mut cur, &mut next);
    // Now prev = level 0, cur = level 1.
    let inv2dt = 0.5 / dt;
    for n in 1..=steps {
        let t = n as f64 * dt;
        let k = leapfrog_step(metric, lambda2, dr, t, &prev, &cur, &mut next)?;
        check_courant(k, t)?;
        courant = courant.max(k);
        if n % stride == 0 {
            let m = n / stride;
            v_store[m * n_r..(m + 1) * n_r].copy_from_slice(&cur);
            let row = &mut vt_store[m * n_r..(m + 1) * n_r];
            for j in 0..n_r {
                row[j] = (next[j] - prev[j]) * inv2dt;
            }
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(RadialField {
        metric: metric.clone(),
        data: *data,
        epsilon,
        r_support,
        dr,
        n_r,
        dt,
        stride,
        n_t,
        cfl,
        max_courant: courant,
        v: v_store,
        v_t: vt_store,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump() -> InitialData {
        InitialData::bump(1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn dalembert_examples() {
        let d = InitialData::bump(1.0, 0.7, 1.0).unwrap();
        for r in [0.1, 0.4, 0.9] {
            assert!((dalembert_linear(&d, 0.1, 0.0, r) - 0.1 * d.u0(r)).abs() < 1e-15);
        }
        assert_eq!(dalembert_linear(&d, 0.1, 3.0, 1.5), 0.0);
        assert!(dalembert_linear(&bump(), 0.1, 0.5, 0.5).abs() < 1e-16);
    }

    #[test]
    fn radiation_field_at_origin() {
        let a = exact_linear_radiation_field(&bump(), 0.0);
        assert!((a - 0.5 * (-1f64).exp()).abs() < 1e-15);
        assert_eq!(exact_linear_radiation_field(&bump(), 1.0), 0.0);
    }

    #[test]
    fn zero_data_gives_zero_field() {
        let d = InitialData::bump(0.0, 0.0, 1.0).unwrap();
        let f = simulate_radial(&MetricModel::radial(vec![1.0, 1.0]).unwrap(), &d, 0.1, 2.0, 0.05, 0.9).unwrap();
        assert!(f.v.iter().chain(&f.v_t).all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_bad_configuration() {
        let m = MetricModel::minkowski();
        assert!(matches!(
            simulate_radial(&m, &bump(), 0.1, 1.0, 0.05, 0.99),
            Err(Error::Configuration(_))
        ));
        let big = MetricModel::radial(vec![1.0, 1.0]).unwrap();
        let d = InitialData::bump(-30.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            simulate_radial(&big, &d, 0.5, 1.0, 0.05, 0.9),
            Err(Error::SpeedDegeneracy { .. })
        ));
    }
}
