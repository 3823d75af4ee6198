//! Small numerical kernels shared by the modules: deterministic summation,
//! Gauss–Legendre rules, cubic Hermite splines and log-log slope fits.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// `⟨x⟩ = sqrt(1 + x²)`.
#[inline]
pub fn japanese(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Pairwise (cascade) summation with a fixed split order, so the result does
/// not depend on how the caller produced the slice.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if xs.len() <= LEAF {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1],
/// nodes in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess for the i-th largest root.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(8))
}

/// Composite 8-point Gauss–Legendre quadrature of `f` over `[a, b]` split
/// into `panels` equal panels.
pub fn integrate_gl<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let (x, w) = gl8();
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut partial = Vec::with_capacity(panels);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let c = lo + 0.5 * h;
        let mut acc = 0.0;
        for (xi, wi) in x.iter().zip(w) {
            acc += wi * f(c + 0.5 * h * xi);
        }
        partial.push(0.5 * h * acc);
    }
    pairwise_sum(&partial)
}

/// Solve a tridiagonal system in place (Thomas algorithm). `lower[0]` and
/// `upper[n-1]` are ignored.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = diag[0];
    c[0] = upper[0] / d;
    rhs[0] /= d;
    for i in 1..n {
        d = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / d } else { 0.0 };
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / d;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Derivative at `x` of the Lagrange polynomial through `(xs, ys)`.
pub fn lagrange_derivative(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let mut acc = 0.0;
    for j in 0..n {
        let mut denom = 1.0;
        for m in 0..n {
            if m != j {
                denom *= xs[j] - xs[m];
            }
        }
        let mut num = 0.0;
        for k in 0..n {
            if k == j {
                continue;
            }
            let mut prod = 1.0;
            for m in 0..n {
                if m != j && m != k {
                    prod *= x - xs[m];
                }
            }
            num += prod;
        }
        acc += ys[j] * num / denom;
    }
    acc
}

fn lagrange_derivative_at_first(xs: &[f64], ys: &[f64]) -> f64 {
    lagrange_derivative(xs, ys, xs[0])
}

/// Slopes of the C² cubic spline through `(xs, ys)`, with end slopes taken
/// from the cubic through the four nearest nodes.
pub fn spline_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    spline_slopes_clamped(xs, ys, None, None)
}

/// As [`spline_slopes`], with end slopes fixed where given.
pub fn spline_slopes_clamped(xs: &[f64], ys: &[f64], first: Option<f64>, last: Option<f64>) -> Vec<f64> {
    let n = xs.len();
    match n {
        0 => return Vec::new(),
        1 => return vec![0.0],
        2 => {
            let s = (ys[1] - ys[0]) / (xs[1] - xs[0]);
            return vec![s, s];
        }
        _ => {}
    }
    let k = n.min(4);
    let s0 = first.unwrap_or_else(|| lagrange_derivative_at_first(&xs[..k], &ys[..k]));
    let sn = last.unwrap_or_else(|| {
        let rx: Vec<f64> = xs[n - k..].iter().rev().copied().collect();
        let ry: Vec<f64> = ys[n - k..].iter().rev().copied().collect();
        lagrange_derivative_at_first(&rx, &ry)
    });

    let mut lower = vec![0.0; n];
    let mut diag = vec![1.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    rhs[0] = s0;
    rhs[n - 1] = sn;
    for i in 1..n - 1 {
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        let d0 = (ys[i] - ys[i - 1]) / h0;
        let d1 = (ys[i + 1] - ys[i]) / h1;
        lower[i] = 1.0 / h0;
        diag[i] = 2.0 * (1.0 / h0 + 1.0 / h1);
        upper[i] = 1.0 / h1;
        rhs[i] = 3.0 * (d0 / h0 + d1 / h1);
    }
    solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
    rhs
}

/// Cubic Hermite basis evaluation on one interval: returns (value, derivative)
/// at local coordinate `s = (x - x0) / h`.
#[inline]
pub fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, h: f64, s: f64) -> (f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let value = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let g00 = 6.0 * s2 - 6.0 * s;
    let g10 = 3.0 * s2 - 4.0 * s + 1.0;
    let g01 = -6.0 * s2 + 6.0 * s;
    let g11 = 3.0 * s2 - 2.0 * s;
    let deriv = (g00 * y0 + g01 * y1) / h + g10 * d0 + g11 * d1;
    (value, deriv)
}

/// Result of an ordinary least-squares line fit `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = pairwise_sum(xs) / nf;
    let my = pairwise_sum(ys) / nf;
    let sxx: Vec<f64> = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    let sxy: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let sxx = pairwise_sum(&sxx);
    if sxx <= 0.0 {
        return None;
    }
    let slope = pairwise_sum(&sxy) / sxx;
    let intercept = my - slope * mx;
    let res: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .collect();
    Some(LineFit {
        slope,
        intercept,
        residual: (pairwise_sum(&res) / nf).sqrt(),
    })
}

/// Slope of `ln |y|` against `ln x`. Points with `|y|` at or below `floor`
/// are dropped; if fewer than two remain the data are treated as vanishing
/// and the slope is `-∞`.
pub fn fit_log_log(xs: &[f64], ys: &[f64], floor: f64) -> LineFit {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        if x > 0.0 && y.abs() > floor && y.is_finite() {
            lx.push(x.ln());
            ly.push(y.abs().ln());
        }
    }
    fit_line(&lx, &ly).unwrap_or(LineFit {
        slope: f64::NEG_INFINITY,
        intercept: f64::NEG_INFINITY,
        residual: 0.0,
    })
}

/// Least-squares plane `y ≈ c + b₁x₁ + b₂x₂`; returns `(c, b₁, b₂, rms)`.
pub fn fit_plane(x1: &[f64], x2: &[f64], y: &[f64]) -> Option<(f64, f64, f64, f64)> {
    let n = y.len();
    if n < 3 || x1.len() != n || x2.len() != n {
        return None;
    }
    let nf = n as f64;
    let m1 = pairwise_sum(x1) / nf;
    let m2 = pairwise_sum(x2) / nf;
    let my = pairwise_sum(y) / nf;
    let col = |f: &dyn Fn(usize) -> f64| pairwise_sum(&(0..n).map(f).collect::<Vec<f64>>());
    let s11 = col(&|i| (x1[i] - m1) * (x1[i] - m1));
    let s22 = col(&|i| (x2[i] - m2) * (x2[i] - m2));
    let s12 = col(&|i| (x1[i] - m1) * (x2[i] - m2));
    let s1y = col(&|i| (x1[i] - m1) * (y[i] - my));
    let s2y = col(&|i| (x2[i] - m2) * (y[i] - my));
    let det = s11 * s22 - s12 * s12;
    if !(det.abs() > 1e-12 * (s11 * s22).abs().max(f64::MIN_POSITIVE)) {
        return None;
    }
    let b1 = (s1y * s22 - s2y * s12) / det;
    let b2 = (s2y * s11 - s1y * s12) / det;
    let c = my - b1 * m1 - b2 * m2;
    let rms = (col(&|i| {
        let e = y[i] - c - b1 * x1[i] - b2 * x2[i];
        e * e
    }) / nf)
        .sqrt();
    Some((c, b1, b2, rms))
}
