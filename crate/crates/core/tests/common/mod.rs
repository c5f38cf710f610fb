//! Test-side oracles that share no code with the library: Gauss-Legendre
//! quadrature, a dense determinant and small random helpers.
#![allow(dead_code)]

use rand::Rng;
use spdwalk::bounds::theta_interval;
use spdwalk::special::{v_upper, SkewMatrix};
use spdwalk::{wishart_sample, RngStream, SpdMatrix, WishartParams};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn legendre_rule(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

/// Composite 30-point Gauss-Legendre over the given panel edges.
pub fn gl_panels(f: impl Fn(f64) -> f64, edges: &[f64]) -> f64 {
    let rule = legendre_rule(30);
    edges
        .windows(2)
        .map(|w| {
            let (c, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            h * rule.iter().map(|&(x, wt)| wt * f(c + h * x)).sum::<f64>()
        })
        .sum()
}

pub fn linspace(a: f64, b: f64, panels: usize) -> Vec<f64> {
    (0..=panels).map(|k| a + (b - a) * k as f64 / panels as f64).collect()
}

pub fn gl(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    gl_panels(f, &linspace(a, b, panels))
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    d
}

pub fn params(m: usize, a: f64) -> WishartParams {
    WishartParams::new(m, a).unwrap()
}

/// Wishart draws with a random index at least one unit above the density
/// limit, rescaled by a random positive factor. Indices closer to the limit
/// produce near-singular draws whose small eigenvalues carry no relative
/// accuracy.
pub fn random_spd(m: usize, rng: &mut impl Rng) -> SpdMatrix {
    let a = 0.5 * (m as f64 - 1.0) + rng.random_range(1.0..5.0);
    let x = wishart_sample(params(m, a), rng);
    x.scale(rng.random_range(-2.0f64..2.0).exp()).unwrap()
}

pub fn stream(seed: u64) -> RngStream {
    RngStream::new(seed, 0)
}

pub fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}

/// Integrand `t^{a + j - (m+1)/2} e^{-t/2}` of the incomplete-gamma table.
pub fn weight(p: &WishartParams, j: usize) -> impl Fn(f64) -> f64 {
    let s = p.a() + j as f64 - 0.5 * (p.m() as f64 + 1.0);
    move |t: f64| t.powf(s) * (-0.5 * t).exp()
}

/// Brute-force 2-D quadrature over the triangle `u <= s <= t <= v`.
pub fn f_double_oracle(p: &WishartParams, i: usize, j: usize, u: f64, v: f64) -> f64 {
    let (inner, outer) = (weight(p, i), weight(p, j));
    gl(|t| outer(t) * gl(&inner, u, t, 8), u, v, 60)
}

/// `int_0^inf lambda^s exp(2v |log lambda| - theta lambda)`, split at 1; the
/// lower piece through `lambda = e^{-x}`.
pub fn k_oracle(p: &WishartParams, v: f64, theta: f64) -> f64 {
    let s = p.shifted_index() * theta;
    let lower_rate = s - 2.0 * v + 1.0;
    let lower = gl(|x| (-lower_rate * x - theta * (-x).exp()).exp(), 0.0, 60.0 / lower_rate, 400);
    let top = (60.0 + (s + 2.0 * v) * 10.0) / theta;
    let edges: Vec<f64> = linspace(0.0, top.ln(), 400).into_iter().map(f64::exp).collect();
    let upper = gl_panels(|l| l.powf(s + 2.0 * v) * (-theta * l).exp(), &edges);
    lower + upper
}

/// `int int (x - y)^2 (xy)^c e^{-(1-theta)(x+y)}` over the positive quadrant,
/// the `m = 2` Selberg-type integral, by tensor Gauss-Legendre.
pub fn selberg_oracle_m2(p: &WishartParams, theta: f64) -> f64 {
    let c = (2.0 * p.a() - 3.0) * (1.0 - theta);
    let rate = 1.0 - theta;
    let f = |x: f64, y: f64| (x - y).powi(2) * (x * y).powf(c) * (-rate * (x + y)).exp();
    let top = 120.0 / rate;
    gl(|x| gl(|y| f(x, y), 0.0, top, 60), 0.0, top, 60)
}

/// Random skew matrix with entries in `(-2, 2)` and its dense copy.
pub fn random_skew(dim: usize, rng: &mut impl Rng) -> (SkewMatrix, Vec<Vec<f64>>) {
    let mut upper = vec![vec![0.0; dim]; dim];
    for (i, row) in upper.iter_mut().enumerate() {
        for x in row.iter_mut().skip(i + 1) {
            *x = rng.random_range(-2.0..2.0);
        }
    }
    let r = SkewMatrix::from_upper(dim, |i, j| upper[i][j]);
    let full = (0..dim).map(|i| (0..dim).map(|j| r.get(i, j)).collect()).collect();
    (r, full)
}

/// Smallest eigenvalue of the central-difference Hessian of `f` at `(x, y)`.
pub fn hessian_min_eigenvalue(f: impl Fn(f64, f64) -> f64, x: f64, y: f64, h: f64) -> f64 {
    let fxx = (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h);
    let fyy = (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h);
    let fxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h);
    let (tr, det) = (fxx + fyy, fxx * fyy - fxy * fxy);
    0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt())
}

/// Minimum of `f` over `D` by a dense grid in `(x, y)`, with
/// `theta = lo + (hi-lo) x` and `v = y v_upper(theta)`, followed by repeated
/// zooming around the best cell.
pub fn grid_minimum(p: &WishartParams, f: impl Fn(f64, f64) -> f64) -> f64 {
    let (lo, hi) = theta_interval(p);
    let eps = 1e-9;
    let eval = |x: f64, y: f64| {
        let theta = lo + (hi - lo) * x.clamp(eps, 1.0 - eps);
        f(y.clamp(0.0, 1.0 - eps) * v_upper(p, theta), theta)
    };
    let (mut cx, mut cy, mut half) = (0.5, 0.5, 0.5);
    let mut best = f64::INFINITY;
    for _ in 0..40 {
        let k = 40;
        let (mut bx, mut by) = (cx, cy);
        for i in 0..=k {
            for j in 0..=k {
                let x = cx - half + 2.0 * half * i as f64 / k as f64;
                let y = cy - half + 2.0 * half * j as f64 / k as f64;
                let value = eval(x, y);
                if value < best {
                    best = value;
                    bx = x.clamp(0.0, 1.0);
                    by = y.clamp(0.0, 1.0);
                }
            }
        }
        cx = bx;
        cy = by;
        half *= 0.25;
    }
    best
}
