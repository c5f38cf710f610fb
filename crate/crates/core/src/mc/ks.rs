use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

const MIN_KS_SAMPLE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub n1: usize,
    pub n2: usize,
    pub p_value: f64,
}

/// `Q(lambda) = P(K > lambda)` for the Kolmogorov distribution.
///
/// The alternating series `2 sum (-1)^{k-1} exp(-2 k^2 lambda^2)` (100 terms)
/// is used for `lambda >= 1.18`; below that it converges slowly and the
/// equivalent theta-function form is summed instead.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let l2 = lambda * lambda;
    let q = if lambda < 1.18 {
        let c = -PI * PI / (8.0 * l2);
        let s: f64 = (1..=100)
            .map(|k| {
                let odd = (2 * k - 1) as f64;
                (c * odd * odd).exp()
            })
            .sum();
        1.0 - (2.0 * PI).sqrt() / lambda * s
    } else {
        2.0 * (1..=100)
            .map(|k| {
                let kf = k as f64;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * kf * kf * l2).exp()
            })
            .sum::<f64>()
    };
    q.clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov statistic with the asymptotic p-value
/// (effective-size correction `sqrt(ne) + 0.12 + 0.11/sqrt(ne)`).
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult> {
    if x.len() < MIN_KS_SAMPLE || y.len() < MIN_KS_SAMPLE {
        return Err(Error::Invalid(format!(
            "two-sample KS needs at least {MIN_KS_SAMPLE} points per sample, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::Invalid("KS samples contain NaN".into()));
    }
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n1, n2) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n1 && j < n2 {
        let v = xs[i].min(ys[j]);
        while i < n1 && xs[i] <= v {
            i += 1;
        }
        while j < n2 && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    // once one sample is exhausted its ECDF is 1 and the gap only shrinks
    let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
    let en = ne.sqrt();
    Ok(KsResult {
        statistic: d,
        n1,
        n2,
        p_value: kolmogorov_survival((en + 0.12 + 0.11 / en) * d),
    })
}
