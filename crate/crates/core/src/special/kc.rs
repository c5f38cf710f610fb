//! Joint law of the extreme Wishart eigenvalues as a Pfaffian of incomplete
//! gamma integrals.
//!
//! For ordered eigenvalues of `W_m(a, I_m)`,
//! `P(u <= lambda_min < lambda_max <= v) = m! c_m rho_m(u, v)`, where `rho_m`
//! is the Pfaffian of the skew matrix `R` (even `m`) or its bordered expansion
//! (odd `m`).

use serde::Serialize;

use super::gamma::ln_factorial;
use super::integrals::{f_double, f_single, ln_normalizing_constant};
use super::pfaffian::{pfaffian_abs, SkewMatrix};
use crate::error::{Error, Result};
use crate::sampling::WishartParams;

#[derive(Debug, Clone)]
pub struct KrishnaiahChangTable {
    pub params: WishartParams,
    pub u: f64,
    pub v: f64,
    /// `F_{a+j}(u, v)`, `j = 0..m-1`.
    pub f_single: Vec<f64>,
    /// `F_{a+i,a+j}(u, v)`; the diagonal is left at zero since it cancels in `R`.
    pub f_double: Vec<Vec<f64>>,
    /// `r_ij = F_{a+i-1,a+j-1} - F_{a+j-1,a+i-1}` (1-based indices).
    pub r: SkewMatrix,
    /// `[det R]^{1/2}`; zero for odd `m`.
    pub h: f64,
    /// `[det R_l]^{1/2}` for `l = 1..m`, `R_l` with row and column `l` deleted.
    pub h_l: Vec<f64>,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenBandProbability {
    pub rho: f64,
    /// `m! c_m rho_m(u, v)`.
    pub probability: f64,
}

impl KrishnaiahChangTable {
    /// `m! c_m rho_m(u, v)`.
    pub fn probability(&self) -> Result<f64> {
        let ln_scale = ln_factorial(self.params.m()) + ln_normalizing_constant(&self.params)?;
        Ok(ln_scale.exp() * self.rho)
    }
}

/// Pfaffian magnitude of a principal block; odd dimensions vanish.
fn block_pfaffian(r: &SkewMatrix) -> Result<f64> {
    if r.dim() % 2 == 1 {
        Ok(0.0)
    } else {
        pfaffian_abs(r)
    }
}

pub fn build_kc_table(params: &WishartParams, u: f64, v: f64) -> Result<KrishnaiahChangTable> {
    if !(u > 0.0) || !(v >= u) {
        return Err(Error::domain("build_kc_table", format!("requires 0 < u <= v, got u = {u}, v = {v}")));
    }
    let m = params.m();
    let singles = (0..m)
        .map(|j| f_single(params, j, u, v))
        .collect::<Result<Vec<_>>>()?;
    let mut doubles = vec![vec![0.0; m]; m];
    for (i, row) in doubles.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j {
                *cell = f_double(params, i, j, u, v)?;
            }
        }
    }
    let r = SkewMatrix::from_upper(m, |i, j| doubles[i][j] - doubles[j][i]);
    let h = block_pfaffian(&r)?;
    let h_l = (0..m)
        .map(|l| block_pfaffian(&r.without(l)))
        .collect::<Result<Vec<_>>>()?;
    let rho = if m % 2 == 0 {
        h
    } else {
        singles
            .iter()
            .zip(&h_l)
            .enumerate()
            .map(|(j, (f, hl))| if j % 2 == 0 { f * hl } else { -f * hl })
            .sum()
    };
    Ok(KrishnaiahChangTable {
        params: *params,
        u,
        v,
        f_single: singles,
        f_double: doubles,
        r,
        h,
        h_l,
        rho,
    })
}

/// `P(u <= lambda_min < lambda_max <= v)` for one `W_m(a, I_m)` draw.
pub fn eigen_band_probability(params: &WishartParams, u: f64, v: f64) -> Result<EigenBandProbability> {
    let table = build_kc_table(params, u, v)?;
    Ok(EigenBandProbability {
        rho: table.rho,
        probability: table.probability()?,
    })
}
