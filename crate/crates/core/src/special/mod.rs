//! Special functions and the integral objects behind the Wishart bounds.

pub mod gamma;
pub mod integrals;
pub mod kc;
pub mod pfaffian;
pub mod quad;

pub use gamma::{
    chi_squared_cdf, ln_factorial, ln_gamma, ln_incomplete_gamma, multivariate_gamma_ln, reg_gamma_lower,
    reg_gamma_upper,
};
pub use integrals::{
    f_double, f_single, in_chernoff_domain, k_integral_ln, ln_normalizing_constant, selberg_ln_i, v_upper,
};
pub use kc::{build_kc_table, eigen_band_probability, EigenBandProbability, KrishnaiahChangTable};
pub use pfaffian::{pfaffian_abs, SkewMatrix};
