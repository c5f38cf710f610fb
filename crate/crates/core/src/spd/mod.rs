//! Positive definite cone primitives.
//!
//! [`SpdMatrix`] validates symmetry and positive definiteness on construction
//! and caches its symmetric eigendecomposition, so square roots and distances
//! to the identity reuse a single decomposition.

mod io;

pub use io::{matrix_from_csv, matrix_from_json, matrix_to_csv, matrix_to_json};

use std::fmt;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative symmetry tolerance accepted on construction.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalues in `(-CLAMP_REL_TOL * |A|, 0]` are lifted to `CLAMP_REL_TOL * |A|`.
pub const CLAMP_REL_TOL: f64 = 1e-10;
/// Orthogonality tolerance for [`OrthogonalMatrix`].
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// Ascending eigenvalues of a symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn product(&self) -> f64 {
        self.values.iter().product()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone)]
struct Eigen {
    /// Ascending.
    values: DVector<f64>,
    /// Columns match `values`.
    vectors: DMatrix<f64>,
}

impl Eigen {
    fn recompose(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let scaled = DVector::from_iterator(self.values.len(), self.values.iter().map(|&x| f(x)));
        let mut left = self.vectors.clone();
        for (j, mut col) in left.column_iter_mut().enumerate() {
            col *= scaled[j];
        }
        symmetrize(&(left * self.vectors.transpose()))
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn decompose(mat: &DMatrix<f64>) -> Result<Eigen> {
    let dim = mat.nrows();
    let eig = SymmetricEigen::try_new(mat.clone(), EIGEN_EPS, EIGEN_MAX_ITER).ok_or_else(|| {
        Error::EigenFailure {
            dim,
            norm: mat.norm(),
            max_abs: mat.amax(),
        }
    })?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(dim, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

/// Eigenvalues (ascending) of a symmetric matrix that need not be definite.
pub(crate) fn symmetric_eigenvalues(mat: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = mat.nrows();
    let eig = SymmetricEigen::try_new(symmetrize(mat), EIGEN_EPS, EIGEN_MAX_ITER).ok_or_else(|| {
        Error::EigenFailure {
            dim,
            norm: mat.norm(),
            max_abs: mat.amax(),
        }
    })?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// A dense symmetric positive definite matrix.
pub struct SpdMatrix {
    mat: DMatrix<f64>,
    eig: OnceLock<Eigen>,
}

impl Clone for SpdMatrix {
    fn clone(&self) -> Self {
        let eig = OnceLock::new();
        if let Some(e) = self.eig.get() {
            let _ = eig.set(e.clone());
        }
        SpdMatrix {
            mat: self.mat.clone(),
            eig,
        }
    }
}

impl fmt::Debug for SpdMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpdMatrix").field("mat", &self.mat).finish()
    }
}

impl PartialEq for SpdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.mat == other.mat
    }
}

impl SpdMatrix {
    /// Validates symmetry and positive definiteness.
    ///
    /// Eigenvalues in `(-tol, 0]` with `tol = 1e-10 * |A|` (spectral norm) are
    /// lifted to `tol`; anything more negative is rejected.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        let dim = mat.nrows();
        if dim == 0 {
            return Err(Error::Invalid("empty matrix".into()));
        }
        if mat.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("matrix has non-finite entries".into()));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let diff = (mat[(i, j)] - mat[(j, i)]).abs();
                if diff > SYMMETRY_TOL * mat[(i, j)].abs().max(1.0) {
                    return Err(Error::NotSymmetric { i, j, diff });
                }
            }
        }
        Self::from_symmetric(symmetrize(&mat))
    }

    /// Skips the symmetry check; `mat` must already be exactly symmetric.
    fn from_symmetric(mat: DMatrix<f64>) -> Result<Self> {
        let eig = decompose(&mat)?;
        let norm = eig.values.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        let tol = CLAMP_REL_TOL * norm;
        let min = eig.values[0];
        if min > 0.0 && min >= tol {
            return Ok(Self::with_eigen(mat, eig));
        }
        if min <= -tol || norm == 0.0 {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min,
                tolerance: tol,
            });
        }
        if min > 0.0 {
            // tiny but positive: keep as is
            return Ok(Self::with_eigen(mat, eig));
        }
        let values = eig.values.map(|x| if x <= 0.0 { tol } else { x });
        let lifted = Eigen {
            values,
            vectors: eig.vectors,
        };
        let mat = lifted.recompose(|x| x);
        Ok(Self::with_eigen(mat, lifted))
    }

    fn with_eigen(mat: DMatrix<f64>, eig: Eigen) -> Self {
        let cell = OnceLock::new();
        let _ = cell.set(eig);
        SpdMatrix { mat, eig: cell }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim]).expect("identity is positive definite")
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.mat.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    fn eigen(&self) -> &Eigen {
        self.eig
            .get_or_init(|| decompose(&self.mat).expect("validated matrix decomposes"))
    }

    /// Ascending eigenvalues.
    pub fn spectrum(&self) -> Spectrum {
        Spectrum {
            values: self.eigen().values.iter().copied().collect(),
        }
    }

    pub fn determinant(&self) -> f64 {
        self.eigen().values.iter().product()
    }

    pub fn log_determinant(&self) -> f64 {
        self.eigen().values.iter().map(|x| x.ln()).sum()
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace()
    }

    /// Principal square root, sharing the eigenvectors of `self`.
    pub fn sqrt(&self) -> SpdMatrix {
        self.spectral_map(f64::sqrt)
    }

    pub fn inv_sqrt(&self) -> SpdMatrix {
        self.spectral_map(|x| 1.0 / x.sqrt())
    }

    pub fn inverse(&self) -> SpdMatrix {
        self.spectral_map(|x| 1.0 / x)
    }

    fn spectral_map(&self, f: impl Fn(f64) -> f64) -> SpdMatrix {
        let eig = self.eigen();
        let mapped = Eigen {
            values: eig.values.map(&f),
            vectors: eig.vectors.clone(),
        };
        let mat = mapped.recompose(|x| x);
        // map is monotone for sqrt and reverses order for the reciprocal maps
        let mut order: Vec<usize> = (0..mapped.values.len()).collect();
        order.sort_by(|&i, &j| mapped.values[i].total_cmp(&mapped.values[j]));
        let values = DVector::from_iterator(order.len(), order.iter().map(|&i| mapped.values[i]));
        let vectors = DMatrix::from_fn(order.len(), order.len(), |r, c| mapped.vectors[(r, order[c])]);
        SpdMatrix::with_eigen(mat, Eigen { values, vectors })
    }

    /// Euclidean norm of the log-spectrum, i.e. the Riemannian distance to `I`.
    pub fn distance_from_identity(&self) -> f64 {
        self.eigen()
            .values
            .iter()
            .map(|x| x.ln().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, c: f64) -> Result<SpdMatrix> {
        SpdMatrix::new(&self.mat * c)
    }
}

/// An orthogonal matrix with `|QtQ - I|_max <= 1e-10`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix {
    mat: DMatrix<f64>,
}

impl OrthogonalMatrix {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        let deviation = orthogonality_defect(&mat);
        if deviation > ORTHOGONALITY_TOL {
            return Err(Error::NotOrthogonal { deviation });
        }
        Ok(OrthogonalMatrix { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// `max |QtQ - I|`.
    pub fn defect(&self) -> f64 {
        orthogonality_defect(&self.mat)
    }

    /// `k A k^T`.
    pub fn conjugate(&self, a: &SpdMatrix) -> Result<SpdMatrix> {
        check_dims(self.dim(), a.dim())?;
        SpdMatrix::from_symmetric(symmetrize(&(&self.mat * a.as_matrix() * self.mat.transpose())))
    }
}

fn orthogonality_defect(mat: &DMatrix<f64>) -> f64 {
    let n = mat.nrows();
    (mat.transpose() * mat - DMatrix::<f64>::identity(n, n)).amax()
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a,
            found: b,
        });
    }
    Ok(())
}

/// Eigenvalues of the symmetrized `A^{-1/2} B A^{-1/2}`.
fn relative_spectrum(a: &SpdMatrix, b: &SpdMatrix) -> Result<Vec<f64>> {
    check_dims(a.dim(), b.dim())?;
    let w = a.inv_sqrt();
    let c = w.as_matrix() * b.as_matrix() * w.as_matrix();
    let mut values = symmetric_eigenvalues(&c)?;
    let norm = values.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let floor = (CLAMP_REL_TOL * norm).max(f64::MIN_POSITIVE);
    for x in values.iter_mut() {
        if *x < floor {
            *x = floor;
        }
    }
    Ok(values)
}

/// Eigenvalues of `A`, ascending.
pub fn sym_eigenvalues(a: &SpdMatrix) -> Spectrum {
    a.spectrum()
}

pub fn matrix_sqrt(a: &SpdMatrix) -> SpdMatrix {
    a.sqrt()
}

/// Affine-invariant Riemannian distance `(sum_j log^2 lambda_j(A^{-1/2} B A^{-1/2}))^{1/2}`.
pub fn riemannian_distance(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    Ok(relative_spectrum(a, b)?
        .iter()
        .map(|x| x.ln().powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Thompson part metric `log max(lambda_max(A^{-1}B), 1 / lambda_min(A^{-1}B))`.
pub fn thompson_distance(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    let values = relative_spectrum(a, b)?;
    let lo = values[0];
    let hi = values[values.len() - 1];
    Ok(hi.ln().max(-lo.ln()).max(0.0))
}

/// `A^{1/2} B A^{1/2}`. Not associative and not commutative.
pub fn compose(a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
    check_dims(a.dim(), b.dim())?;
    let root = a.sqrt();
    let c = root.as_matrix() * b.as_matrix() * root.as_matrix();
    SpdMatrix::from_symmetric(symmetrize(&c))
}
