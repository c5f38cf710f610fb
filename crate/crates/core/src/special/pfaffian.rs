//! Skew-symmetric matrices and their Pfaffians.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A real antisymmetric matrix. `a[i][j] == -a[j][i]` holds bit-exactly and the
/// diagonal is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    mat: DMatrix<f64>,
}

impl SkewMatrix {
    /// Builds from the strict upper triangle `upper(i, j)`, `i < j`.
    pub fn from_upper(dim: usize, upper: impl Fn(usize, usize) -> f64) -> Self {
        let mut mat = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in (i + 1)..dim {
                let x = upper(i, j);
                mat[(i, j)] = x;
                mat[(j, i)] = -x;
            }
        }
        SkewMatrix { mat }
    }

    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        let n = mat.nrows();
        for i in 0..n {
            if mat[(i, i)] != 0.0 {
                return Err(Error::Invalid(format!("skew matrix has nonzero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                if mat[(i, j)] != -mat[(j, i)] {
                    return Err(Error::Invalid(format!("entries ({i},{j}) and ({j},{i}) are not negatives")));
                }
            }
        }
        Ok(SkewMatrix { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Principal submatrix with row and column `l` (0-based) removed.
    pub fn without(&self, l: usize) -> SkewMatrix {
        SkewMatrix {
            mat: self.mat.clone().remove_row(l).remove_column(l),
        }
    }

    pub fn determinant(&self) -> f64 {
        if self.dim() == 0 {
            return 1.0;
        }
        self.mat.clone().determinant()
    }

    /// Signed Pfaffian by skew-symmetric Gaussian elimination with partial
    /// pivoting (Parlett-Reid style `L T L^T` reduction). Odd dimension gives
    /// zero; the empty matrix gives one.
    pub fn pfaffian(&self) -> f64 {
        let n = self.dim();
        if n % 2 == 1 {
            return 0.0;
        }
        let mut a = self.mat.clone();
        let mut pf = 1.0;
        let mut k = 0;
        while k + 1 < n {
            let mut kp = k + 1;
            let mut best = a[(k + 1, k)].abs();
            for r in (k + 2)..n {
                if a[(r, k)].abs() > best {
                    best = a[(r, k)].abs();
                    kp = r;
                }
            }
            if kp != k + 1 {
                a.swap_rows(k + 1, kp);
                a.swap_columns(k + 1, kp);
                pf = -pf;
            }
            let pivot = a[(k, k + 1)];
            if pivot == 0.0 {
                return 0.0;
            }
            pf *= pivot;
            if k + 2 < n {
                let tau: Vec<f64> = ((k + 2)..n).map(|c| a[(k, c)] / pivot).collect();
                let col: Vec<f64> = ((k + 2)..n).map(|r| a[(r, k + 1)]).collect();
                for (ii, r) in ((k + 2)..n).enumerate() {
                    for (jj, c) in ((k + 2)..n).enumerate() {
                        a[(r, c)] += tau[ii] * col[jj] - col[ii] * tau[jj];
                    }
                }
            }
            k += 2;
        }
        pf
    }
}

/// `|pf(R)| = [det R]^{1/2}` for even-dimensional `R`.
pub fn pfaffian_abs(r: &SkewMatrix) -> Result<f64> {
    if r.dim() % 2 == 1 {
        return Err(Error::domain(
            "pfaffian_abs",
            format!("Pfaffian requires even dimension, got {}", r.dim()),
        ));
    }
    Ok(r.pfaffian().abs())
}
