//! Cholesky factorization of symmetric banded matrices.
//!
//! Work is `O(n p²)` for half-bandwidth `p`; the block Lanczos projection has
//! `p = m`, so each shifted solve costs `O(m³ t)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Lower Cholesky factor of `M + shift·I` restricted to the band.
#[derive(Debug, Clone)]
pub struct BandedCholesky<T: Scalar> {
    n: usize,
    p: usize,
    // row i holds L[i, i-p ..= i], left-padded for the first rows
    rows: Vec<T>,
}

impl<T: Scalar> BandedCholesky<T> {
    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.rows[i * (self.p + 1) + (j + self.p - i)]
    }

    /// Factors `m + shift·I`, reading only entries with `|i − j| ≤ p` of the lower triangle.
    pub fn factor(m: &DMatrix<T>, p: usize, shift: T) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected_rows: n,
                expected_cols: n,
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let w = p + 1;
        let mut f = Self {
            n,
            p,
            rows: vec![T::zero(); n * w],
        };
        for i in 0..n {
            let lo = i.saturating_sub(p);
            for j in lo..=i {
                let mut s = m[(i, j)];
                if i == j {
                    s += shift;
                }
                let klo = lo.max(j.saturating_sub(p));
                for k in klo..j {
                    s -= f.at(i, k) * f.at(j, k);
                }
                let idx = i * w + (j + p - i);
                if i == j {
                    if !(s > T::zero()) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite(format!(
                            "banded Cholesky pivot {i} is {:e}",
                            s.as_f64()
                        )));
                    }
                    f.rows[idx] = s.sqrt();
                } else {
                    f.rows[idx] = s / f.at(j, j);
                }
            }
        }
        Ok(f)
    }

    /// Solves `(M + shift·I) X = rhs` column by column.
    pub fn solve(&self, rhs: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(rhs.nrows(), self.n, "right-hand side has wrong row count");
        let mut x = rhs.clone();
        for mut col in x.column_iter_mut() {
            for i in 0..self.n {
                let mut s = col[i];
                for k in i.saturating_sub(self.p)..i {
                    s -= self.at(i, k) * col[k];
                }
                col[i] = s / self.at(i, i);
            }
            for i in (0..self.n).rev() {
                let mut s = col[i];
                for k in (i + 1)..(i + self.p + 1).min(self.n) {
                    s -= self.at(k, i) * col[k];
                }
                col[i] = s / self.at(i, i);
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn banded_spd(n: usize, p: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| {
            let g = i.abs_diff(j);
            if g == 0 {
                4.0 + i as f64 * 0.1
            } else if g <= p {
                1.0 / (1.0 + g as f64 + (i + j) as f64 * 0.01)
            } else {
                0.0
            }
        })
    }

    #[test]
    fn matches_dense_solve() {
        let a = banded_spd(17, 3);
        let rhs = DMatrix::from_fn(17, 2, |i, j| (i * 3 + j) as f64 - 5.0);
        for shift in [0.0, 0.7] {
            let chol = BandedCholesky::factor(&a, 3, shift).unwrap();
            let x = chol.solve(&rhs);
            let shifted = &a + DMatrix::identity(17, 17) * shift;
            let err = (&shifted * &x - &rhs).amax();
            assert!(err < 1e-12, "residual {err}");
        }
    }

    #[test]
    fn rejects_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(BandedCholesky::factor(&a, 1, 0.0).is_err());
        assert!(BandedCholesky::factor(&a, 1, 2.0).is_ok());
    }
}
