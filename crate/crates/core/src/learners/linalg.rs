//! Dense row-major square matrices for the small `d×d` systems of ONS.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn scaled_identity(n: usize, s: T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = s;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: r.len(),
            });
        }
        Ok(Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| *a * *b).sum())
            .collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// `self += s·v·vᵀ`
    pub fn add_outer(&mut self, v: &[T], s: T) {
        let n = self.n;
        for (row, &vi) in self.data.chunks_mut(n).zip(v) {
            let vi = s * vi;
            for (a, &vj) in row.iter_mut().zip(v) {
                *a += vi * vj;
            }
        }
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    /// Lower Cholesky factor; fails when the matrix is not numerically
    /// positive definite.
    pub fn cholesky(&self) -> Result<Self> {
        let n = self.n;
        let mut l = Self::zeros(n);
        for j in 0..n {
            let mut diag = self[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > T::zero()) || !diag.is_finite() {
                return Err(Error::Numerical(format!(
                    "matrix not positive definite (pivot {j} = {diag})"
                )));
            }
            let d = diag.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(l)
    }

    /// Inverse of a symmetric positive definite matrix via Cholesky.
    pub fn spd_inverse(&self) -> Result<Self> {
        let n = self.n;
        let l = self.cholesky()?;
        let mut inv = Self::zeros(n);
        let mut col = vec![T::zero(); n];
        for c in 0..n {
            // solve L z = e_c then Lᵀ x = z
            for i in 0..n {
                let mut s = if i == c { T::one() } else { T::zero() };
                for k in 0..i {
                    s -= l[(i, k)] * col[k];
                }
                col[i] = s / l[(i, i)];
            }
            for i in (0..n).rev() {
                let mut s = col[i];
                for k in (i + 1)..n {
                    s -= l[(k, i)] * col[k];
                }
                col[i] = s / l[(i, i)];
            }
            for i in 0..n {
                inv[(i, c)] = col[i];
            }
        }
        // symmetrize rounding noise
        for i in 0..n {
            for j in 0..i {
                let m = (inv[(i, j)] + inv[(j, i)]) * T::half();
                inv[(i, j)] = m;
                inv[(j, i)] = m;
            }
        }
        Ok(inv)
    }

    /// Largest absolute deviation of `self·other` from the identity.
    pub fn identity_residual(&self, other: &Self) -> T {
        let p = self.mul(other);
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((p[(i, j)] - target).abs());
            }
        }
        worst
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_inverse_roundtrip() {
        let a = Matrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ])
        .unwrap();
        let inv = a.spd_inverse().unwrap();
        assert!(a.identity_residual(&inv) < 1e-14);
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(a.cholesky().is_err());
    }
}
