//! Offline comparators: the best path-length-constrained sequence in
//! hindsight, with dual certificates.

mod brute;
mod fused_lasso;
mod general;
mod kkt;
mod squared;

pub use brute::{brute_force_oracle, squared_grid_gap_bound};
pub use fused_lasso::{fused_lasso_1d, fused_lasso_objective};
pub use general::oracle_general_loss;
pub use kkt::{kkt_extract, KktCertificate, KktReport};
pub use squared::tv_constrained_solve;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Oracle sequence with its certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution<T> {
    pub u: Vec<Vec<T>>,
    pub lambda: T,
    /// `n − 1` rows; row `t` is the subgradient between `u_t` and `u_{t+1}`.
    pub s: Vec<Vec<T>>,
    /// Entries of `s` recovered on flats rather than fixed by a jump sign.
    pub s_recovered: Vec<Vec<bool>>,
    pub gamma_minus: Vec<Vec<T>>,
    pub gamma_plus: Vec<Vec<T>>,
    /// `Σ_t f_t(u_t)`.
    pub objective: T,
    pub tv: T,
    pub budget: T,
    pub kkt: KktReport<T>,
}

impl<T: Scalar> OracleSolution<T> {
    pub(crate) fn assemble(
        u: Vec<Vec<T>>,
        lambda: T,
        objective: T,
        tv: T,
        budget: T,
        cert: KktCertificate<T>,
    ) -> Self {
        Self {
            u,
            lambda,
            s: cert.s,
            s_recovered: cert.s_recovered,
            gamma_minus: cert.gamma_minus,
            gamma_plus: cert.gamma_plus,
            objective,
            tv,
            budget,
            kkt: cert.report,
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.u.first().map_or(0, Vec::len)
    }
}

pub(crate) fn check_rectangular<T>(rows: &[Vec<T>]) -> Result<(usize, usize)> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::invalid("empty sequence"));
    }
    let d = rows[0].len();
    if d == 0 {
        return Err(Error::invalid("zero-dimensional rows"));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bad.len(),
        });
    }
    Ok((n, d))
}

pub(crate) fn columns<T: Copy>(rows: &[Vec<T>], d: usize) -> Vec<Vec<T>> {
    (0..d).map(|k| rows.iter().map(|r| r[k]).collect()).collect()
}

pub(crate) fn from_columns<T: Copy>(cols: &[Vec<T>], n: usize) -> Vec<Vec<T>> {
    (0..n).map(|t| cols.iter().map(|c| c[t]).collect()).collect()
}
