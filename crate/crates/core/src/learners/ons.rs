use crate::error::{Error, Result};
use crate::protocol::DecisionBox;
use crate::scalar::Scalar;

use super::linalg::Matrix;
use super::projection::generalized_projection;

/// Full re-inversion period of the maintained `A⁻¹`.
pub const REINVERT_PERIOD: usize = 512;

/// Online Newton Step.
///
/// `A ← A + ggᵀ`, `x ← Π^A_D(x − A⁻¹g/ζ)`, with `A₀ = εI`. The inverse is
/// kept current by Sherman–Morrison and rebuilt from `A` every
/// [`REINVERT_PERIOD`] steps or whenever the rank-one update looks unsafe.
#[derive(Debug, Clone)]
pub struct Ons<T> {
    x: Vec<T>,
    a: Matrix<T>,
    a_inv: Matrix<T>,
    zeta: T,
    bx: DecisionBox<T>,
    since_refresh: usize,
}

/// `ε = 1/(ζ²·diam(D)²)`.
pub fn default_epsilon<T: Scalar>(zeta: T, bx: &DecisionBox<T>) -> T {
    let diam = bx.diameter();
    T::one() / (zeta * zeta * diam * diam)
}

impl<T: Scalar> Ons<T> {
    pub fn new(zeta: T, epsilon: T, bx: DecisionBox<T>) -> Result<Self> {
        if !(zeta > T::zero()) || !zeta.is_finite() {
            return Err(Error::invalid("ONS parameter ζ must be positive"));
        }
        if !(epsilon > T::zero()) || !epsilon.is_finite() {
            return Err(Error::invalid("ONS regularizer ε must be positive"));
        }
        let d = bx.dim;
        Ok(Self {
            x: bx.center(),
            a: Matrix::scaled_identity(d, epsilon),
            a_inv: Matrix::scaled_identity(d, T::one() / epsilon),
            zeta,
            bx,
            since_refresh: 0,
        })
    }

    /// Starts from an explicit point and matrix `A` (must be SPD).
    pub fn with_state(x: Vec<T>, a: Matrix<T>, zeta: T, bx: DecisionBox<T>) -> Result<Self> {
        bx.check_dim(&x)?;
        if !bx.contains(&x) {
            return Err(Error::invalid("ONS start point outside its box"));
        }
        let a_inv = a.spd_inverse()?;
        Ok(Self {
            x,
            a,
            a_inv,
            zeta,
            bx,
            since_refresh: 0,
        })
    }

    #[inline]
    pub fn prediction(&self) -> &[T] {
        &self.x
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn inverse(&self) -> &Matrix<T> {
        &self.a_inv
    }

    pub fn zeta(&self) -> T {
        self.zeta
    }

    fn refresh_inverse(&mut self) -> Result<()> {
        self.a_inv = self.a.spd_inverse().map_err(|e| {
            Error::Numerical(format!("ONS matrix ill-conditioned after rank-one update: {e}"))
        })?;
        self.since_refresh = 0;
        Ok(())
    }

    /// One ONS update with gradient `grad` at the current prediction;
    /// returns the next prediction.
    pub fn step(&mut self, grad: &[T]) -> Result<&[T]> {
        self.bx.check_dim(grad)?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("ONS gradient".into()));
        }
        if grad.iter().all(|g| *g == T::zero()) {
            return Ok(&self.x);
        }
        self.a.add_outer(grad, T::one());
        self.since_refresh += 1;
        let ag = self.a_inv.mul_vec(grad);
        let denom = T::one() + ag.iter().zip(grad).map(|(p, q)| *p * *q).sum::<T>();
        if self.since_refresh >= REINVERT_PERIOD || !(denom > T::zero()) || !denom.is_finite() {
            self.refresh_inverse()?;
        } else {
            self.a_inv.add_outer(&ag, -T::one() / denom);
        }
        let dir = self.a_inv.mul_vec(grad);
        let z: Vec<T> = self
            .x
            .iter()
            .zip(&dir)
            .map(|(x, s)| *x - *s / self.zeta)
            .collect();
        self.x = generalized_projection(&self.a, &z, &self.bx)?;
        Ok(&self.x)
    }
}
