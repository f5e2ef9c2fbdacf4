use crate::error::{Error, Result};
use crate::protocol::DecisionBox;
use crate::scalar::Scalar;

/// Online gradient descent for `H`-strongly convex losses with step size
/// `1/(H·t)`, where `t` counts rounds since this learner was created.
#[derive(Debug, Clone, PartialEq)]
pub struct Ogd<T> {
    x: Vec<T>,
    strong_convexity: T,
    t: usize,
    bx: DecisionBox<T>,
}

impl<T: Scalar> Ogd<T> {
    pub fn new(strong_convexity: T, bx: DecisionBox<T>) -> Result<Self> {
        Self::starting_at(bx.center(), strong_convexity, bx)
    }

    pub fn starting_at(x: Vec<T>, strong_convexity: T, bx: DecisionBox<T>) -> Result<Self> {
        if !(strong_convexity > T::zero()) || !strong_convexity.is_finite() {
            return Err(Error::invalid("OGD requires a positive strong-convexity modulus H"));
        }
        bx.check_dim(&x)?;
        if !bx.contains(&x) {
            return Err(Error::invalid("OGD start point outside its box"));
        }
        Ok(Self {
            x,
            strong_convexity,
            t: 0,
            bx,
        })
    }

    #[inline]
    pub fn prediction(&self) -> &[T] {
        &self.x
    }

    pub fn rounds(&self) -> usize {
        self.t
    }

    /// `x ← clamp(x − grad/(H·t))`; returns the new prediction.
    pub fn step(&mut self, grad: &[T]) -> Result<&[T]> {
        self.bx.check_dim(grad)?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("OGD gradient".into()));
        }
        self.t += 1;
        let eta = T::one() / (self.strong_convexity * T::from_count(self.t));
        for (x, g) in self.x.iter_mut().zip(grad) {
            *x = self.bx.clamp_scalar(*x - eta * *g);
        }
        Ok(&self.x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx() -> DecisionBox<f64> {
        DecisionBox::new(1.0, 1).unwrap()
    }

    #[test]
    fn zero_gradient_is_stationary() {
        let mut o = Ogd::new(2.0, bx()).unwrap();
        assert_eq!(o.step(&[0.0]).unwrap(), &[0.0]);
    }

    #[test]
    fn first_step_reaches_boundary() {
        let h = 3.0;
        let mut o = Ogd::new(h, bx()).unwrap();
        assert_eq!(o.step(&[h]).unwrap(), &[-1.0]);
    }

    #[test]
    fn one_step_arithmetic() {
        let h = 2.0;
        let mut o = Ogd::starting_at(vec![0.5], h, bx()).unwrap();
        assert_eq!(o.step(&[h * 0.5]).unwrap(), &[0.0]);
        // second step uses 1/(2H)
        assert_eq!(o.step(&[-h]).unwrap(), &[0.5]);
    }

    #[test]
    fn zero_modulus_rejected() {
        assert!(Ogd::new(0.0, bx()).is_err());
    }

    #[test]
    fn stays_in_box() {
        let mut o = Ogd::new(0.1, bx()).unwrap();
        for i in 0..100 {
            let g = if i % 2 == 0 { 50.0 } else { -80.0 };
            let x = o.step(&[g]).unwrap()[0];
            assert!(x.abs() <= 1.0);
        }
    }
}
