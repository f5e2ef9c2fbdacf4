use crate::error::{Error, Result};
use crate::protocol::DecisionBox;
use crate::scalar::Scalar;

/// Follow-The-Leader for squared losses: the running mean of the labels
/// seen so far, clamped to the box. Predicts the box center before any label.
#[derive(Debug, Clone, PartialEq)]
pub struct Ftl<T> {
    count: usize,
    running_sum: Vec<T>,
    prediction: Vec<T>,
    bx: DecisionBox<T>,
}

impl<T: Scalar> Ftl<T> {
    pub fn new(bx: DecisionBox<T>) -> Self {
        Self {
            count: 0,
            running_sum: vec![T::zero(); bx.dim],
            prediction: bx.center(),
            bx,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn decision_box(&self) -> &DecisionBox<T> {
        &self.bx
    }

    /// Prediction for the current round.
    #[inline]
    pub fn prediction(&self) -> &[T] {
        &self.prediction
    }

    /// Adds a revealed label to the running sum.
    pub fn absorb(&mut self, label: &[T]) -> Result<()> {
        self.bx.check_dim(label)?;
        if label.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("FTL label".into()));
        }
        self.count += 1;
        let n = T::from_count(self.count);
        for ((s, p), y) in self.running_sum.iter_mut().zip(&mut self.prediction).zip(label) {
            *s += *y;
            *p = self.bx.clamp_scalar(*s / n);
        }
        Ok(())
    }

    /// Returns the prediction for this round, then absorbs `label`.
    pub fn step(&mut self, label: &[T]) -> Result<Vec<T>> {
        let out = self.prediction.clone();
        self.absorb(label)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn learner() -> Ftl<f64> {
        Ftl::new(DecisionBox::new(1.0, 1).unwrap())
    }

    #[test]
    fn first_prediction_is_box_center() {
        assert_eq!(learner().prediction(), &[0.0]);
    }

    #[test]
    fn predicts_running_mean() {
        let mut f = learner();
        for _ in 0..3 {
            f.step(&[1.0]).unwrap();
        }
        assert_eq!(f.prediction(), &[1.0]);
        let mut f = learner();
        assert_eq!(f.step(&[0.0]).unwrap(), vec![0.0]);
        assert_eq!(f.step(&[1.0]).unwrap(), vec![0.0]);
        assert_eq!(f.prediction(), &[0.5]);
    }

    #[test]
    fn prediction_minimizes_past_squared_loss() {
        let labels = [0.3, -0.7, 0.9, 0.1, -0.2];
        let mut f = learner();
        for (i, y) in labels.iter().enumerate() {
            f.absorb(&[*y]).unwrap();
            let past = &labels[..=i];
            let cost = |x: f64| past.iter().map(|y| (y - x).powi(2)).sum::<f64>();
            let p = f.prediction()[0];
            for k in -100..=100 {
                assert!(cost(p) <= cost(k as f64 / 100.0) + 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(learner().absorb(&[0.0, 1.0]).is_err());
    }
}
