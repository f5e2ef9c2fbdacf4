//! Follow-the-Leading-History: one base learner per start time, aggregated
//! by exponential weights with an addition step that injects each newcomer
//! at mass `1/(t+1)`. The pruned AFLH variant keeps a logarithmic working set.

mod aflh;
mod protocol;

pub use aflh::{aflh_alive, is_alive, lifetime};
pub use protocol::{run_protocol, BareLearner, CoordinateSplit, MetaKind, OnlineAlgorithm, ProtocolConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{Learner, LearnerSpec};
use crate::loss::{CurvatureParams, Loss};
use crate::scalar::Scalar;

/// Expert pool management.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Pruning {
    #[default]
    None,
    Aflh,
}

/// A base learner started at round `birth` together with its mass.
#[derive(Debug, Clone)]
pub struct Expert<T> {
    pub birth: usize,
    pub learner: Learner<T>,
    pub weight: T,
    log_weight: T,
}

impl<T: Scalar> Expert<T> {
    pub fn last_prediction(&self) -> &[T] {
        self.learner.prediction()
    }
}

/// Default meta learning rates: `1/(8B²)` for FTL on squared losses, `α`
/// for ONS, `H/(G†)²` for OGD.
pub fn default_meta_zeta<T: Scalar>(spec: &LearnerSpec<T>, curvature: &CurvatureParams<T>) -> T {
    match spec {
        LearnerSpec::Ftl { .. } => {
            let b = curvature.bound;
            T::one() / (T::lit(8.0) * b * b)
        }
        LearnerSpec::Ons { .. } => curvature.alpha,
        LearnerSpec::Ogd { .. } => {
            curvature.strong_convexity / (curvature.lipschitz_dagger * curvature.lipschitz_dagger)
        }
    }
}

/// FLH state for one stream.
#[derive(Debug, Clone)]
pub struct Flh<T> {
    experts: Vec<Expert<T>>,
    spec: LearnerSpec<T>,
    meta_zeta: T,
    round: usize,
    pruning: Pruning,
    losses: Vec<T>,
    scratch: Vec<T>,
    fault: bool,
}

impl<T: Scalar> Flh<T> {
    pub fn new(spec: LearnerSpec<T>, meta_zeta: T, pruning: Pruning) -> Result<Self> {
        if !(meta_zeta > T::zero()) || !meta_zeta.is_finite() {
            return Err(Error::invalid("FLH learning rate must be positive and finite"));
        }
        let first = Expert {
            birth: 1,
            learner: spec.spawn()?,
            weight: T::one(),
            log_weight: T::zero(),
        };
        Ok(Self {
            experts: vec![first],
            scratch: vec![T::zero(); spec.dim()],
            spec,
            meta_zeta,
            round: 1,
            pruning,
            losses: Vec::new(),
            fault: false,
        })
    }

    /// Round whose prediction is pending (1-based).
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn meta_zeta(&self) -> T {
        self.meta_zeta
    }

    pub fn pruning(&self) -> Pruning {
        self.pruning
    }

    pub fn spec(&self) -> &LearnerSpec<T> {
        &self.spec
    }

    pub fn experts(&self) -> &[Expert<T>] {
        &self.experts
    }

    pub fn weights(&self) -> Vec<T> {
        self.experts.iter().map(|e| e.weight).collect()
    }

    pub fn weight_sum(&self) -> T {
        self.experts.iter().map(|e| e.weight).sum()
    }

    /// Test hook: skews weights after every normalization so that simplex
    /// checks can be shown to fire.
    #[doc(hidden)]
    pub fn inject_normalization_fault(&mut self) {
        self.fault = true;
    }

    /// Weighted average of the experts' current predictions.
    pub fn flh_predict(&self) -> Result<Vec<T>> {
        if self.experts.is_empty() {
            return Err(Error::Numerical("FLH expert pool is empty".into()));
        }
        let bx = self.spec.decision_box();
        let mut x = vec![T::zero(); bx.dim];
        for e in &self.experts {
            for (acc, p) in x.iter_mut().zip(e.learner.prediction()) {
                *acc += e.weight * *p;
            }
        }
        // convex combination of box points; only rounding can leave the box
        bx.clamp_in_place(&mut x);
        Ok(x)
    }

    /// Multiplicative-weights step on the experts' own losses `f_t(x_t^{(i)})`,
    /// followed by the addition step (newcomer born at `t+1` with mass
    /// `1/(t+1)`) and, under AFLH, pruning with renormalization.
    pub fn flh_update(&mut self, losses_of_experts: &[T]) -> Result<()> {
        if losses_of_experts.len() != self.experts.len() {
            return Err(Error::DimensionMismatch {
                expected: self.experts.len(),
                got: losses_of_experts.len(),
            });
        }
        if let Some(bad) = losses_of_experts.iter().find(|l| !l.is_finite()) {
            return Err(Error::NonFinite(format!("expert loss {bad}")));
        }
        let zeta = self.meta_zeta;
        let mut top = T::neg_infinity();
        for (e, l) in self.experts.iter_mut().zip(losses_of_experts) {
            e.log_weight -= zeta * *l;
            top = top.max(e.log_weight);
        }
        let mut total = T::zero();
        for e in &mut self.experts {
            e.weight = (e.log_weight - top).exp();
            total += e.weight;
        }
        let next = self.round + 1;
        let keep = T::one() - T::one() / T::from_count(next);
        let shift = top + total.ln() - keep.ln();
        for e in &mut self.experts {
            e.weight = e.weight / total * keep;
            e.log_weight -= shift;
        }
        self.experts.push(Expert {
            birth: next,
            learner: self.spec.spawn()?,
            weight: T::one() / T::from_count(next),
            log_weight: -T::from_count(next).ln(),
        });
        self.round = next;
        if self.pruning == Pruning::Aflh {
            self.experts.retain(|e| is_alive(e.birth, next));
            self.renormalize();
        }
        if self.fault {
            for e in &mut self.experts {
                e.weight *= T::lit(1.01);
            }
        }
        Ok(())
    }

    fn renormalize(&mut self) {
        let top = self
            .experts
            .iter()
            .fold(T::neg_infinity(), |m, e| m.max(e.log_weight));
        let total: T = self.experts.iter().map(|e| (e.log_weight - top).exp()).sum();
        let lse = top + total.ln();
        for e in &mut self.experts {
            e.log_weight -= lse;
            e.weight = e.log_weight.exp();
        }
    }

    /// Reveals `f_t`: scores every expert at its own prediction, advances the
    /// base learners, then applies [`Flh::flh_update`].
    pub fn observe(&mut self, loss: &Loss<T>) -> Result<()> {
        if loss.dim() != self.spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.spec.dim(),
                got: loss.dim(),
            });
        }
        let mut losses = std::mem::take(&mut self.losses);
        losses.clear();
        losses.extend(self.experts.iter().map(|e| loss.value_unchecked(e.learner.prediction())));
        for e in &mut self.experts {
            e.learner.observe(loss, &mut self.scratch)?;
        }
        let out = self.flh_update(&losses);
        self.losses = losses;
        out
    }
}
