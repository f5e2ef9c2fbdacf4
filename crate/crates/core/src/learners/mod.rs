//! Base online learners that FLH runs one copy of per start time.

mod ftl;
pub mod linalg;
mod ogd;
mod ons;
mod projection;

pub use ftl::Ftl;
pub use ogd::Ogd;
pub use ons::{default_epsilon, Ons, REINVERT_PERIOD};
pub use projection::{generalized_projection, projection_residual, PROJECTION_TOL};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{CurvatureParams, Loss};
use crate::protocol::DecisionBox;
use crate::scalar::Scalar;

/// Recipe for constructing fresh base learners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec<T> {
    Ftl {
        bx: DecisionBox<T>,
    },
    Ogd {
        strong_convexity: T,
        bx: DecisionBox<T>,
    },
    Ons {
        zeta: T,
        epsilon: T,
        bx: DecisionBox<T>,
    },
}

impl<T: Scalar> LearnerSpec<T> {
    /// FTL over `[−B, B]^d`, the box of the squared-loss protocol.
    pub fn ftl(bound: T, dim: usize) -> Result<Self> {
        Ok(LearnerSpec::Ftl {
            bx: DecisionBox::new(bound, dim)?,
        })
    }

    /// OGD with modulus `H` over the learner box `B + G`.
    pub fn ogd(curvature: &CurvatureParams<T>, dim: usize) -> Result<Self> {
        curvature.validate()?;
        if !(curvature.strong_convexity > T::zero()) {
            return Err(Error::invalid("OGD requires H > 0"));
        }
        Ok(LearnerSpec::Ogd {
            strong_convexity: curvature.strong_convexity,
            bx: DecisionBox::learner(curvature.bound, curvature.lipschitz, dim)?,
        })
    }

    /// ONS over the learner box with the default `ζ` and `ε`.
    pub fn ons(curvature: &CurvatureParams<T>, dim: usize) -> Result<Self> {
        curvature.validate()?;
        let zeta = curvature.ons_zeta(dim);
        let bx = DecisionBox::learner(curvature.bound, curvature.lipschitz, dim)?;
        Ok(LearnerSpec::Ons {
            zeta,
            epsilon: default_epsilon(zeta, &bx),
            bx,
        })
    }

    pub fn decision_box(&self) -> &DecisionBox<T> {
        match self {
            LearnerSpec::Ftl { bx } | LearnerSpec::Ogd { bx, .. } | LearnerSpec::Ons { bx, .. } => bx,
        }
    }

    pub fn dim(&self) -> usize {
        self.decision_box().dim
    }

    pub fn is_ftl(&self) -> bool {
        matches!(self, LearnerSpec::Ftl { .. })
    }

    pub fn spawn(&self) -> Result<Learner<T>> {
        Ok(match *self {
            LearnerSpec::Ftl { bx } => Learner::Ftl(Ftl::new(bx)),
            LearnerSpec::Ogd { strong_convexity, bx } => Learner::Ogd(Ogd::new(strong_convexity, bx)?),
            LearnerSpec::Ons { zeta, epsilon, bx } => Learner::Ons(Ons::new(zeta, epsilon, bx)?),
        })
    }
}

/// A live base learner.
#[derive(Debug, Clone)]
pub enum Learner<T> {
    Ftl(Ftl<T>),
    Ogd(Ogd<T>),
    Ons(Ons<T>),
}

impl<T: Scalar> Learner<T> {
    #[inline]
    pub fn prediction(&self) -> &[T] {
        match self {
            Learner::Ftl(l) => l.prediction(),
            Learner::Ogd(l) => l.prediction(),
            Learner::Ons(l) => l.prediction(),
        }
    }

    /// Feeds the revealed loss; gradient learners use the gradient at their
    /// own current prediction. `scratch` must have the learner's dimension.
    pub fn observe(&mut self, loss: &Loss<T>, scratch: &mut [T]) -> Result<()> {
        match self {
            Learner::Ftl(l) => match loss {
                Loss::Squared { label, .. } => l.absorb(label),
                Loss::Glm { .. } => Err(Error::invalid(
                    "FTL is defined only for squared losses",
                )),
            },
            Learner::Ogd(l) => {
                check_scratch(loss, scratch)?;
                loss.gradient_into(l.prediction(), scratch);
                l.step(scratch).map(|_| ())
            }
            Learner::Ons(l) => {
                check_scratch(loss, scratch)?;
                loss.gradient_into(l.prediction(), scratch);
                l.step(scratch).map(|_| ())
            }
        }
    }
}

fn check_scratch<T: Scalar>(loss: &Loss<T>, scratch: &[T]) -> Result<()> {
    if loss.dim() != scratch.len() {
        return Err(Error::DimensionMismatch {
            expected: scratch.len(),
            got: loss.dim(),
        });
    }
    Ok(())
}
