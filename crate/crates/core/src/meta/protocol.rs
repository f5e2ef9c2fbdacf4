use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{Learner, LearnerSpec};
use crate::loss::Loss;
use crate::protocol::{ExperimentTrace, RoundRecord};
use crate::scalar::{l2_norm, Scalar};

use super::{Flh, Pruning};

/// Aggregation layer above the base learners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaKind {
    /// A single base learner started at round 1.
    None,
    Flh,
    Aflh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig<T> {
    pub learner: LearnerSpec<T>,
    pub meta: MetaKind,
    /// Exponential-weights rate of the meta layer (ignored for `MetaKind::None`).
    pub meta_zeta: T,
}

/// Anything that can play the online protocol.
pub trait OnlineAlgorithm<T: Scalar>: Send {
    fn dim(&self) -> usize;
    fn predict(&mut self) -> Result<Vec<T>>;
    fn observe(&mut self, loss: &Loss<T>) -> Result<()>;
}

impl<T: Scalar> OnlineAlgorithm<T> for Flh<T> {
    fn dim(&self) -> usize {
        self.spec().dim()
    }

    fn predict(&mut self) -> Result<Vec<T>> {
        self.flh_predict()
    }

    fn observe(&mut self, loss: &Loss<T>) -> Result<()> {
        Flh::observe(self, loss)
    }
}

/// A single base learner without aggregation.
#[derive(Debug, Clone)]
pub struct BareLearner<T> {
    learner: Learner<T>,
    scratch: Vec<T>,
}

impl<T: Scalar> BareLearner<T> {
    pub fn new(spec: &LearnerSpec<T>) -> Result<Self> {
        Ok(Self {
            learner: spec.spawn()?,
            scratch: vec![T::zero(); spec.dim()],
        })
    }

    pub fn learner(&self) -> &Learner<T> {
        &self.learner
    }
}

impl<T: Scalar> OnlineAlgorithm<T> for BareLearner<T> {
    fn dim(&self) -> usize {
        self.scratch.len()
    }

    fn predict(&mut self) -> Result<Vec<T>> {
        Ok(self.learner.prediction().to_vec())
    }

    fn observe(&mut self, loss: &Loss<T>) -> Result<()> {
        self.learner.observe(loss, &mut self.scratch)
    }
}

/// `d` independent one-dimensional FLH-FTL instances, instance `k` predicting
/// coordinate `k` of a squared-loss stream.
#[derive(Debug, Clone)]
pub struct CoordinateSplit<T> {
    instances: Vec<Flh<T>>,
}

impl<T: Scalar> CoordinateSplit<T> {
    pub fn new(bound: T, dim: usize, meta_zeta: T, pruning: Pruning) -> Result<Self> {
        let spec = LearnerSpec::ftl(bound, 1)?;
        let instances = (0..dim)
            .map(|_| Flh::new(spec, meta_zeta, pruning))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { instances })
    }

    pub fn instances(&self) -> &[Flh<T>] {
        &self.instances
    }
}

impl<T: Scalar> OnlineAlgorithm<T> for CoordinateSplit<T> {
    fn dim(&self) -> usize {
        self.instances.len()
    }

    fn predict(&mut self) -> Result<Vec<T>> {
        self.instances
            .iter()
            .map(|f| f.flh_predict().map(|x| x[0]))
            .collect()
    }

    fn observe(&mut self, loss: &Loss<T>) -> Result<()> {
        let Loss::Squared { label, bound } = loss else {
            return Err(Error::invalid(
                "coordinate-split FLH-FTL requires squared losses",
            ));
        };
        if label.len() != self.instances.len() {
            return Err(Error::DimensionMismatch {
                expected: self.instances.len(),
                got: label.len(),
            });
        }
        for (f, y) in self.instances.iter_mut().zip(label) {
            f.observe(&Loss::Squared {
                label: vec![*y],
                bound: *bound,
            })?;
        }
        Ok(())
    }
}

impl<T: Scalar> ProtocolConfig<T> {
    /// Builds the algorithm this configuration describes. FTL in more than
    /// one dimension under a meta layer runs one scalar FLH per coordinate.
    pub fn build(&self) -> Result<Box<dyn OnlineAlgorithm<T>>> {
        let pruning = match self.meta {
            MetaKind::None => return Ok(Box::new(BareLearner::new(&self.learner)?)),
            MetaKind::Flh => Pruning::None,
            MetaKind::Aflh => Pruning::Aflh,
        };
        match self.learner {
            LearnerSpec::Ftl { bx } if bx.dim > 1 => Ok(Box::new(CoordinateSplit::new(
                bx.half_width,
                bx.dim,
                self.meta_zeta,
                pruning,
            )?)),
            spec => Ok(Box::new(Flh::new(spec, self.meta_zeta, pruning)?)),
        }
    }
}

/// Plays the full online protocol over `losses`: predict, reveal `f_t`,
/// record `f_t(x_t)`, update. Deterministic in its inputs.
pub fn run_protocol<'a, T, I>(losses: I, config: &ProtocolConfig<T>) -> Result<ExperimentTrace<T>>
where
    T: Scalar,
    I: IntoIterator<Item = &'a Loss<T>>,
{
    let mut algo = config.build()?;
    run_algorithm(algo.as_mut(), losses)
}

pub(crate) fn run_algorithm<'a, T, I>(
    algo: &mut dyn OnlineAlgorithm<T>,
    losses: I,
) -> Result<ExperimentTrace<T>>
where
    T: Scalar,
    I: IntoIterator<Item = &'a Loss<T>>,
{
    let mut trace = ExperimentTrace::new();
    for (i, loss) in losses.into_iter().enumerate() {
        let x = algo.predict()?;
        let loss_value = loss.value(&x)?;
        let grad_norm = l2_norm(&loss.gradient(&x)?);
        algo.observe(loss)?;
        trace.rounds.push(RoundRecord {
            t: i + 1,
            x,
            loss_value,
            grad_norm,
        });
    }
    Ok(trace)
}
