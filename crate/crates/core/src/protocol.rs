//! Record types for the online protocol: decision boxes, per-round
//! records, traces and comparator sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{l1_norm, Scalar};

/// Symmetric per-coordinate box `{x : ‖x‖∞ ≤ half_width}` in `dim` dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionBox<T> {
    pub half_width: T,
    pub dim: usize,
}

impl<T: Scalar> DecisionBox<T> {
    pub fn new(half_width: T, dim: usize) -> Result<Self> {
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::invalid(format!(
                "box half-width must be positive and finite, got {half_width}"
            )));
        }
        if dim == 0 {
            return Err(Error::invalid("box dimension must be at least 1"));
        }
        Ok(Self { half_width, dim })
    }

    /// Comparator box `D⁻` of half-width `B`.
    pub fn comparator(bound: T, dim: usize) -> Result<Self> {
        Self::new(bound, dim)
    }

    /// Learner box `D` of half-width `B + G`.
    pub fn learner(bound: T, lipschitz: T, dim: usize) -> Result<Self> {
        Self::new(bound + lipschitz, dim)
    }

    pub fn center(&self) -> Vec<T> {
        vec![T::zero(); self.dim]
    }

    #[inline]
    pub fn clamp_scalar(&self, v: T) -> T {
        v.max(-self.half_width).min(self.half_width)
    }

    pub fn clamp_in_place(&self, x: &mut [T]) {
        for v in x.iter_mut() {
            *v = self.clamp_scalar(*v);
        }
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim && x.iter().all(|v| v.abs() <= self.half_width)
    }

    /// Euclidean diameter `2·half_width·√d`.
    pub fn diameter(&self) -> T {
        T::two() * self.half_width * T::from_count(self.dim).sqrt()
    }

    pub fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// One round of an online run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord<T> {
    /// 1-based round index.
    pub t: usize,
    pub x: Vec<T>,
    pub loss_value: T,
    pub grad_norm: T,
}

/// Ordered per-round records of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTrace<T> {
    pub rounds: Vec<RoundRecord<T>>,
}

impl<T: Scalar> ExperimentTrace<T> {
    pub fn new() -> Self {
        Self { rounds: Vec::new() }
    }

    pub fn push(&mut self, record: RoundRecord<T>) -> Result<()> {
        let expected = self.rounds.last().map_or(1, |r| r.t + 1);
        if record.t != expected {
            return Err(Error::invalid(format!(
                "round index {} out of order, expected {expected}",
                record.t
            )));
        }
        self.rounds.push(record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn predictions(&self) -> Vec<Vec<T>> {
        self.rounds.iter().map(|r| r.x.clone()).collect()
    }

    pub fn cumulative_loss(&self) -> T {
        self.rounds.iter().map(|r| r.loss_value).sum()
    }
}

/// Path length `Σ_{t≥2} ‖w_t − w_{t−1}‖₁`.
pub fn total_variation<T: Scalar>(seq: &[Vec<T>]) -> T {
    seq.windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| (*a - *b).abs()).sum::<T>())
        .sum()
}

/// A comparator sequence `w_1..w_n` together with its stored path length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparatorSequence<T> {
    pub w: Vec<Vec<T>>,
    pub total_variation: T,
}

impl<T: Scalar> ComparatorSequence<T> {
    pub fn new(w: Vec<Vec<T>>) -> Result<Self> {
        if let Some(first) = w.first() {
            let d = first.len();
            if let Some(bad) = w.iter().find(|row| row.len() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: bad.len(),
                });
            }
        }
        let total_variation = total_variation(&w);
        Ok(Self { w, total_variation })
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.w.first().map_or(0, Vec::len)
    }

    /// Membership in the bounded TV class: entrywise `|w| ≤ bound` and path length ≤ `budget`.
    pub fn in_tv_class(&self, budget: T, bound: T) -> bool {
        self.w.iter().all(|row| row.iter().all(|v| v.abs() <= bound))
            && total_variation(&self.w) <= budget
    }

    pub fn max_abs(&self) -> T {
        self.w
            .iter()
            .flat_map(|row| row.iter())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// `‖a − b‖₁` for equal-length slices.
pub(crate) fn l1_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    let diff: Vec<T> = a.iter().zip(b).map(|(x, y)| *x - *y).collect();
    l1_norm(&diff)
}
