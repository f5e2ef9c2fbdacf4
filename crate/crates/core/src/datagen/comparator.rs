use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{total_variation, ComparatorSequence};
use crate::scalar::Scalar;

const RESCALE_ROUNDS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    /// `jumps` steps of ℓ₁ size `C/jumps` at distinct random rounds.
    PiecewiseConstant { jumps: usize },
    /// One excursion of height `C/2` and back.
    SingleSpike,
    /// `A·sin(2π·frequency·t/n + φ)` per coordinate, amplitude fitted to the budget.
    Sinusoid { frequency: f64 },
    /// Gaussian random walk, alternately rescaled to the budget and clamped.
    RandomWalkProjected,
}

/// Recipe for a comparator in the bounded TV class: `‖w_t‖∞ ≤ bound` and
/// path length at most `budget`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceProfile<T> {
    pub kind: ProfileKind,
    pub n: usize,
    pub d: usize,
    pub budget: T,
    pub bound: T,
    pub seed: u64,
}

/// Generates the comparator described by `profile` using ChaCha8 seeded from
/// `profile.seed`. Non-constant outputs have path length in `[0.9C, C]`.
pub fn gen_comparator<T: Scalar>(profile: &SequenceProfile<T>) -> Result<ComparatorSequence<T>> {
    let SequenceProfile { kind, n, d, budget, bound, seed } = *profile;
    if n == 0 || d == 0 {
        return Err(Error::invalid("comparator needs n ≥ 1 and d ≥ 1"));
    }
    if !(budget >= T::zero()) || !budget.is_finite() {
        return Err(Error::invalid(format!("budget must be ≥ 0, got {budget}")));
    }
    if !(bound > T::zero()) || !bound.is_finite() {
        return Err(Error::invalid(format!("bound must be positive, got {bound}")));
    }
    if budget == T::zero() || n == 1 {
        return ComparatorSequence::new(vec![vec![T::zero(); d]; n]);
    }
    let c = budget.as_f64();
    let b = bound.as_f64();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = match kind {
        ProfileKind::PiecewiseConstant { jumps } => piecewise_constant(&mut rng, n, d, c, b, jumps)?,
        ProfileKind::SingleSpike => single_spike(&mut rng, n, d, c, b)?,
        ProfileKind::Sinusoid { frequency } => sinusoid(&mut rng, n, d, c, b, frequency)?,
        ProfileKind::RandomWalkProjected => random_walk(&mut rng, n, d, c, b)?,
    };
    let w: Vec<Vec<T>> = w
        .into_iter()
        .map(|row| row.into_iter().map(T::lit).collect())
        .collect();
    let w = shrink_into_budget(w, budget);
    let seq = ComparatorSequence::new(w)?;
    if !seq.in_tv_class(budget, bound) {
        return Err(Error::Numerical("generated comparator left the TV class".into()));
    }
    if seq.total_variation < T::lit(0.9) * budget {
        return Err(Error::Infeasible(format!(
            "profile {kind:?} reached path length {} of budget {budget}",
            seq.total_variation
        )));
    }
    Ok(seq)
}

/// Guards against rounding pushing the path length just above the budget.
fn shrink_into_budget<T: Scalar>(mut w: Vec<Vec<T>>, budget: T) -> Vec<Vec<T>> {
    let mut tv = total_variation(&w);
    while tv > budget {
        let f = (budget / tv) * (T::one() - T::lit(4.0) * T::epsilon());
        for v in w.iter_mut().flatten() {
            *v *= f;
        }
        tv = total_variation(&w);
    }
    w
}

fn piecewise_constant(
    rng: &mut ChaCha8Rng,
    n: usize,
    d: usize,
    c: f64,
    b: f64,
    jumps: usize,
) -> Result<Vec<Vec<f64>>> {
    if jumps == 0 || jumps > n - 1 {
        return Err(Error::Infeasible(format!(
            "{jumps} jumps cannot realize a positive budget over {n} rounds"
        )));
    }
    let size = c / jumps as f64;
    if size > 2.0 * b {
        return Err(Error::Infeasible(format!(
            "jump size {size} exceeds the box width {}",
            2.0 * b
        )));
    }
    let mut at: Vec<usize> = sample(rng, n - 1, jumps).into_iter().map(|i| i + 1).collect();
    at.sort_unstable();
    // large steps alternate around the center, small ones reflect off the walls
    let mut cur = vec![if size > b { -size / 2.0 } else { 0.0 }; d];
    let mut w = Vec::with_capacity(n);
    let mut next = at.iter().peekable();
    for t in 0..n {
        if next.peek() == Some(&&t) {
            next.next();
            let k = rng.gen_range(0..d);
            let v = cur[k];
            let up: bool = rng.gen();
            cur[k] = if size > b {
                if v < 0.0 { v + size } else { v - size }
            } else if (up && v + size <= b) || v - size < -b {
                v + size
            } else {
                v - size
            };
        }
        w.push(cur.clone());
    }
    Ok(w)
}

fn single_spike(rng: &mut ChaCha8Rng, n: usize, d: usize, c: f64, b: f64) -> Result<Vec<Vec<f64>>> {
    let height = c / 2.0;
    if n < 3 {
        return Err(Error::Infeasible("a spike needs at least 3 rounds".into()));
    }
    if height > 2.0 * b {
        return Err(Error::Infeasible(format!("spike height {height} exceeds the box width")));
    }
    let width = rng.gen_range(1..=(n / 8).max(1));
    let start = rng.gen_range(1..n - width);
    let k = rng.gen_range(0..d);
    let (base, sign) = if height <= b {
        (0.0, if rng.gen() { 1.0 } else { -1.0 })
    } else {
        (-height / 2.0, 1.0)
    };
    Ok((0..n)
        .map(|t| {
            let mut row = vec![0.0; d];
            row[k] = base;
            if t >= start && t < start + width {
                row[k] += sign * height;
            }
            row
        })
        .collect())
}

fn sinusoid(rng: &mut ChaCha8Rng, n: usize, d: usize, c: f64, b: f64, frequency: f64) -> Result<Vec<Vec<f64>>> {
    if !(frequency > 0.0) || !frequency.is_finite() {
        return Err(Error::invalid(format!("sinusoid frequency must be positive, got {frequency}")));
    }
    let phases: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    let raw: Vec<Vec<f64>> = (0..n)
        .map(|t| {
            phases
                .iter()
                .map(|p| (std::f64::consts::TAU * frequency * t as f64 / n as f64 + p).sin())
                .collect()
        })
        .collect();
    let tv = total_variation(&raw);
    if tv == 0.0 {
        return Err(Error::Infeasible("sinusoid sampled to a constant".into()));
    }
    let amp = c / tv;
    let peak = raw.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())) * amp;
    if peak > b {
        return Err(Error::Infeasible(format!(
            "sinusoid with frequency {frequency} needs amplitude {peak} > {b} to reach the budget"
        )));
    }
    Ok(raw.into_iter().map(|r| r.into_iter().map(|v| v * amp).collect()).collect())
}

fn random_walk(rng: &mut ChaCha8Rng, n: usize, d: usize, c: f64, b: f64) -> Result<Vec<Vec<f64>>> {
    let mut cur = vec![0.0; d];
    let mut w = Vec::with_capacity(n);
    for _ in 0..n {
        w.push(cur.clone());
        for v in cur.iter_mut() {
            *v += rng.sample::<f64, _>(StandardNormal);
        }
    }
    for _ in 0..RESCALE_ROUNDS {
        let tv = total_variation(&w);
        if tv == 0.0 {
            break;
        }
        if tv <= c && tv >= 0.9 * c {
            return Ok(w);
        }
        let f = c / tv;
        for v in w.iter_mut().flatten() {
            *v = (*v * f).clamp(-b, b);
        }
    }
    Err(Error::Infeasible(format!(
        "random walk could not be fitted to budget {c} inside [−{b}, {b}]"
    )))
}
