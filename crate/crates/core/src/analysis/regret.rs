use crate::error::{Error, Result};
use crate::learners::generalized_projection;
use crate::learners::linalg::Matrix;
use crate::loss::Loss;
use crate::protocol::{ComparatorSequence, DecisionBox, ExperimentTrace};
use crate::scalar::{dot, Scalar};

const NEWTON_ITERATIONS: usize = 200;

fn check_horizon<T: Scalar>(trace: &ExperimentTrace<T>, n: usize) -> Result<()> {
    if trace.len() != n {
        return Err(Error::HorizonMismatch {
            expected: trace.len(),
            got: n,
        });
    }
    Ok(())
}

/// `Σ_t f_t(x_t) − f_t(w_t)`.
pub fn dynamic_regret<T: Scalar>(
    trace: &ExperimentTrace<T>,
    comparator: &ComparatorSequence<T>,
    losses: &[Loss<T>],
) -> Result<T> {
    check_horizon(trace, losses.len())?;
    check_horizon(trace, comparator.len())?;
    let mut total = T::zero();
    for ((r, w), l) in trace.rounds.iter().zip(&comparator.w).zip(losses) {
        total += l.value(&r.x)? - l.value(w)?;
    }
    Ok(total)
}

/// Minimizer of `Σ f_t` over the box `‖x‖∞ ≤ bound` and its value.
///
/// Squared losses use the clamped label mean (exact: the objective is
/// separable and isotropic). Otherwise damped projected Newton: each step
/// minimizes the local quadratic model over the box in the Hessian metric and
/// backtracks along the resulting direction.
pub fn best_fixed_point<T: Scalar>(losses: &[Loss<T>], bound: T) -> Result<(Vec<T>, T)> {
    let n = losses.len();
    if n == 0 {
        return Err(Error::invalid("empty loss sequence"));
    }
    let d = losses[0].dim();
    let bx = DecisionBox::new(bound, d)?;
    let total = |x: &[T]| -> T { losses.iter().map(|l| l.value_unchecked(x)).sum() };

    if losses.iter().all(Loss::is_squared) {
        let mut x = vec![T::zero(); d];
        for l in losses {
            for (a, y) in x.iter_mut().zip(l.label().unwrap_or(&[])) {
                *a += *y;
            }
        }
        for a in x.iter_mut() {
            *a = bx.clamp_scalar(*a / T::from_count(n));
        }
        let v = total(&x);
        return Ok((x, v));
    }

    let mut x = vec![T::zero(); d];
    let mut value = total(&x);
    let mut g = vec![T::zero(); d];
    for _ in 0..NEWTON_ITERATIONS {
        let mut grad = vec![T::zero(); d];
        let mut hess = Matrix::zeros(d);
        for l in losses {
            l.gradient_into(&x, &mut g);
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += *b;
            }
            let h = l.hessian(&x)?;
            for i in 0..d {
                for j in 0..d {
                    hess[(i, j)] += h[i][j];
                }
            }
        }
        let scale = (0..d).map(|i| hess[(i, i)]).fold(T::zero(), |a, b| a.max(b));
        let ridge = T::lit(1e-12) * (T::one() + scale);
        for i in 0..d {
            hess[(i, i)] += ridge;
        }
        let step = hess.spd_inverse()?.mul_vec(&grad);
        let z: Vec<T> = x.iter().zip(&step).map(|(a, b)| *a - *b).collect();
        let y = generalized_projection(&hess, &z, &bx)?;
        let dir: Vec<T> = y.iter().zip(&x).map(|(a, b)| *a - *b).collect();
        let slope = dot(&grad, &dir);
        if dir.iter().all(|v| v.abs() <= T::lit(1e-14) * (T::one() + bound)) || slope >= T::zero() {
            break;
        }
        let mut t = T::one();
        let accepted = loop {
            let cand: Vec<T> = x.iter().zip(&dir).map(|(a, b)| bx.clamp_scalar(*a + t * *b)).collect();
            let v = total(&cand);
            if v <= value + T::lit(1e-4) * t * slope {
                break Some((cand, v));
            }
            t *= T::half();
            if t < T::lit(1e-20) {
                break None;
            }
        };
        match accepted {
            Some((cand, v)) => {
                let gain = value - v;
                x = cand;
                value = v;
                if gain <= T::epsilon() * value.abs().max(T::one()) {
                    break;
                }
            }
            None => break,
        }
    }
    Ok((x, value))
}

/// Learner loss on rounds `start..=end` (1-based) minus the best fixed point
/// in the comparator box on that interval.
pub fn interval_static_regret<T: Scalar>(
    trace: &ExperimentTrace<T>,
    losses: &[Loss<T>],
    start: usize,
    end: usize,
    bound: T,
) -> Result<T> {
    check_horizon(trace, losses.len())?;
    if start == 0 || end < start || end > losses.len() {
        return Err(Error::invalid(format!(
            "interval [{start}, {end}] outside 1..={}",
            losses.len()
        )));
    }
    let slice = &losses[start - 1..end];
    let learner: T = trace.rounds[start - 1..end]
        .iter()
        .zip(slice)
        .map(|(r, l)| l.value_unchecked(&r.x))
        .sum();
    let (_, best) = best_fixed_point(slice, bound)?;
    Ok(learner - best)
}
