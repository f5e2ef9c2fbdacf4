use crate::error::{Error, Result};
use crate::protocol::total_variation;
use crate::scalar::Scalar;

use super::fused_lasso::fused_lasso_1d;
use super::kkt::kkt_extract;
use super::{check_rectangular, columns, from_columns, OracleSolution};

const MAX_BRACKET_DOUBLINGS: usize = 200;
const MAX_BISECTIONS: usize = 400;

/// Squared-loss oracle `min Σ‖y_t − u_t‖²` subject to `Σ‖u_{t+1} − u_t‖₁ ≤ C`.
///
/// `λ` is reported in the fused-lasso convention `½Σ(y−u)² + λ·TV`, so the
/// stationarity certificate reads `u_t − y_t = λ(s_t − s_{t−1})`. The box
/// `‖u‖∞ ≤ B` never binds when `|y| ≤ B` and is only asserted.
pub fn tv_constrained_solve<T: Scalar>(
    y: &[Vec<T>],
    budget: T,
    bound: T,
) -> Result<OracleSolution<T>> {
    let (n, d) = check_rectangular(y)?;
    if !(budget >= T::zero()) || !budget.is_finite() {
        return Err(Error::invalid(format!("budget must be ≥ 0, got {budget}")));
    }
    if !(bound > T::zero()) {
        return Err(Error::invalid(format!("bound must be positive, got {bound}")));
    }
    if y.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("labels".into()));
    }
    if let Some(v) = y.iter().flatten().find(|v| v.abs() > bound) {
        return Err(Error::invalid(format!("label {v} outside [−{bound}, {bound}]")));
    }

    let cols = columns(y, d);
    let (lambda, u_cols) = if total_variation(y) <= budget {
        (T::zero(), cols.clone())
    } else if budget == T::zero() {
        constant_solution(&cols, n)
    } else {
        let lambda = bisect_lambda(&cols, n, budget)?;
        let u_cols = solve_columns(&cols, lambda)?;
        (lambda, u_cols)
    };
    let u = from_columns(&u_cols, n);

    let slack = T::lit(1e-12) * bound;
    if let Some(v) = u.iter().flatten().find(|v| v.abs() > bound + slack) {
        return Err(Error::Numerical(format!("oracle value {v} left the box")));
    }
    let tv = total_variation(&u);
    let grads: Vec<Vec<T>> = u
        .iter()
        .zip(y)
        .map(|(ur, yr)| ur.iter().zip(yr).map(|(a, b)| *a - *b).collect())
        .collect();
    let objective = grads.iter().flatten().map(|g| *g * *g).sum();
    let cert = kkt_extract(&grads, &u, lambda, budget, None, T::zero())?;
    Ok(OracleSolution::assemble(u, lambda, objective, tv, budget, cert))
}

/// Column means, certified by the smallest λ keeping every `s_t` in `[−1, 1]`.
fn constant_solution<T: Scalar>(cols: &[Vec<T>], n: usize) -> (T, Vec<Vec<T>>) {
    let mut lambda = T::zero();
    let mut out = Vec::with_capacity(cols.len());
    for c in cols {
        let mean = c.iter().copied().sum::<T>() / T::from_count(n);
        let mut cum = T::zero();
        for v in &c[..n - 1] {
            cum += mean - *v;
            lambda = lambda.max(cum.abs());
        }
        out.push(vec![mean; n]);
    }
    (lambda, out)
}

fn solve_columns<T: Scalar>(cols: &[Vec<T>], lambda: T) -> Result<Vec<Vec<T>>> {
    cols.iter().map(|c| fused_lasso_1d(c, lambda)).collect()
}

fn tv_at<T: Scalar>(cols: &[Vec<T>], lambda: T) -> Result<T> {
    let mut tv = T::zero();
    for c in cols {
        let u = fused_lasso_1d(c, lambda)?;
        tv += u.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<T>();
    }
    Ok(tv)
}

/// Finds λ with `TV(λ) = C` on the nonincreasing, continuous path.
fn bisect_lambda<T: Scalar>(cols: &[Vec<T>], n: usize, budget: T) -> Result<T> {
    let tol = T::lit(1e-8) * budget.max(T::one());
    let mut hi = T::zero();
    for c in cols {
        let mean = c.iter().copied().sum::<T>() / T::from_count(n);
        for v in c {
            hi = hi.max((*v - mean).abs());
        }
    }
    hi *= T::from_count(n);
    let mut tv_hi = tv_at(cols, hi)?;
    let mut doublings = 0;
    while tv_hi > budget {
        hi *= T::two();
        tv_hi = tv_at(cols, hi)?;
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS {
            return Err(Error::NoConvergence {
                what: "λ bracket",
                iterations: doublings,
                residual: (tv_hi - budget).as_f64(),
            });
        }
    }
    let mut lo = T::zero();
    let mut tv_lo = tv_at(cols, lo)?;
    let mut iterations = 0;
    while iterations < MAX_BISECTIONS {
        iterations += 1;
        let mid = (lo + hi) * T::half();
        if mid <= lo || mid >= hi {
            break;
        }
        let tv_mid = tv_at(cols, mid)?;
        if tv_mid > budget {
            lo = mid;
            tv_lo = tv_mid;
        } else {
            hi = mid;
            tv_hi = tv_mid;
        }
        if (tv_lo - tv_hi).abs() <= tol * T::lit(1e-3) {
            break;
        }
    }
    // TV is piecewise linear in λ: one secant step usually lands exactly
    let mut best = hi;
    let mut best_gap = (tv_hi - budget).abs();
    if tv_lo > tv_hi {
        let cand = lo + (tv_lo - budget) * (hi - lo) / (tv_lo - tv_hi);
        if cand > lo && cand < hi {
            let gap = (tv_at(cols, cand)? - budget).abs();
            if gap < best_gap {
                best = cand;
                best_gap = gap;
            }
        }
    }
    if best_gap > tol {
        return Err(Error::NoConvergence {
            what: "λ bisection",
            iterations,
            residual: best_gap.as_f64(),
        });
    }
    Ok(best)
}
