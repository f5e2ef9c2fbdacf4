//! Exact one-dimensional fused lasso (total-variation denoising).
//!
//! Minimizes `½Σ(y_t − u_t)² + λΣ|u_{t+1} − u_t|` by dynamic programming
//! over the piecewise-linear derivative of the partial objective: each step
//! keeps the knots of the message derivative in a deque-like window of a
//! `2n` array, records the two clipping points `[t⁻_k, t⁺_k]`, and the
//! solution is recovered by clamping backwards. Linear time and exact up to
//! floating point rounding.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn fused_lasso_1d<T: Scalar>(y: &[T], lambda: T) -> Result<Vec<T>> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(Error::invalid(format!("fused lasso penalty must be ≥ 0, got {lambda}")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fused lasso input".into()));
    }
    let n = y.len();
    if n <= 1 || lambda == T::zero() || y.iter().all(|v| *v == y[0]) {
        return Ok(y.to_vec());
    }

    let zero = T::zero();
    let one = T::one();
    let mut x = vec![zero; 2 * n];
    let mut a = vec![zero; 2 * n];
    let mut b = vec![zero; 2 * n];
    let mut tm = vec![zero; n - 1];
    let mut tp = vec![zero; n - 1];

    tm[0] = -lambda + y[0];
    tp[0] = lambda + y[0];
    let mut l = n - 1;
    let mut r = n;
    x[l] = tm[0];
    x[r] = tp[0];
    a[l] = one;
    b[l] = -y[0] + lambda;
    a[r] = -one;
    b[r] = y[0] + lambda;
    let mut afirst = one;
    let mut bfirst = -lambda - y[1];
    let mut alast = -one;
    let mut blast = -lambda + y[1];

    for k in 1..n - 1 {
        // lowest knot where the derivative exceeds −λ
        let mut alo = afirst;
        let mut blo = bfirst;
        let mut lo = l;
        while lo <= r {
            if alo * x[lo] + blo > -lambda {
                break;
            }
            alo += a[lo];
            blo += b[lo];
            lo += 1;
        }
        tm[k] = (-lambda - blo) / alo;
        l = lo - 1;
        x[l] = tm[k];

        // highest knot where the derivative is below λ
        let mut ahi = alast;
        let mut bhi = blast;
        let mut hi = r;
        while hi >= l {
            if -ahi * x[hi] - bhi < lambda {
                break;
            }
            ahi += a[hi];
            bhi += b[hi];
            hi -= 1;
        }
        tp[k] = (lambda + bhi) / (-ahi);
        r = hi + 1;
        x[r] = tp[k];

        a[l] = alo;
        b[l] = blo + lambda;
        a[r] = ahi;
        b[r] = bhi + lambda;
        afirst = one;
        bfirst = -lambda - y[k + 1];
        alast = -one;
        blast = -lambda + y[k + 1];
    }

    // zero of the final derivative
    let mut alo = afirst;
    let mut blo = bfirst;
    let mut lo = l;
    while lo <= r {
        if alo * x[lo] + blo > zero {
            break;
        }
        alo += a[lo];
        blo += b[lo];
        lo += 1;
    }
    let mut u = vec![zero; n];
    u[n - 1] = -blo / alo;
    for k in (0..n - 1).rev() {
        u[k] = if u[k + 1] > tp[k] {
            tp[k]
        } else if u[k + 1] < tm[k] {
            tm[k]
        } else {
            u[k + 1]
        };
    }
    Ok(u)
}

/// Penalized objective `½Σ(y−u)² + λΣ|Δu|`.
pub fn fused_lasso_objective<T: Scalar>(y: &[T], u: &[T], lambda: T) -> T {
    let fit: T = y.iter().zip(u).map(|(a, b)| (*a - *b) * (*a - *b)).sum();
    let tv: T = u.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    T::half() * fit + lambda * tv
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent solver: projected coordinate descent on the box-constrained
    /// dual `min ½‖y − Dᵀv‖²` s.t. `|v| ≤ λ`, with `u = y − Dᵀv`.
    fn dual_oracle(y: &[f64], lambda: f64) -> Vec<f64> {
        let n = y.len();
        let mut v = vec![0.0; n - 1];
        let primal = |v: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|t| {
                    let right = if t < n - 1 { v[t] } else { 0.0 };
                    let left = if t > 0 { v[t - 1] } else { 0.0 };
                    // (Dᵀv)_t = v_{t−1} − v_t with (Du)_t = u_{t+1} − u_t
                    y[t] - (left - right)
                })
                .collect()
        };
        for _ in 0..200_000 {
            let mut moved = 0.0f64;
            for i in 0..n - 1 {
                let u = primal(&v);
                // ∂/∂v_i ½‖y − Dᵀv‖² = −(Du)_i ; curvature 2
                let g = -(u[i + 1] - u[i]);
                let next = (v[i] - g / 2.0).clamp(-lambda, lambda);
                moved = moved.max((next - v[i]).abs());
                v[i] = next;
            }
            if moved < 1e-14 {
                break;
            }
        }
        primal(&v)
    }

    #[test]
    fn constant_input_is_fixed() {
        let y = vec![0.4; 9];
        for lam in [0.0, 0.3, 10.0] {
            assert_eq!(fused_lasso_1d(&y, lam).unwrap(), y);
        }
    }

    #[test]
    fn zero_penalty_returns_input() {
        let y = vec![1.0, -2.0, 0.5];
        assert_eq!(fused_lasso_1d(&y, 0.0).unwrap(), y);
    }

    #[test]
    fn large_penalty_returns_mean() {
        let u: Vec<f64> = fused_lasso_1d(&[0.0, 1.0, 0.0], 5.0).unwrap();
        for v in &u {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        // grid search over constant and two-level sequences near the answer
        let y = [0.0, 1.0, 0.0];
        let best = fused_lasso_objective(&y, &u, 5.0);
        for i in -500..=500 {
            for j in -50..=50 {
                let c = 1.0 / 3.0 + i as f64 * 1e-3;
                let cand = [c, c + j as f64 * 1e-3, c];
                assert!(fused_lasso_objective(&y, &cand, 5.0) >= best - 1e-12);
            }
        }
    }

    #[test]
    fn negative_penalty_rejected() {
        assert!(fused_lasso_1d(&[1.0, 2.0], -1.0).is_err());
    }

    #[test]
    fn matches_dual_solver_on_small_instances() {
        let ys: [&[f64]; 4] = [
            &[-2.0, -1.0, 1.0, 2.0, 2.0, 2.0],
            &[0.3, -0.8, 0.9, 0.1, -0.4, 0.7, 0.2],
            &[1.0, 1.0, -1.0, -1.0, 1.0],
            &[0.5, 0.25],
        ];
        for y in ys {
            for lam in [0.05, 0.3, 1.0, 3.0] {
                let u = fused_lasso_1d(y, lam).unwrap();
                let v = dual_oracle(y, lam);
                for (a, b) in u.iter().zip(&v) {
                    assert!((a - b).abs() < 1e-9, "y={y:?} λ={lam}: {u:?} vs {v:?}");
                }
            }
        }
    }

    #[test]
    fn f32_instantiation() {
        let u = fused_lasso_1d(&[0.0f32, 1.0, 0.0], 5.0).unwrap();
        assert!(u.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-6));
    }

    fn tv(u: &[f64]) -> f64 {
        u.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    proptest! {
        #[test]
        fn tv_nonincreasing_in_penalty(y in prop::collection::vec(-1.0f64..1.0, 2..60)) {
            let mut prev = f64::INFINITY;
            for i in 0..40 {
                let lam = 0.02 * i as f64;
                let t = tv(&fused_lasso_1d(&y, lam).unwrap());
                prop_assert!(t <= prev + 1e-12);
                prev = t;
            }
        }

        #[test]
        fn beats_perturbations(y in prop::collection::vec(-1.0f64..1.0, 2..30), lam in 0.0f64..2.0, k in 0usize..30, eps in -0.1f64..0.1) {
            let u = fused_lasso_1d(&y, lam).unwrap();
            let base = fused_lasso_objective(&y, &u, lam);
            let mut p = u.clone();
            let k = k % p.len();
            p[k] += eps;
            prop_assert!(fused_lasso_objective(&y, &p, lam) >= base - 1e-12);
        }
    }
}
