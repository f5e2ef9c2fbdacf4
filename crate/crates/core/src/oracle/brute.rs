use crate::error::{Error, Result};
use crate::loss::Loss;
use crate::scalar::Scalar;

const MAX_HORIZON: usize = 8;
const MAX_CELLS: usize = 200_000_000;

/// Exhaustive oracle over the grid `{−B, −B + h, …}` with the path budget
/// discretized to `⌊C/h⌋` grid steps. One-dimensional, `n ≤ 8`.
///
/// Dynamic program over (value, budget used); the transition minimum over
/// all predecessors within reach is a pair of diagonal running minima, so
/// each round costs `O(grid × budget)`. Returns the best grid sequence and
/// its exact objective `Σf_t(u_t)`.
pub fn brute_force_oracle<T: Scalar>(
    losses: &[Loss<T>],
    budget: T,
    bound: T,
    grid_step: T,
) -> Result<(Vec<T>, T)> {
    let n = losses.len();
    if n == 0 {
        return Err(Error::invalid("empty loss sequence"));
    }
    if n > MAX_HORIZON {
        return Err(Error::TooLarge(format!("horizon {n} exceeds {MAX_HORIZON}")));
    }
    if let Some(l) = losses.iter().find(|l| l.dim() != 1) {
        return Err(Error::TooLarge(format!("dimension {} (only d = 1 is enumerable)", l.dim())));
    }
    if !(grid_step > T::zero()) || !(bound > T::zero()) || !(budget >= T::zero()) {
        return Err(Error::invalid("grid step and bound must be positive, budget ≥ 0"));
    }
    let span = (T::two() * bound / grid_step).as_f64();
    let g = (span + 1e-9).floor() as usize + 1;
    let max_units = (n - 1) * (g - 1);
    let units = ((budget / grid_step).as_f64() + 1e-9).floor();
    let units = if units >= max_units as f64 { max_units } else { units as usize };
    let w = units + 1;
    if g.saturating_mul(w).saturating_mul(n) > MAX_CELLS {
        return Err(Error::TooLarge(format!("{g} grid values × {w} budget levels × {n} rounds")));
    }

    let grid: Vec<T> = (0..g).map(|j| -bound + grid_step * T::from_count(j)).collect();
    let cost = |t: usize, j: usize| losses[t].value_unchecked(&[grid[j]]);

    let mut best: Vec<T> = (0..g).flat_map(|j| std::iter::repeat_n(cost(0, j), w)).collect();
    let mut back = vec![0u32; n * g * w];
    let mut left = vec![(T::zero(), 0u32); g * w];
    let mut right = vec![(T::zero(), 0u32); g * w];
    for t in 1..n {
        for v in 0..g {
            for b in 0..w {
                let i = v * w + b;
                let mut m = (best[i], v as u32);
                if v > 0 && b > 0 && left[i - w - 1].0 < m.0 {
                    m = left[i - w - 1];
                }
                left[i] = m;
            }
        }
        for v in (0..g).rev() {
            for b in 0..w {
                let i = v * w + b;
                let mut m = (best[i], v as u32);
                if v + 1 < g && b > 0 && right[i + w - 1].0 < m.0 {
                    m = right[i + w - 1];
                }
                right[i] = m;
            }
        }
        let base = t * g * w;
        for v in 0..g {
            let c = cost(t, v);
            for b in 0..w {
                let i = v * w + b;
                let (l, r) = (left[i], right[i]);
                let m = if r.0 < l.0 { r } else { l };
                best[i] = c + m.0;
                back[base + i] = m.1;
            }
        }
    }

    let mut v = 0;
    for j in 1..g {
        if best[j * w + units] < best[v * w + units] {
            v = j;
        }
    }
    let objective = best[v * w + units];
    let mut path = vec![0usize; n];
    let mut b = units;
    path[n - 1] = v;
    for t in (1..n).rev() {
        let prev = back[t * g * w + v * w + b] as usize;
        b -= v.abs_diff(prev);
        v = prev;
        path[t - 1] = v;
    }
    Ok((path.into_iter().map(|j| grid[j]).collect(), objective))
}

/// Upper bound on `brute − exact` for squared losses on `[−B, B]`.
///
/// Shrinking the exact solution toward the constant mean by the factor
/// `θ = 1 − (n−1)h/C` frees enough budget to round every value to the grid;
/// convexity and the rounding error per round `h(|y_t| + B) + h²/4` give
/// `(1−θ)·obj(mean) + Σ h(|y_t| + B) + n·h²/4`. The returned value inflates
/// the rounding terms as headroom against floating point.
pub fn squared_grid_gap_bound<T: Scalar>(y: &[T], budget: T, bound: T, grid_step: T) -> T {
    let n = y.len();
    if n == 0 {
        return T::zero();
    }
    let h = grid_step;
    let mean = y.iter().copied().sum::<T>() / T::from_count(n);
    let obj_mean: T = y.iter().map(|v| (*v - mean) * (*v - mean)).sum();
    let theta = if budget > T::zero() {
        (T::one() - T::from_count(n - 1) * h / budget).max(T::zero())
    } else {
        T::zero()
    };
    let rounding: T = y.iter().map(|v| T::two() * h * (v.abs() + bound)).sum();
    (T::one() - theta) * obj_mean + rounding + T::from_count(n) * h * h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(y: &[f64], b: f64) -> Vec<Loss<f64>> {
        y.iter().map(|v| Loss::squared(vec![*v], b).unwrap()).collect()
    }

    fn enumerate(y: &[f64], budget: f64, bound: f64, h: f64) -> f64 {
        // plain recursion over all grid sequences
        let g = (2.0 * bound / h + 1e-9).floor() as usize + 1;
        let units = (budget / h + 1e-9).floor() as usize;
        fn rec(t: usize, prev: Option<usize>, left: usize, y: &[f64], g: usize, b: f64, h: f64) -> f64 {
            if t == y.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..g {
                let used = prev.map_or(0, |p| p.abs_diff(j));
                if used > left {
                    continue;
                }
                let v = -b + h * j as f64;
                let c = (y[t] - v).powi(2) + rec(t + 1, Some(j), left - used, y, g, b, h);
                best = best.min(c);
            }
            best
        }
        rec(0, None, units, y, g, bound, h)
    }

    #[test]
    fn matches_plain_enumeration() {
        let cases: [(&[f64], f64); 4] = [
            (&[0.1, 0.9, -0.3], 0.5),
            (&[1.0, -1.0, 1.0, 0.2], 1.0),
            (&[0.3, 0.35], 0.0),
            (&[-0.8, 0.6, 0.6], 3.0),
        ];
        for (y, c) in cases {
            let (u, obj) = brute_force_oracle(&sq(y, 1.0), c, 1.0, 0.25).unwrap();
            let e = enumerate(y, c, 1.0, 0.25);
            assert!((obj - e).abs() < 1e-12, "{y:?}: {obj} vs {e}");
            let direct: f64 = u.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
            assert!((direct - obj).abs() < 1e-12);
            let tv: f64 = u.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
            assert!(tv <= c + 1e-9);
        }
    }

    #[test]
    fn zero_budget_picks_constant_nearest_mean() {
        let y = [0.1, 0.5, 0.33];
        let (u, _) = brute_force_oracle(&sq(&y, 1.0), 0.0, 1.0, 0.1).unwrap();
        assert!(u.iter().all(|v| (*v - u[0]).abs() < 1e-12));
        assert!((u[0] - 0.3).abs() < 1e-9);
    }

    #[test]
    fn large_budget_picks_per_round_minimizers() {
        let y = [0.1, -0.5, 0.3];
        let (u, _) = brute_force_oracle(&sq(&y, 1.0), 10.0, 1.0, 0.1).unwrap();
        for (a, b) in u.iter().zip(y) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_large_instances() {
        let y = [0.0; 9];
        assert!(matches!(
            brute_force_oracle(&sq(&y, 1.0), 1.0, 1.0, 0.1),
            Err(Error::TooLarge(_))
        ));
        let l = vec![Loss::squared(vec![0.0, 0.0], 1.0).unwrap()];
        assert!(brute_force_oracle(&l, 1.0, 1.0, 0.1).is_err());
    }
}
