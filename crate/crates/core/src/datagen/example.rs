use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Constructive instance whose oracle dual grows linearly with the horizon.
///
/// Labels `y_1 = −2`, `y_t = −1` for `2 ≤ t < n/2`, `y_{n/2} = 1` and
/// `y_t = 2` afterwards, with budget `C = 1`. The oracle is the unit step at
/// `n/2` with `λ = n/2`; its certificate is `s_t = (t+1)ε` before the step
/// and `s_t = (n−t)ε` from it on, where `ε = 2/n`. The labels never exceed 2,
/// so the box `B = 2` is slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperExample<T> {
    pub labels: Vec<Vec<T>>,
    pub expected_u: Vec<Vec<T>>,
    pub expected_lambda: T,
    /// `s_1..s_{n−1}`.
    pub expected_s: Vec<T>,
    pub epsilon: T,
    pub budget: T,
    pub bound: T,
}

pub fn gen_paper_example<T: Scalar>(n: usize) -> Result<PaperExample<T>> {
    if n < 6 || n % 2 == 1 {
        return Err(Error::invalid(format!("horizon must be even and ≥ 6, got {n}")));
    }
    let half = n / 2;
    let labels = (1..=n)
        .map(|t| {
            vec![T::lit(match t {
                1 => -2.0,
                t if t < half => -1.0,
                t if t == half => 1.0,
                _ => 2.0,
            })]
        })
        .collect();
    let expected_u = (1..=n)
        .map(|t| vec![if t < half { T::zero() } else { T::one() }])
        .collect();
    let epsilon = T::two() / T::from_count(n);
    let expected_s = (1..n)
        .map(|t| {
            if t < half {
                T::from_count(t + 1) * epsilon
            } else {
                T::from_count(n - t) * epsilon
            }
        })
        .collect();
    Ok(PaperExample {
        labels,
        expected_u,
        expected_lambda: T::from_count(half),
        expected_s,
        epsilon,
        budget: T::one(),
        bound: T::two(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::tv_constrained_solve;

    #[test]
    fn small_instances() {
        let e = gen_paper_example::<f64>(6).unwrap();
        let y: Vec<f64> = e.labels.iter().map(|r| r[0]).collect();
        assert_eq!(y, vec![-2.0, -1.0, 1.0, 2.0, 2.0, 2.0]);
        let u: Vec<f64> = e.expected_u.iter().map(|r| r[0]).collect();
        assert_eq!(u, vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(e.expected_lambda, 3.0);
        assert_eq!(gen_paper_example::<f64>(8).unwrap().expected_lambda, 4.0);
        assert!(gen_paper_example::<f64>(7).is_err());
        assert!(gen_paper_example::<f64>(4).is_err());
    }

    #[test]
    fn stationarity_with_stated_certificate() {
        for n in [6, 8, 16, 64] {
            let e = gen_paper_example::<f64>(n).unwrap();
            let s = |t: usize| if t == 0 || t == n { 0.0 } else { e.expected_s[t - 1] };
            for t in 1..=n {
                let r = e.labels[t - 1][0] - e.expected_u[t - 1][0] + e.expected_lambda * (s(t) - s(t - 1));
                assert!(r.abs() <= 1e-12, "n={n} t={t}: {r}");
            }
            assert!((s(n / 2 - 2) - (1.0 - e.epsilon)).abs() < 1e-12);
            assert!(e.expected_s.iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn oracle_reproduces_step() {
        for n in [6, 8, 16, 64, 256] {
            let e = gen_paper_example::<f64>(n).unwrap();
            let sol = tv_constrained_solve(&e.labels, e.budget, e.bound).unwrap();
            for (a, b) in sol.u.iter().zip(&e.expected_u) {
                assert!((a[0] - b[0]).abs() <= 1e-9);
            }
            assert!((sol.lambda - e.expected_lambda).abs() <= 1e-6);
        }
    }
}
