//! Recovery of dual certificates `(s, γ⁻, γ⁺)` from a primal oracle sequence.
//!
//! Stationarity reads `g_t = λ(s_t − s_{t−1}) + γ⁻_t − γ⁺_t` with
//! `s_0 = s_n = 0`, where `g_t` is the gradient of the round loss at `u_t`
//! (for the squared oracle, `u_t − y_t`). At jumps `s_t` is the jump sign; on
//! flats it follows the forward recursion. When a flat sits on the box, the
//! box multiplier is released lazily: only as much as needed to keep `s`
//! inside `[−1, 1]`, with the remainder settled at the segment's last round.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::total_variation;
use crate::scalar::Scalar;

/// Maximal violations of the KKT system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport<T> {
    pub stationarity_max_residual: T,
    /// `max_t max(0, |s_t| − 1)`.
    pub subgradient_violation: T,
    /// `λ·|TV(u) − C|`.
    pub comp_slack_tv: T,
    /// `max γ⁻(u + B) + γ⁺(B − u)`.
    pub comp_slack_box: T,
    /// Set when `λ = 0` and some flat leaves `s` undetermined.
    pub s_non_unique: bool,
}

impl<T: Scalar> KktReport<T> {
    pub fn max_residual(&self) -> T {
        self.stationarity_max_residual
            .max(self.subgradient_violation)
            .max(self.comp_slack_tv)
            .max(self.comp_slack_box)
    }
}

/// Dual variables and their residual report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktCertificate<T> {
    /// `n − 1` rows of `d` subgradients; row `t` sits between `u_t` and `u_{t+1}`.
    pub s: Vec<Vec<T>>,
    /// Whether each entry of `s` was recovered on a flat (non-unique in general).
    pub s_recovered: Vec<Vec<bool>>,
    pub gamma_minus: Vec<Vec<T>>,
    pub gamma_plus: Vec<Vec<T>>,
    pub report: KktReport<T>,
}

/// Extracts `(s, γ±)` for the sequence `u` given per-round gradients at `u`.
///
/// `bound` enables box multipliers (`None` for the unconstrained squared
/// oracle); `jump_tol` is the magnitude below which `u_{t+1} − u_t` counts as
/// a flat.
pub fn kkt_extract<T: Scalar>(
    grads: &[Vec<T>],
    u: &[Vec<T>],
    lambda: T,
    budget: T,
    bound: Option<T>,
    jump_tol: T,
) -> Result<KktCertificate<T>> {
    let n = u.len();
    if n == 0 {
        return Err(Error::invalid("empty sequence"));
    }
    if grads.len() != n {
        return Err(Error::HorizonMismatch {
            expected: n,
            got: grads.len(),
        });
    }
    let d = u[0].len();
    for row in u.iter().chain(grads) {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
    }
    if !(lambda >= T::zero()) {
        return Err(Error::invalid(format!("λ must be ≥ 0, got {lambda}")));
    }
    let zero = T::zero();
    let one = T::one();
    let box_tol = bound.map_or(zero, |b| jump_tol.max(T::lit(1e-12) * b));

    let mut s = vec![vec![zero; d]; n.saturating_sub(1)];
    let mut s_recovered = vec![vec![false; d]; n.saturating_sub(1)];
    let mut gm = vec![vec![zero; d]; n];
    let mut gp = vec![vec![zero; d]; n];
    let mut non_unique = false;

    for k in 0..d {
        let jump = |t: usize| {
            let delta = u[t + 1][k] - u[t][k];
            if delta.abs() > jump_tol {
                delta.signum()
            } else {
                zero
            }
        };
        let at_upper = |t: usize| bound.is_some_and(|b| u[t][k] >= b - box_tol);
        let at_lower = |t: usize| bound.is_some_and(|b| u[t][k] <= -b + box_tol);

        if lambda == zero {
            for t in 0..n - 1 {
                let sg = jump(t);
                s[t][k] = sg;
                if sg == zero {
                    s_recovered[t][k] = true;
                    non_unique = true;
                }
            }
            for t in 0..n {
                let g = grads[t][k];
                if at_upper(t) && g < zero {
                    gp[t][k] = -g;
                } else if at_lower(t) && g > zero {
                    gm[t][k] = g;
                }
            }
            continue;
        }

        // segments of rows [a, b] separated by jumps
        let mut a = 0;
        while a < n {
            let mut b = a;
            while b + 1 < n && jump(b) == zero {
                b += 1;
            }
            let s_before = if a == 0 { zero } else { jump(a - 1) };
            let s_after = if b == n - 1 { zero } else { jump(b) };
            let upper = at_upper(a);
            let lower = !upper && at_lower(a);

            let mut hat = s_before;
            let mut acc = zero;
            for t in a..=b {
                hat += grads[t][k] / lambda;
                let prev_acc = acc;
                let target = if t < b { None } else { Some(s_after) };
                if upper {
                    // s = ŝ + Γ with Γ nondecreasing
                    acc = match target {
                        None => acc.max(-one - hat),
                        Some(sa) => acc.max(sa - hat),
                    };
                    gp[t][k] = lambda * (acc - prev_acc);
                } else if lower {
                    // s = ŝ − Γ with Γ nondecreasing
                    acc = match target {
                        None => acc.max(hat - one),
                        Some(sa) => acc.max(hat - sa),
                    };
                    gm[t][k] = lambda * (acc - prev_acc);
                }
                if t < b {
                    let v = if upper {
                        hat + acc
                    } else if lower {
                        hat - acc
                    } else {
                        hat
                    };
                    s[t][k] = v;
                    s_recovered[t][k] = true;
                }
            }
            if b < n - 1 {
                s[b][k] = s_after;
            }
            a = b + 1;
        }
    }

    let report = kkt_report(grads, u, lambda, budget, bound, &s, &gm, &gp, non_unique);
    Ok(KktCertificate {
        s,
        s_recovered,
        gamma_minus: gm,
        gamma_plus: gp,
        report,
    })
}

/// Residuals of a candidate certificate.
#[allow(clippy::too_many_arguments)]
pub(crate) fn kkt_report<T: Scalar>(
    grads: &[Vec<T>],
    u: &[Vec<T>],
    lambda: T,
    budget: T,
    bound: Option<T>,
    s: &[Vec<T>],
    gm: &[Vec<T>],
    gp: &[Vec<T>],
    non_unique: bool,
) -> KktReport<T> {
    let zero = T::zero();
    let n = u.len();
    let d = u[0].len();
    let mut stat = zero;
    let mut sub = zero;
    let mut box_slack = zero;
    for k in 0..d {
        for t in 0..n {
            let cur = if t < n - 1 { s[t][k] } else { zero };
            let prev = if t > 0 { s[t - 1][k] } else { zero };
            let r = grads[t][k] - lambda * (cur - prev) - gm[t][k] + gp[t][k];
            stat = stat.max(r.abs());
            if t < n - 1 {
                sub = sub.max(cur.abs() - T::one());
            }
            if let Some(b) = bound {
                box_slack = box_slack
                    .max(gm[t][k] * (u[t][k] + b))
                    .max(gp[t][k] * (b - u[t][k]));
            }
        }
    }
    KktReport {
        stationarity_max_residual: stat,
        subgradient_violation: sub.max(zero),
        comp_slack_tv: lambda * (total_variation(u) - budget).abs(),
        comp_slack_box: box_slack.max(zero),
        s_non_unique: non_unique,
    }
}
