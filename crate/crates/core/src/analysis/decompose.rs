use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::Loss;
use crate::oracle::OracleSolution;
use crate::protocol::ExperimentTrace;
use crate::scalar::Scalar;

use super::partition::Partition;

/// Per-bin split of the dynamic regret against the oracle.
///
/// `t1 = Σ f_j(x_j) − f_j(pivot)`, `t2 = Σ f_j(pivot) − f_j(ū)`,
/// `t3 = Σ f_j(ū) − f_j(u_j)`; the pivot is the bin label mean for squared
/// losses and the gradient step `ū − (1/(n_i β))Σ∇f_j(ū)` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRow<T> {
    /// 1-based bin index.
    pub bin: usize,
    pub start: usize,
    pub end: usize,
    pub len: usize,
    pub tv: T,
    pub t1: T,
    pub t2: T,
    pub t3: T,
    pub bar_u: Vec<T>,
    /// Pivot point.
    pub dot_u: Vec<T>,
    /// `s_{i_t} − s_{i_s − 1}` with `s_0 = s_n = 0`.
    pub delta_s: Vec<T>,
    /// `Σ_j γ⁻_j − γ⁺_j` over the bin.
    pub gamma_net: Vec<T>,
}

impl<T: Scalar> DecompositionRow<T> {
    pub fn total(&self) -> T {
        self.t1 + self.t2 + self.t3
    }
}

/// `β` is only used for non-squared losses.
pub fn regret_decompose<T: Scalar>(
    trace: &ExperimentTrace<T>,
    oracle: &OracleSolution<T>,
    partition: &Partition<T>,
    losses: &[Loss<T>],
    beta: T,
) -> Result<Vec<DecompositionRow<T>>> {
    let n = losses.len();
    for got in [trace.len(), oracle.len(), partition.horizon] {
        if got != n {
            return Err(Error::HorizonMismatch { expected: n, got });
        }
    }
    if !partition.tiles() {
        return Err(Error::invalid("partition does not tile the horizon"));
    }
    let d = oracle.dim();
    let zero = T::zero();
    let s_at = |j: usize, k: usize| -> T {
        // 1-based s_j, zero at both ends
        if j == 0 || j >= n {
            zero
        } else {
            oracle.s[j - 1][k]
        }
    };

    let mut rows = Vec::with_capacity(partition.len());
    let mut g = vec![zero; d];
    for (i, bin) in partition.bins.iter().enumerate() {
        let range = bin.rows();
        let len = T::from_count(bin.len());
        let mut bar_u = vec![zero; d];
        for u in &oracle.u[range.clone()] {
            for (a, b) in bar_u.iter_mut().zip(u) {
                *a += *b;
            }
        }
        bar_u.iter_mut().for_each(|a| *a /= len);

        let squared = losses[range.clone()].iter().all(Loss::is_squared);
        let pivot = if squared {
            let mut ybar = vec![zero; d];
            for l in &losses[range.clone()] {
                for (a, y) in ybar.iter_mut().zip(l.label().unwrap_or(&[])) {
                    *a += *y;
                }
            }
            ybar.iter_mut().for_each(|a| *a /= len);
            ybar
        } else {
            let mut sum = vec![zero; d];
            for l in &losses[range.clone()] {
                l.gradient_into(&bar_u, &mut g);
                for (a, b) in sum.iter_mut().zip(&g) {
                    *a += *b;
                }
            }
            bar_u
                .iter()
                .zip(&sum)
                .map(|(u, s)| *u - *s / (len * beta))
                .collect()
        };

        let (mut t1, mut t2, mut t3) = (zero, zero, zero);
        for j in range.clone() {
            let l = &losses[j];
            let f_pivot = l.value_unchecked(&pivot);
            let f_bar = l.value_unchecked(&bar_u);
            t1 += l.value_unchecked(&trace.rounds[j].x) - f_pivot;
            if !squared {
                t2 += f_pivot - f_bar;
            }
            t3 += f_bar - l.value_unchecked(&oracle.u[j]);
        }
        if squared {
            // Σ(y−ȳ)² − (y−ū)² = −n_i‖ȳ − ū‖²
            let gap: T = pivot.iter().zip(&bar_u).map(|(a, b)| (*a - *b) * (*a - *b)).sum();
            t2 = -len * gap;
        }

        let delta_s = (0..d).map(|k| s_at(bin.end, k) - s_at(bin.start - 1, k)).collect();
        let mut gamma_net = vec![zero; d];
        for j in range {
            for (k, a) in gamma_net.iter_mut().enumerate() {
                *a += oracle.gamma_minus[j][k] - oracle.gamma_plus[j][k];
            }
        }
        rows.push(DecompositionRow {
            bin: i + 1,
            start: bin.start,
            end: bin.end,
            len: bin.len(),
            tv: bin.tv,
            t1,
            t2,
            t3,
            bar_u,
            dot_u: pivot,
            delta_s,
            gamma_net,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{build_partition, dynamic_regret};
    use crate::meta::{run_protocol, MetaKind, ProtocolConfig};
    use crate::learners::LearnerSpec;
    use crate::oracle::tv_constrained_solve;
    use crate::protocol::{ComparatorSequence, RoundRecord};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn instance(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<Loss<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<Vec<f64>> = (0..n)
            .map(|t| vec![if t < n / 3 { 0.4 } else { -0.3 } + rng.gen_range(-0.5..0.5)])
            .collect();
        let losses = y.iter().map(|r| Loss::squared(r.clone(), 1.0).unwrap()).collect();
        (y, losses)
    }

    #[test]
    fn identity_holds_for_squared_runs() {
        for seed in 0..5 {
            let (y, losses) = instance(seed, 400);
            let cfg = ProtocolConfig {
                learner: LearnerSpec::ftl(1.0, 1).unwrap(),
                meta: MetaKind::Flh,
                meta_zeta: 0.125,
            };
            let trace = run_protocol(&losses, &cfg).unwrap();
            let sol = tv_constrained_solve(&y, 1.0, 1.0).unwrap();
            let part = build_partition(&sol.u, 1.0);
            let rows = regret_decompose(&trace, &sol, &part, &losses, 2.0).unwrap();
            let total: f64 = rows.iter().map(DecompositionRow::total).sum();
            let cmp = ComparatorSequence::new(sol.u.clone()).unwrap();
            let regret = dynamic_regret(&trace, &cmp, &losses).unwrap();
            assert!((total - regret).abs() <= 1e-8 * regret.abs().max(1.0));
            assert!(rows.iter().all(|r| r.t2 <= 1e-12));
        }
    }

    #[test]
    fn oracle_predictions_give_zero_total() {
        let (y, losses) = instance(9, 120);
        let sol = tv_constrained_solve(&y, 0.8, 1.0).unwrap();
        let mut trace = ExperimentTrace::new();
        for (i, u) in sol.u.iter().enumerate() {
            trace
                .push(RoundRecord { t: i + 1, x: u.clone(), loss_value: 0.0, grad_norm: 0.0 })
                .unwrap();
        }
        let part = build_partition(&sol.u, 1.0);
        let rows = regret_decompose(&trace, &sol, &part, &losses, 2.0).unwrap();
        let total: f64 = rows.iter().map(DecompositionRow::total).sum();
        assert!(total.abs() < 1e-10);
        assert!(rows.iter().all(|r| r.t2 <= 0.0));
    }

    #[test]
    fn constant_oracle_has_no_t3() {
        let (y, losses) = instance(2, 50);
        let sol = tv_constrained_solve(&y, 0.0, 1.0).unwrap();
        let part = build_partition(&sol.u, 1.0);
        assert_eq!(part.len(), 1);
        let trace = run_protocol(
            &losses,
            &ProtocolConfig {
                learner: LearnerSpec::ftl(1.0, 1).unwrap(),
                meta: MetaKind::None,
                meta_zeta: 0.125,
            },
        )
        .unwrap();
        let rows = regret_decompose(&trace, &sol, &part, &losses, 2.0).unwrap();
        assert!(rows[0].t3.abs() < 1e-12);
    }

    #[test]
    fn horizon_mismatch_is_reported() {
        let (y, losses) = instance(1, 30);
        let sol = tv_constrained_solve(&y, 0.5, 1.0).unwrap();
        let part = build_partition(&sol.u, 1.0);
        let trace = ExperimentTrace::new();
        assert!(matches!(
            regret_decompose(&trace, &sol, &part, &losses, 2.0),
            Err(Error::HorizonMismatch { .. })
        ));
    }
}
