use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Least-squares line through `(ln n, ln regret)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
    /// Points used after dropping non-positive regrets.
    pub used: usize,
}

pub fn fit_scaling_exponent<T: Scalar>(points: &[(T, T)]) -> Result<ScalingFit<T>> {
    let kept: Vec<(T, T)> = points
        .iter()
        .filter(|(n, r)| {
            let ok = *n > T::zero() && *r > T::zero() && n.is_finite() && r.is_finite();
            if !ok {
                log::warn!("dropping point ({n}, {r}) from the scaling fit");
            }
            ok
        })
        .map(|(n, r)| (n.ln(), r.ln()))
        .collect();
    if kept.len() < 3 {
        return Err(Error::invalid(format!(
            "scaling fit needs at least 3 positive points, got {}",
            kept.len()
        )));
    }
    let m = T::from_count(kept.len());
    let mx = kept.iter().map(|p| p.0).sum::<T>() / m;
    let my = kept.iter().map(|p| p.1).sum::<T>() / m;
    let sxx: T = kept.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: T = kept.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: T = kept.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx <= T::zero() {
        return Err(Error::invalid("scaling fit needs at least two distinct abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > T::zero() {
        (sxy * sxy) / (sxx * syy)
    } else {
        T::one()
    };
    Ok(ScalingFit {
        slope,
        intercept,
        r_squared,
        used: kept.len(),
    })
}
