use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::ComparatorSequence;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    /// Uniform on `[−sigma, sigma]`.
    Uniform { sigma: f64 },
    /// Gaussian with standard deviation `sigma`, resampled until `|ε| ≤ clip`.
    TruncatedGaussian { sigma: f64, clip: f64 },
}

impl NoiseKind {
    /// Largest possible `|ε|`.
    pub fn magnitude(&self) -> f64 {
        match *self {
            NoiseKind::Uniform { sigma } => sigma,
            NoiseKind::TruncatedGaussian { clip, .. } => clip,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub seed: u64,
}

/// Labels `y_t = w_t + ε_t` with i.i.d. entries of ε, kept inside
/// `[−bound, bound]`. The noise magnitude must fit in the headroom
/// `bound − ‖w‖∞`.
pub fn gen_labels<T: Scalar>(w: &ComparatorSequence<T>, noise: &NoiseSpec, bound: T) -> Result<Vec<Vec<T>>> {
    let m = noise.kind.magnitude();
    let valid = match noise.kind {
        NoiseKind::Uniform { sigma } => sigma >= 0.0 && sigma.is_finite(),
        NoiseKind::TruncatedGaussian { sigma, clip } => {
            sigma >= 0.0 && sigma.is_finite() && clip >= 0.0 && clip.is_finite()
        }
    };
    if !valid {
        return Err(Error::invalid(format!("invalid noise {:?}", noise.kind)));
    }
    let headroom = (bound - w.max_abs()).as_f64();
    if m > headroom + 1e-12 * bound.as_f64() {
        return Err(Error::invalid(format!(
            "noise magnitude {m} exceeds headroom {headroom} = bound − max|w|"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let normal = match noise.kind {
        NoiseKind::TruncatedGaussian { sigma, .. } if sigma > 0.0 => {
            Some(Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?)
        }
        _ => None,
    };
    let mut draw = || -> f64 {
        match noise.kind {
            NoiseKind::Uniform { sigma } if sigma > 0.0 => rng.gen_range(-sigma..=sigma),
            NoiseKind::TruncatedGaussian { clip, .. } => match &normal {
                Some(dist) if clip > 0.0 => loop {
                    let e = dist.sample(&mut rng);
                    if e.abs() <= clip {
                        break e;
                    }
                },
                _ => 0.0,
            },
            _ => 0.0,
        }
    };
    Ok(w.w
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| (*v + T::lit(draw())).max(-bound).min(bound))
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(n: usize, v: f64) -> ComparatorSequence<f64> {
        ComparatorSequence::new(vec![vec![v]; n]).unwrap()
    }

    #[test]
    fn zero_noise_returns_comparator() {
        let w = ComparatorSequence::new(vec![vec![0.1, -0.2], vec![0.3, 0.4]]).unwrap();
        let y = gen_labels(&w, &NoiseSpec { kind: NoiseKind::Uniform { sigma: 0.0 }, seed: 1 }, 1.0).unwrap();
        assert_eq!(y, w.w);
    }

    #[test]
    fn uniform_noise_is_centered() {
        let n = 1_000_000;
        let sigma = 0.5;
        let y = gen_labels(&flat(n, 0.0), &NoiseSpec { kind: NoiseKind::Uniform { sigma }, seed: 2 }, 1.0).unwrap();
        let mean = y.iter().map(|r| r[0]).sum::<f64>() / n as f64;
        // σ of U[−a, a] is a/√3
        let sd = sigma / 3f64.sqrt();
        assert!(mean.abs() <= 3.0 * sd / (n as f64).sqrt());
        assert!(y.iter().all(|r| r[0].abs() <= sigma));
    }

    #[test]
    fn labels_stay_in_box() {
        let w = flat(5000, 0.7);
        let spec = NoiseSpec { kind: NoiseKind::TruncatedGaussian { sigma: 0.2, clip: 0.3 }, seed: 3 };
        let y = gen_labels(&w, &spec, 1.0).unwrap();
        assert!(y.iter().all(|r| r[0].abs() <= 1.0 && (r[0] - 0.7).abs() <= 0.3));
    }

    #[test]
    fn headroom_violation_rejected() {
        let spec = NoiseSpec { kind: NoiseKind::Uniform { sigma: 0.5 }, seed: 0 };
        assert!(gen_labels(&flat(10, 0.8), &spec, 1.0).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = NoiseSpec { kind: NoiseKind::TruncatedGaussian { sigma: 0.1, clip: 0.2 }, seed: 8 };
        let a = gen_labels(&flat(100, 0.0), &spec, 1.0).unwrap();
        let b = gen_labels(&flat(100, 0.0), &spec, 1.0).unwrap();
        assert_eq!(a, b);
    }
}
