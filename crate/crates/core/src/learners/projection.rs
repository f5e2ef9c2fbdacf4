use crate::error::{Error, Result};
use crate::protocol::DecisionBox;
use crate::scalar::Scalar;

use super::linalg::Matrix;

/// Coordinate descent tolerance on the scaled KKT residual.
pub const PROJECTION_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100_000;

/// Scaled KKT residual of `min_{y∈box} (y−z)ᵀA(y−z)` at `y`.
///
/// Per coordinate this is the size of the projected coordinate-Newton step
/// `|clamp(y_k − r_k/A_kk) − y_k|` with `r = A(y − z)`: zero exactly when the
/// partial derivative vanishes or `y_k` sits on a face with the derivative
/// pointing outward.
pub fn projection_residual<T: Scalar>(a: &Matrix<T>, z: &[T], y: &[T], bx: &DecisionBox<T>) -> T {
    let diff: Vec<T> = y.iter().zip(z).map(|(p, q)| *p - *q).collect();
    let r = a.mul_vec(&diff);
    (0..y.len()).fold(T::zero(), |worst, k| {
        let step = bx.clamp_scalar(y[k] - r[k] / a[(k, k)]) - y[k];
        worst.max(step.abs())
    })
}

/// Generalized projection `argmin_{y ∈ box} (y−z)ᵀA(y−z)` by cyclic
/// coordinate descent, warm-started at `clamp(z)`.
pub fn generalized_projection<T: Scalar>(
    a: &Matrix<T>,
    z: &[T],
    bx: &DecisionBox<T>,
) -> Result<Vec<T>> {
    let d = bx.dim;
    bx.check_dim(z)?;
    if a.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: a.dim(),
        });
    }
    let mut y: Vec<T> = z.to_vec();
    bx.clamp_in_place(&mut y);
    if bx.contains(z) {
        return Ok(y);
    }
    if (0..d).any(|k| !(a[(k, k)] > T::zero())) {
        return Err(Error::Numerical("projection matrix has non-positive diagonal".into()));
    }
    // r = A(y − z), maintained incrementally
    let diff: Vec<T> = y.iter().zip(z).map(|(p, q)| *p - *q).collect();
    let mut r = a.mul_vec(&diff);
    let tol = T::lit(PROJECTION_TOL);
    let mut residual = T::infinity();
    for _ in 0..MAX_SWEEPS {
        residual = T::zero();
        for k in 0..d {
            let next = bx.clamp_scalar(y[k] - r[k] / a[(k, k)]);
            let delta = next - y[k];
            if delta != T::zero() {
                residual = residual.max(delta.abs());
                y[k] = next;
                let row = a.row(k);
                for (ri, aik) in r.iter_mut().zip(row) {
                    *ri += delta * *aik;
                }
            }
        }
        if residual <= tol {
            return Ok(y);
        }
    }
    Err(Error::NoConvergence {
        what: "generalized projection",
        iterations: MAX_SWEEPS,
        residual: residual.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interior_point_is_fixed() {
        let a = Matrix::scaled_identity(2, 3.0);
        let bx = DecisionBox::new(1.0, 2).unwrap();
        let z = [0.3, -0.9];
        assert_eq!(generalized_projection(&a, &z, &bx).unwrap(), z.to_vec());
    }

    #[test]
    fn identity_metric_clamps() {
        let a = Matrix::scaled_identity(3, 1.0);
        let bx = DecisionBox::new(1.0, 3).unwrap();
        let y = generalized_projection(&a, &[2.0, -0.5, -7.0], &bx).unwrap();
        assert_eq!(y, vec![1.0, -0.5, -1.0]);
    }

    #[test]
    fn diagonal_metric_is_separable() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 100.0]]).unwrap();
        let bx = DecisionBox::new(1.0, 2).unwrap();
        let y: Vec<f64> = generalized_projection(&a, &[2.0, 0.0], &bx).unwrap();
        assert_eq!(y, vec![1.0, 0.0]);
    }

    #[test]
    fn correlated_metric_moves_free_coordinate() {
        // z = (2, 0) with strong coupling: the free coordinate follows the
        // clamped one to reduce the quadratic form.
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let bx = DecisionBox::new(1.0, 2).unwrap();
        let y: Vec<f64> = generalized_projection(&a, &[2.0, 0.0], &bx).unwrap();
        assert_eq!(y[0], 1.0);
        // ∂/∂y₂ = 2(A(y−z))₂ = 2((y₁−2) + 2y₂) = 0 ⇒ y₂ = 1/2
        assert!((y[1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn random_projections_satisfy_kkt() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let d = rng.gen_range(1..6);
            let mut a = Matrix::scaled_identity(d, 0.1);
            for _ in 0..d + 2 {
                let g: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
                a.add_outer(&g, 1.0);
            }
            let z: Vec<f64> = (0..d).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let bx = DecisionBox::new(1.0, d).unwrap();
            let y = generalized_projection(&a, &z, &bx).unwrap();
            assert!(bx.contains(&y));
            assert!(projection_residual(&a, &z, &y, &bx) <= 1e-8);
        }
    }
}
