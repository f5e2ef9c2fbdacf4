//! Loss functions revealed by the adversary and their curvature constants.
//!
//! Two families are supported. Squared losses `f_t(x) = ‖y_t − x‖²` (the
//! online TV-denoising setting) and generalized linear losses
//! `f_t(x) = g(v_tᵀx)` with a convex scalar link `g`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, l1_norm, l2_norm, Scalar};

/// Convex scalar link `g` of a generalized linear loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "link", rename_all = "snake_case")]
pub enum GlmLink<T> {
    /// `g(u) = (u − target)²`
    Square { target: T },
    /// `g(u) = ln(1 + exp(−label·u))`, label in {−1, +1}
    Logistic { label: T },
    /// `g(u) = exp(u) − count·u`
    Poisson { count: T },
}

fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl<T: Scalar> GlmLink<T> {
    pub fn value(&self, u: T) -> T {
        match *self {
            GlmLink::Square { target } => (u - target) * (u - target),
            GlmLink::Logistic { label } => softplus(-label * u),
            GlmLink::Poisson { count } => u.exp() - count * u,
        }
    }

    pub fn first_derivative(&self, u: T) -> T {
        match *self {
            GlmLink::Square { target } => T::two() * (u - target),
            GlmLink::Logistic { label } => -label * sigmoid(-label * u),
            GlmLink::Poisson { count } => u.exp() - count,
        }
    }

    pub fn second_derivative(&self, u: T) -> T {
        match *self {
            GlmLink::Square { .. } => T::two(),
            GlmLink::Logistic { label } => {
                let s = sigmoid(label * u);
                label * label * s * (T::one() - s)
            }
            GlmLink::Poisson { .. } => u.exp(),
        }
    }

    /// Bounds over `|u| ≤ u_max`: `(sup |g'|, sup g'', inf g'')`.
    pub fn derivative_bounds(&self, u_max: T) -> (T, T, T) {
        let d1 = self
            .first_derivative(u_max)
            .abs()
            .max(self.first_derivative(-u_max).abs());
        match *self {
            GlmLink::Square { .. } => (d1, T::two(), T::two()),
            GlmLink::Logistic { .. } => {
                // g'' peaks at u = 0 and decreases in |u|
                let peak = self.second_derivative(T::zero());
                let low = self.second_derivative(u_max).min(self.second_derivative(-u_max));
                (d1, peak, low)
            }
            GlmLink::Poisson { .. } => (d1, u_max.exp(), (-u_max).exp()),
        }
    }
}

/// A loss function `f_t` revealed at one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Loss<T> {
    /// `‖label − x‖₂²` with `‖label‖∞ ≤ bound`.
    Squared { label: Vec<T>, bound: T },
    /// `g(featuresᵀx)`.
    Glm { link: GlmLink<T>, features: Vec<T> },
}

impl<T: Scalar> Loss<T> {
    pub fn squared(label: Vec<T>, bound: T) -> Result<Self> {
        if !(bound > T::zero()) {
            return Err(Error::invalid("squared loss bound must be positive"));
        }
        if label.is_empty() {
            return Err(Error::invalid("squared loss label must be non-empty"));
        }
        if let Some(v) = label.iter().find(|v| !(v.abs() <= bound)) {
            return Err(Error::invalid(format!(
                "label {v} outside [-{bound}, {bound}]"
            )));
        }
        Ok(Loss::Squared { label, bound })
    }

    pub fn glm(link: GlmLink<T>, features: Vec<T>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::invalid("glm feature vector must be non-empty"));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("glm features".into()));
        }
        Ok(Loss::Glm { link, features })
    }

    pub fn dim(&self) -> usize {
        match self {
            Loss::Squared { label, .. } => label.len(),
            Loss::Glm { features, .. } => features.len(),
        }
    }

    pub fn is_squared(&self) -> bool {
        matches!(self, Loss::Squared { .. })
    }

    pub fn label(&self) -> Option<&[T]> {
        match self {
            Loss::Squared { label, .. } => Some(label),
            Loss::Glm { .. } => None,
        }
    }

    #[inline]
    fn check(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `f_t(x)`.
    pub fn value(&self, x: &[T]) -> Result<T> {
        self.check(x)?;
        Ok(self.value_unchecked(x))
    }

    #[inline]
    pub(crate) fn value_unchecked(&self, x: &[T]) -> T {
        match self {
            Loss::Squared { label, .. } => label
                .iter()
                .zip(x)
                .map(|(y, v)| (*y - *v) * (*y - *v))
                .sum(),
            Loss::Glm { link, features } => link.value(dot(features, x)),
        }
    }

    /// `∇f_t(x)`.
    pub fn gradient(&self, x: &[T]) -> Result<Vec<T>> {
        self.check(x)?;
        let mut out = vec![T::zero(); x.len()];
        self.gradient_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn gradient_into(&self, x: &[T], out: &mut [T]) {
        match self {
            Loss::Squared { label, .. } => {
                for ((o, y), v) in out.iter_mut().zip(label).zip(x) {
                    *o = T::two() * (*v - *y);
                }
            }
            Loss::Glm { link, features } => {
                let s = link.first_derivative(dot(features, x));
                for (o, f) in out.iter_mut().zip(features) {
                    *o = s * *f;
                }
            }
        }
    }

    /// Dense Hessian `∇²f_t(x)` as rows.
    pub fn hessian(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        self.check(x)?;
        let d = x.len();
        Ok(match self {
            Loss::Squared { .. } => (0..d)
                .map(|i| {
                    let mut row = vec![T::zero(); d];
                    row[i] = T::two();
                    row
                })
                .collect(),
            Loss::Glm { link, features } => {
                let c = link.second_derivative(dot(features, x));
                features
                    .iter()
                    .map(|a| features.iter().map(|b| c * *a * *b).collect())
                    .collect()
            }
        })
    }

    /// Upper bound on the gradient-Lipschitz constant over `‖x‖∞ ≤ half_width`.
    pub fn smoothness(&self, half_width: T) -> T {
        match self {
            Loss::Squared { .. } => T::two(),
            Loss::Glm { link, features } => {
                let u_max = l1_norm(features) * half_width;
                let (_, b, _) = link.derivative_bounds(u_max);
                b * dot(features, features)
            }
        }
    }
}

/// Curvature and Lipschitz constants of a loss family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureParams<T> {
    /// Lipschitz bound `G` on the comparator box `D⁻`.
    pub lipschitz: T,
    /// Lipschitz bound `G†` on the learner box `D`.
    pub lipschitz_dagger: T,
    /// Exp-concavity modulus `α`.
    pub alpha: T,
    /// Strong-smoothness modulus `β ≥ 1`.
    pub beta: T,
    /// Strong-convexity modulus `H` (zero when absent).
    pub strong_convexity: T,
    /// Half-width `B` of the comparator box.
    pub bound: T,
}

impl<T: Scalar> CurvatureParams<T> {
    pub fn validate(&self) -> Result<()> {
        let p = self;
        let finite = [
            p.lipschitz,
            p.lipschitz_dagger,
            p.alpha,
            p.beta,
            p.strong_convexity,
            p.bound,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("curvature parameters".into()));
        }
        if !(p.bound > T::zero()) {
            return Err(Error::invalid("B must be positive"));
        }
        if p.lipschitz > p.lipschitz_dagger {
            return Err(Error::invalid("G must not exceed G†"));
        }
        if p.beta < T::one() {
            return Err(Error::invalid("β must be at least 1"));
        }
        if p.alpha < T::zero() || p.strong_convexity < T::zero() || p.lipschitz < T::zero() {
            return Err(Error::invalid("α, H and G must be non-negative"));
        }
        Ok(())
    }

    /// Constants of `(y − x)²` with `|y| ≤ B`: `G = 4B` on `[−B, B]`,
    /// `α = 1/(8B²)`, `β = H = 2`, and `G† = 2(2B + G)` on `[−(B+G), B+G]`.
    pub fn squared(bound: T) -> Result<Self> {
        let four = T::lit(4.0);
        let g = four * bound;
        let p = Self {
            lipschitz: g,
            lipschitz_dagger: T::two() * (T::two() * bound + g),
            alpha: T::one() / (T::lit(8.0) * bound * bound),
            beta: T::two(),
            strong_convexity: T::two(),
            bound,
        };
        p.validate()?;
        Ok(p)
    }

    /// Half-width `B + G` of the learner box.
    pub fn learner_half_width(&self) -> T {
        self.bound + self.lipschitz
    }

    /// ONS parameter `min{1/(4G†(2B√d + 2G/β)), α}`.
    pub fn ons_zeta(&self, dim: usize) -> T {
        let four = T::lit(4.0);
        let root_d = T::from_count(dim).sqrt();
        let denom = four
            * self.lipschitz_dagger
            * (T::two() * self.bound * root_d + T::two() * self.lipschitz / self.beta);
        (T::one() / denom).min(self.alpha)
    }
}

/// Link-derivative bounds of a generalized linear model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlmConstants<T> {
    /// `R ≥ ‖v_t‖₂`.
    pub radius: T,
    /// `a ≥ |g'|` on `D⁻`.
    pub a: T,
    /// `a⁺ ≥ |g'|` on `D`.
    pub a_plus: T,
    /// `b ≥ g''` on `D`.
    pub b: T,
    /// `0 < c ≤ g''` on `D`.
    pub c: T,
}

/// Curvature constants of `f_t(x) = g(v_tᵀx)`: `G = aR`, `β = bR²` (floored
/// at 1), `α = c/(a⁺)²` and `G† = Ra⁺`.
pub fn glm_curvature<T: Scalar>(k: GlmConstants<T>, bound: T) -> Result<CurvatureParams<T>> {
    let all = [k.radius, k.a, k.a_plus, k.b, k.c, bound];
    if all.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
        return Err(Error::invalid(
            "glm constants R, a, a⁺, b, c and B must be positive and finite",
        ));
    }
    if k.c > k.b {
        return Err(Error::invalid("glm constants require c ≤ b"));
    }
    if k.a > k.a_plus {
        return Err(Error::invalid("glm constants require a ≤ a⁺"));
    }
    let p = CurvatureParams {
        lipschitz: k.a * k.radius,
        lipschitz_dagger: k.radius * k.a_plus,
        alpha: k.c / (k.a_plus * k.a_plus),
        beta: (k.b * k.radius * k.radius).max(T::one()),
        strong_convexity: T::zero(),
        bound,
    };
    p.validate()?;
    Ok(p)
}

/// Measures [`GlmConstants`] for a concrete stream of glm losses with
/// comparator half-width `bound`. The learner box half-width `B + aR` depends
/// on `a`, so `a` is measured on `D⁻` first.
pub fn fit_glm_constants<T: Scalar>(losses: &[Loss<T>], bound: T) -> Result<GlmConstants<T>> {
    let mut radius = T::zero();
    let mut a = T::zero();
    for loss in losses {
        let Loss::Glm { link, features } = loss else {
            return Err(Error::invalid("fit_glm_constants requires glm losses"));
        };
        radius = radius.max(l2_norm(features));
        let (d1, _, _) = link.derivative_bounds(l1_norm(features) * bound);
        a = a.max(d1);
    }
    if losses.is_empty() {
        return Err(Error::invalid("empty loss stream"));
    }
    let outer = bound + a * radius;
    let (mut a_plus, mut b, mut c) = (a, T::zero(), T::infinity());
    for loss in losses {
        if let Loss::Glm { link, features } = loss {
            let (d1, hi, lo) = link.derivative_bounds(l1_norm(features) * outer);
            a_plus = a_plus.max(d1);
            b = b.max(hi);
            c = c.min(lo);
        }
    }
    Ok(GlmConstants {
        radius,
        a,
        a_plus,
        b,
        c,
    })
}
