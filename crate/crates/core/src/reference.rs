//! Closed-form Rosenbrock example `f_α(x) = (1 - x₁)² + α(x₂ - x₁²)²`,
//! written as `g ∘ h_α` with `h_α(x) = (1 - x₁, √α (x₂ - x₁²))` and
//! `g(h) = hᵀh`.
//!
//! `g` has no `½`, so the closed forms carry a factor 2 relative to
//! `Jᵀ J`. The generic-machinery adapters express `g` as square loss with
//! sum reduction (`R = 2`), which reproduces the same factor.

use crate::curvature::{fd_hessian, ggn_from_jacobians};
use crate::error::{Error, Result};
use crate::losses::{Label, LossConfig, Reduction};
use crate::tensor::Matrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RosenbrockParams {
    alpha: f64,
    pub anchor: [f64; 2],
}

impl RosenbrockParams {
    pub fn new(alpha: f64, anchor: [f64; 2]) -> Result<Self> {
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(Error::Unsupported(format!(
                "Rosenbrock needs alpha > 0, got {alpha}"
            )));
        }
        Ok(Self { alpha, anchor })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn value(&self) -> f64 {
        rosenbrock_value(self.anchor, self.alpha)
    }

    pub fn ggn(&self) -> Matrix {
        rosenbrock_ggn(self.anchor, self.alpha)
    }

    pub fn hessian(&self) -> Matrix {
        rosenbrock_hessian(self.anchor, self.alpha)
    }
}

pub fn rosenbrock_value(x: [f64; 2], alpha: f64) -> f64 {
    (1.0 - x[0]).powi(2) + alpha * (x[1] - x[0] * x[0]).powi(2)
}

pub fn rosenbrock_h(x: [f64; 2], alpha: f64) -> [f64; 2] {
    [1.0 - x[0], alpha.sqrt() * (x[1] - x[0] * x[0])]
}

pub fn rosenbrock_h_jacobian(x: [f64; 2], alpha: f64) -> Matrix {
    let s = alpha.sqrt();
    Matrix::from_rows(&[[-1.0, 0.0], [-2.0 * s * x[0], s]]).expect("2x2")
}

/// `2 [[1 + 4αx̂₁², -2αx̂₁], [-2αx̂₁, α]]`
pub fn rosenbrock_ggn(anchor: [f64; 2], alpha: f64) -> Matrix {
    let x1 = anchor[0];
    let off = -2.0 * alpha * x1;
    Matrix::from_rows(&[[1.0 + 4.0 * alpha * x1 * x1, off], [off, alpha]])
        .expect("2x2")
        .scale(2.0)
}

/// `2 [[1 + 6αx̂₁² - 2αx̂₂, -2αx̂₁], [-2αx̂₁, α]]`
pub fn rosenbrock_hessian(anchor: [f64; 2], alpha: f64) -> Matrix {
    let [x1, x2] = anchor;
    let off = -2.0 * alpha * x1;
    Matrix::from_rows(&[
        [1.0 + 6.0 * alpha * x1 * x1 - 2.0 * alpha * x2, off],
        [off, alpha],
    ])
    .expect("2x2")
    .scale(2.0)
}

const SQUARE_SUM: LossConfig = LossConfig {
    criterion: crate::losses::Criterion::SquareLoss,
    reduction: Reduction::Sum,
};

/// GGN through the generic assembly: `h_α` supplies the Jacobian, `g` is
/// the square loss against a zero target with its sum reduction factor.
pub fn rosenbrock_ggn_generic(anchor: [f64; 2], alpha: f64) -> Result<Matrix> {
    let h = rosenbrock_h(anchor, alpha);
    let hess = SQUARE_SUM.hessian(&h, &Label::Target(vec![0.0; 2]))?;
    let r = SQUARE_SUM.reduction_factor(1, 2);
    ggn_from_jacobians(&[rosenbrock_h_jacobian(anchor, alpha)], &[hess], r)
}

/// Gradient `R Jᵀ ∇c(h(x), 0)` of the same composite.
pub fn rosenbrock_gradient(x: [f64; 2], alpha: f64) -> Result<Vec<f64>> {
    let h = rosenbrock_h(x, alpha);
    let g = SQUARE_SUM.gradient(&h, &Label::Target(vec![0.0; 2]))?;
    let r = SQUARE_SUM.reduction_factor(1, 2);
    Ok(rosenbrock_h_jacobian(x, alpha)
        .tr_matvec(&g)?
        .into_iter()
        .map(|v| r * v)
        .collect())
}

/// Hessian by central differences of [`rosenbrock_gradient`].
pub fn rosenbrock_hessian_fd(anchor: [f64; 2], alpha: f64) -> Result<Matrix> {
    fd_hessian(|t| rosenbrock_gradient([t[0], t[1]], alpha), &anchor)
}
