//! Criterion functions `c(f, y)` with their gradients, Hessians, symmetric
//! Hessian factorizations, and label sampling from the induced likelihood.

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::noise::LabelNoise;
use crate::tensor::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// `½‖f - y‖²`, Gaussian likelihood with unit covariance.
    SquareLoss,
    /// `-log softmax(f)[y]`, categorical likelihood.
    SoftmaxCrossEntropy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    Sum,
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LossConfig {
    pub criterion: Criterion,
    pub reduction: Reduction,
}

impl LossConfig {
    pub fn new(criterion: Criterion, reduction: Reduction) -> Self {
        Self {
            criterion,
            reduction,
        }
    }

    pub fn mse(reduction: Reduction) -> Self {
        Self::new(Criterion::SquareLoss, reduction)
    }

    pub fn cross_entropy(reduction: Reduction) -> Self {
        Self::new(Criterion::SoftmaxCrossEntropy, reduction)
    }

    pub fn with_reduction(self, reduction: Reduction) -> Self {
        Self { reduction, ..self }
    }

    /// Factor `R` such that the empirical risk is `R Σₙ c(fₙ, yₙ)`.
    ///
    /// Square loss: `Sum → 2`, `Mean → 2/(N·dim(Y))`, matching a sum or mean
    /// of squared errors with the `½` in `c`. Cross-entropy: `Sum → 1`,
    /// `Mean → 1/N` (class labels have `dim(Y) = 1`).
    pub fn reduction_factor(&self, n: usize, dim_y: usize) -> f64 {
        let n = n.max(1) as f64;
        match (self.criterion, self.reduction) {
            (Criterion::SquareLoss, Reduction::Sum) => 2.0,
            (Criterion::SquareLoss, Reduction::Mean) => 2.0 / (n * dim_y.max(1) as f64),
            (Criterion::SoftmaxCrossEntropy, Reduction::Sum) => 1.0,
            (Criterion::SoftmaxCrossEntropy, Reduction::Mean) => 1.0 / n,
        }
    }

    /// `dim(Y)` used by the reduction factor for predictions of size `dim_f`.
    pub fn label_dim(&self, dim_f: usize) -> usize {
        match self.criterion {
            Criterion::SquareLoss => dim_f,
            Criterion::SoftmaxCrossEntropy => 1,
        }
    }

    pub fn value(&self, f: &[f64], y: &Label) -> Result<f64> {
        match self.criterion {
            Criterion::SquareLoss => {
                let t = y.target(f.len())?;
                Ok(0.5 * f.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
            }
            Criterion::SoftmaxCrossEntropy => {
                let k = y.class(f.len())?;
                Ok(-log_softmax(f)[k])
            }
        }
    }

    /// `∇_f c(f, y)`
    pub fn gradient(&self, f: &[f64], y: &Label) -> Result<Vec<f64>> {
        match self.criterion {
            Criterion::SquareLoss => {
                let t = y.target(f.len())?;
                Ok(f.iter().zip(t).map(|(a, b)| a - b).collect())
            }
            Criterion::SoftmaxCrossEntropy => {
                let k = y.class(f.len())?;
                let mut g = softmax(f);
                g[k] -= 1.0;
                Ok(g)
            }
        }
    }

    /// `∇²_f c(f, y)`. Validates `y` but never depends on its value.
    pub fn hessian(&self, f: &[f64], y: &Label) -> Result<Matrix> {
        match self.criterion {
            Criterion::SquareLoss => {
                y.target(f.len())?;
            }
            Criterion::SoftmaxCrossEntropy => {
                y.class(f.len())?;
            }
        }
        Ok(self.hessian_at(f))
    }

    /// Label-free Hessian.
    pub fn hessian_at(&self, f: &[f64]) -> Matrix {
        match self.criterion {
            Criterion::SquareLoss => Matrix::identity(f.len()),
            Criterion::SoftmaxCrossEntropy => {
                let p = softmax(f);
                Matrix::from_fn(p.len(), p.len(), |i, j| {
                    let d = if i == j { p[i] } else { 0.0 };
                    d - p[i] * p[j]
                })
            }
        }
    }

    /// `S` with `S Sᵀ = ∇²_f c`: `I` for square loss,
    /// `diag(√σ) - σ √σᵀ` for softmax cross-entropy.
    pub fn hessian_factorization(&self, f: &[f64]) -> Matrix {
        match self.criterion {
            Criterion::SquareLoss => Matrix::identity(f.len()),
            Criterion::SoftmaxCrossEntropy => {
                let p = softmax(f);
                let sq: Vec<f64> = p.iter().map(|x| x.sqrt()).collect();
                Matrix::from_fn(p.len(), p.len(), |i, j| {
                    let d = if i == j { sq[j] } else { 0.0 };
                    d - p[i] * sq[j]
                })
            }
        }
    }

    /// Draws `y ~ r(y | f)`: `f + ε` with `ε ~ N(0, I)` for square loss,
    /// a class from `softmax(f)` by inverse CDF for cross-entropy.
    pub fn sample_label(&self, f: &[f64], noise: &mut impl LabelNoise) -> Label {
        match self.criterion {
            Criterion::SquareLoss => {
                Label::Target(f.iter().map(|m| m + noise.standard_normal()).collect())
            }
            Criterion::SoftmaxCrossEntropy => {
                let u = noise.uniform();
                let p = softmax(f);
                let mut acc = 0.0;
                for (k, pk) in p.iter().enumerate() {
                    acc += pk;
                    if u < acc {
                        return Label::Class(k);
                    }
                }
                // rounding left the total just below 1
                Label::Class(p.iter().rposition(|&pk| pk > 0.0).unwrap_or(0))
            }
        }
    }
}

/// Regression target or 0-based class index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Target(Vec<f64>),
    Class(usize),
}

impl Label {
    fn target(&self, dim: usize) -> Result<&[f64]> {
        match self {
            Label::Target(t) if t.len() == dim => Ok(t),
            Label::Target(t) => Err(dim_err(format!(
                "target of length {} for prediction of length {dim}",
                t.len()
            ))),
            Label::Class(_) => Err(Error::InvalidLabel(
                "square loss needs a regression target, got a class index".into(),
            )),
        }
    }

    fn class(&self, num_classes: usize) -> Result<usize> {
        match *self {
            Label::Class(k) if k < num_classes => Ok(k),
            Label::Class(k) => Err(Error::InvalidLabel(format!(
                "class {k} out of range for {num_classes} classes"
            ))),
            Label::Target(_) => Err(Error::InvalidLabel(
                "cross-entropy needs a class index, got a regression target".into(),
            )),
        }
    }

    pub fn onehot(&self, num_classes: usize) -> Result<Vec<f64>> {
        let k = self.class(num_classes)?;
        let mut v = vec![0.0; num_classes];
        v[k] = 1.0;
        Ok(v)
    }
}

pub fn log_softmax(f: &[f64]) -> Vec<f64> {
    let max = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + f.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    f.iter().map(|x| x - lse).collect()
}

pub fn softmax(f: &[f64]) -> Vec<f64> {
    let max = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = f.iter().map(|x| (x - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}
