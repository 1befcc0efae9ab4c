use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Result};
use crate::tensor::{FlattenOrder, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative at `x`. ReLU uses 0 at the kink.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Activation::Identity => 1.0,
        }
    }

    /// Twice continuously differentiable everywhere.
    pub fn is_smooth(self) -> bool {
        !matches!(self, Activation::Relu)
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Affine layer `z = W x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    weight: Matrix,
    bias: Option<Vec<f64>>,
}

impl Linear {
    pub fn new(weight: Matrix, bias: Option<Vec<f64>>) -> Result<Self> {
        if let Some(b) = &bias {
            if b.len() != weight.rows() {
                return Err(dim_err(format!(
                    "bias of length {} for weight with {} rows",
                    b.len(),
                    weight.rows()
                )));
            }
        }
        Ok(Self { weight, bias })
    }

    /// Splits a combined `[W b]` matrix (bias in the last column).
    pub fn from_combined(combined: &Matrix, with_bias: bool) -> Result<Self> {
        if !with_bias {
            return Self::new(combined.clone(), None);
        }
        if combined.cols() == 0 {
            return Err(dim_err("combined weight needs a bias column"));
        }
        let d_in = combined.cols() - 1;
        let weight = combined.block(0, 0, combined.rows(), d_in)?;
        let bias = combined.col(d_in);
        Self::new(weight, Some(bias))
    }

    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    pub fn bias(&self) -> Option<&[f64]> {
        self.bias.as_deref()
    }

    pub fn has_bias(&self) -> bool {
        self.bias.is_some()
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    /// Columns of the combined parameter matrix `W̃`.
    pub fn augmented_in_dim(&self) -> usize {
        self.in_dim() + usize::from(self.has_bias())
    }

    pub fn param_count(&self) -> usize {
        self.out_dim() * self.augmented_in_dim()
    }

    /// `W̃ = [W b]`, or `W` without bias.
    pub fn combined(&self) -> Matrix {
        match &self.bias {
            None => self.weight.clone(),
            Some(b) => Matrix::from_fn(self.out_dim(), self.in_dim() + 1, |i, j| {
                if j < self.in_dim() {
                    self.weight[(i, j)]
                } else {
                    b[i]
                }
            }),
        }
    }

    /// `x̃ = [x; 1]` when the layer has a bias.
    pub fn augment(&self, x: &[f64]) -> Vec<f64> {
        augment_input(x, self.has_bias())
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.weight.matvec(x).expect("input dim checked by caller");
        if let Some(b) = &self.bias {
            z.iter_mut().zip(b).for_each(|(zi, bi)| *zi += bi);
        }
        z
    }

    pub fn flatten_params(&self, order: FlattenOrder) -> Vec<f64> {
        self.combined().flatten(order)
    }

    pub fn with_flat_params(&self, theta: &[f64], order: FlattenOrder) -> Result<Linear> {
        let combined = Matrix::unflatten(theta, self.out_dim(), self.augmented_in_dim(), order)?;
        Linear::from_combined(&combined, self.has_bias())
    }

    /// Flattened positions of the weight entries (bias excluded) within this
    /// layer's parameter vector.
    pub fn weight_positions(&self, order: FlattenOrder) -> Vec<usize> {
        let rows = self.out_dim();
        let cols = self.augmented_in_dim();
        let mut idx = Vec::with_capacity(rows * self.in_dim());
        match order {
            FlattenOrder::Cvec => {
                for j in 0..self.in_dim() {
                    for i in 0..rows {
                        idx.push(j * rows + i);
                    }
                }
            }
            FlattenOrder::Rvec => {
                for i in 0..rows {
                    for j in 0..self.in_dim() {
                        idx.push(i * cols + j);
                    }
                }
            }
        }
        idx
    }
}

pub(crate) fn augment_input(x: &[f64], with_bias: bool) -> Vec<f64> {
    let mut v = x.to_vec();
    if with_bias {
        v.push(1.0);
    }
    v
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Linear(Linear),
    Activation(Activation),
}

impl Layer {
    pub fn as_linear(&self) -> Option<&Linear> {
        match self {
            Layer::Linear(l) => Some(l),
            Layer::Activation(_) => None,
        }
    }

    /// Output dimension for an input of dimension `in_dim`.
    pub fn out_dim(&self, in_dim: usize) -> usize {
        match self {
            Layer::Linear(l) => l.out_dim(),
            Layer::Activation(_) => in_dim,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Layer::Linear(l) => l.forward(x),
            Layer::Activation(a) => x.iter().map(|&v| a.apply(v)).collect(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Layer::Linear(_) => "linear",
            Layer::Activation(Activation::Relu) => "relu",
            Layer::Activation(Activation::Tanh) => "tanh",
            Layer::Activation(Activation::Sigmoid) => "sigmoid",
            Layer::Activation(Activation::Identity) => "identity",
        }
    }
}
