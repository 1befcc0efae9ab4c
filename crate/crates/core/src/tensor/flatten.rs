//! Column-stacking (`Cvec`, first index varies fastest) and row-stacking
//! (`Rvec`, last index varies fastest) flattening of dense tensors.
//!
//! A [`Tensor`] always stores its values with the last index varying
//! fastest, so `Rvec` flattening is a copy and `Cvec` is a pure index map.

use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{dim_err, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlattenOrder {
    Cvec,
    Rvec,
}

impl FlattenOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            FlattenOrder::Cvec => "cvec",
            FlattenOrder::Rvec => "rvec",
        }
    }
}

impl std::str::FromStr for FlattenOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cvec" => Ok(FlattenOrder::Cvec),
            "rvec" => Ok(FlattenOrder::Rvec),
            other => Err(Error::Parse(format!("unknown flatten order `{other}`"))),
        }
    }
}

/// Dense tensor of arbitrary rank, last index varying fastest in storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(dim_err(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[row_major_offset(&self.shape, index)]
    }
}

impl From<Matrix> for Tensor {
    fn from(m: Matrix) -> Self {
        let shape = vec![m.rows(), m.cols()];
        Tensor {
            shape,
            data: m.into_vec(),
        }
    }
}

impl TryFrom<Tensor> for Matrix {
    type Error = Error;

    fn try_from(t: Tensor) -> Result<Matrix> {
        match t.shape[..] {
            [r, c] => Matrix::new(r, c, t.data),
            [n] => Matrix::new(n, 1, t.data),
            _ => Err(dim_err(format!(
                "rank-{} tensor is not a matrix",
                t.shape.len()
            ))),
        }
    }
}

fn row_major_offset(shape: &[usize], index: &[usize]) -> usize {
    index.iter().zip(shape).fold(0, |acc, (&i, &d)| acc * d + i)
}

/// Position in the first-index-fastest order of the element whose
/// row-major position is `offset`.
fn cvec_position(shape: &[usize], mut offset: usize) -> usize {
    // decompose the row-major offset (last index fastest)
    let mut index = vec![0; shape.len()];
    for (slot, &d) in index.iter_mut().zip(shape).rev() {
        *slot = offset % d;
        offset /= d;
    }
    // recompose with the first index fastest
    index
        .iter()
        .zip(shape)
        .rev()
        .fold(0, |acc, (&i, &d)| acc * d + i)
}

/// `p` with `rvec(T)[i] == cvec(T)[p[i]]` for every tensor `T` of `shape`.
pub fn flatten_permutation(shape: &[usize]) -> Vec<usize> {
    let n: usize = shape.iter().product();
    (0..n).map(|i| cvec_position(shape, i)).collect()
}

pub fn flatten(t: &Tensor, order: FlattenOrder) -> Result<Vec<f64>> {
    if t.is_empty() {
        return Err(Error::EmptyTensor);
    }
    Ok(match order {
        FlattenOrder::Rvec => t.data.clone(),
        FlattenOrder::Cvec => {
            let mut out = vec![0.0; t.len()];
            for (&pos, &x) in flatten_permutation(&t.shape).iter().zip(&t.data) {
                out[pos] = x;
            }
            out
        }
    })
}

pub fn unflatten(v: &[f64], shape: &[usize], order: FlattenOrder) -> Result<Tensor> {
    let n: usize = shape.iter().product();
    if v.len() != n {
        return Err(dim_err(format!(
            "cannot unflatten {} values into shape {shape:?}",
            v.len()
        )));
    }
    let data = match order {
        FlattenOrder::Rvec => v.to_vec(),
        FlattenOrder::Cvec => flatten_permutation(shape).iter().map(|&p| v[p]).collect(),
    };
    Tensor::new(shape.to_vec(), data)
}

impl Matrix {
    /// `cvec` stacks columns, `rvec` stacks rows.
    pub fn flatten(&self, order: FlattenOrder) -> Vec<f64> {
        match order {
            FlattenOrder::Rvec => self.as_slice().to_vec(),
            FlattenOrder::Cvec => self.transpose().into_vec(),
        }
    }

    pub fn unflatten(v: &[f64], rows: usize, cols: usize, order: FlattenOrder) -> Result<Matrix> {
        if v.len() != rows * cols {
            return Err(dim_err(format!(
                "cannot unflatten {} values into {rows}x{cols}",
                v.len()
            )));
        }
        match order {
            FlattenOrder::Rvec => Matrix::new(rows, cols, v.to_vec()),
            FlattenOrder::Cvec => Ok(Matrix::new(cols, rows, v.to_vec())?.transpose()),
        }
    }
}
