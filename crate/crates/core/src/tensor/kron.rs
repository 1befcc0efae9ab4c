//! Kronecker products, dense and implicit.

use super::{FlattenOrder, Matrix};
use crate::error::{dim_err, Error, Result};

/// Default upper bound on the number of entries a dense Kronecker product may
/// have.
pub const DEFAULT_ELEMENT_CAP: usize = 100_000_000;

/// Condition number (1-norm) above which a factor counts as singular.
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e12;

/// Dense `a ⊗ b` with the default element cap.
pub fn kron(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    kron_capped(a, b, DEFAULT_ELEMENT_CAP)
}

/// Dense `a ⊗ b`: entry `[(i·m₁ + k), (j·m₂ + l)] = a[i,j]·b[k,l]`.
pub fn kron_capped(a: &Matrix, b: &Matrix, cap: usize) -> Result<Matrix> {
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    let requested = rows as u128 * cols as u128;
    if requested > cap as u128 {
        return Err(Error::SizeCap { requested, cap });
    }
    let mut out = Matrix::zeros(rows, cols);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let aij = a[(i, j)];
            for k in 0..b.rows() {
                for l in 0..b.cols() {
                    out[(i * b.rows() + k, j * b.cols() + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Implicit `left ⊗ right`. Only the two factors are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct KroneckerOperator {
    pub left: Matrix,
    pub right: Matrix,
}

impl KroneckerOperator {
    pub fn new(left: Matrix, right: Matrix) -> Self {
        Self { left, right }
    }

    pub fn rows(&self) -> usize {
        self.left.rows() * self.right.rows()
    }

    pub fn cols(&self) -> usize {
        self.left.cols() * self.right.cols()
    }

    pub fn materialize(&self) -> Result<Matrix> {
        kron(&self.left, &self.right)
    }

    pub fn materialize_capped(&self, cap: usize) -> Result<Matrix> {
        kron_capped(&self.left, &self.right, cap)
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.left.transpose(), self.right.transpose())
    }

    pub fn matvec(&self, v: &[f64], order: FlattenOrder) -> Result<Vec<f64>> {
        kron_matvec(self, v, order)
    }

    pub fn inverse(&self) -> Result<Self> {
        kron_inverse(self)
    }
}

/// `(A ⊗ B) v` without forming `A ⊗ B`.
///
/// With `Cvec` the vector is reshaped column-major and the product evaluated
/// as `cvec(B V Aᵀ)`; with `Rvec` it is reshaped row-major and evaluated as
/// `rvec(A X Bᵀ)`. Both give the same vector.
pub fn kron_matvec(op: &KroneckerOperator, v: &[f64], order: FlattenOrder) -> Result<Vec<f64>> {
    let (a, b) = (&op.left, &op.right);
    if v.len() != a.cols() * b.cols() {
        return Err(dim_err(format!(
            "vector of length {} does not match Kronecker operator with {} columns",
            v.len(),
            op.cols()
        )));
    }
    match order {
        FlattenOrder::Cvec => {
            let x = Matrix::unflatten(v, b.cols(), a.cols(), order)?;
            let y = b.matmul(&x)?.matmul(&a.transpose())?;
            Ok(y.flatten(order))
        }
        FlattenOrder::Rvec => {
            let x = Matrix::unflatten(v, a.cols(), b.cols(), order)?;
            let y = a.matmul(&x)?.matmul(&b.transpose())?;
            Ok(y.flatten(order))
        }
    }
}

/// `(A ⊗ B)⁻¹ = A⁻¹ ⊗ B⁻¹`.
pub fn kron_inverse(op: &KroneckerOperator) -> Result<KroneckerOperator> {
    let left = checked_inverse(&op.left, "left", DEFAULT_CONDITION_LIMIT)?;
    let right = checked_inverse(&op.right, "right", DEFAULT_CONDITION_LIMIT)?;
    Ok(KroneckerOperator::new(left, right))
}

fn checked_inverse(m: &Matrix, factor: &'static str, cond_limit: f64) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::Singular {
            factor,
            detail: format!("{}x{} is not square", m.rows(), m.cols()),
        });
    }
    let inv = lu_inverse(m).ok_or_else(|| Error::Singular {
        factor,
        detail: "zero pivot".into(),
    })?;
    let cond = norm_1(m) * norm_1(&inv);
    if !cond.is_finite() || cond > cond_limit {
        return Err(Error::Singular {
            factor,
            detail: format!("condition estimate {cond:e}"),
        });
    }
    Ok(inv)
}

fn norm_1(m: &Matrix) -> f64 {
    (0..m.cols())
        .map(|j| (0..m.rows()).map(|i| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Gauss-Jordan inversion with partial pivoting. `None` on an exactly
/// singular pivot.
pub(crate) fn lu_inverse(m: &Matrix) -> Option<Matrix> {
    let n = m.rows();
    let mut a = m.clone();
    let mut inv = Matrix::identity(n);
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[(r, col)].abs().total_cmp(&a[(s, col)].abs()))?;
        if a[(pivot, col)] == 0.0 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                let t = a[(col, j)];
                a[(col, j)] = a[(pivot, j)];
                a[(pivot, j)] = t;
                let t = inv[(col, j)];
                inv[(col, j)] = inv[(pivot, j)];
                inv[(pivot, j)] = t;
            }
        }
        let p = a[(col, col)];
        for j in 0..n {
            a[(col, j)] /= p;
            inv[(col, j)] /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[(r, col)];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                a[(r, j)] -= f * a[(col, j)];
                inv[(r, j)] -= f * inv[(col, j)];
            }
        }
    }
    Some(inv)
}
