//! Dense matrices, flattening conventions, and Kronecker algebra.

mod csv;
mod flatten;
mod kron;
mod matrix;
mod norms;

pub use csv::{
    load_matrix_csv, read_matrix_csv, save_matrix_csv, save_table_csv, write_matrix_csv,
};
pub use flatten::{flatten, flatten_permutation, unflatten, FlattenOrder, Tensor};
pub use kron::{
    kron, kron_capped, kron_inverse, kron_matvec, KroneckerOperator, DEFAULT_CONDITION_LIMIT,
    DEFAULT_ELEMENT_CAP,
};
pub use matrix::{dot, norm2, Matrix};
pub use norms::{
    frobenius_norm, min_eigenvalue, spectral_norm, spectral_norm_default, DEFAULT_POWER_ITERS,
    DEFAULT_POWER_TOL,
};
