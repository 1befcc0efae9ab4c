//! Exact curvature matrices (GGN, type-I/II Fisher, empirical Fisher,
//! finite-difference Hessian) of small sequential MLPs, and their
//! Kronecker-factored approximations for linear layers.
//!
//! Parameters of a linear layer are always the combined matrix
//! `W̃ = [W b]`, flattened column-wise ([`FlattenOrder::Cvec`]) or row-wise
//! ([`FlattenOrder::Rvec`]). Full matrices concatenate layers in forward
//! order.

pub mod curvature;
pub mod data;
pub mod error;
pub mod export;
pub mod kfac;
pub mod losses;
pub mod nn;
pub mod noise;
pub mod reference;
pub mod tensor;

pub use curvature::{CurvatureBlock, CurvatureKind};
pub use data::Dataset;
pub use error::{Error, Result};
pub use kfac::{KfacBlock, ResidualMetric};
pub use losses::{Criterion, Label, LossConfig, Reduction};
pub use nn::{Activation, Layer, Linear, Network};
pub use tensor::{FlattenOrder, Matrix};
