//! Analytic Jacobians of sequential networks, materialized or as
//! vector-Jacobian / Jacobian-vector products.
//!
//! `layer_index` always refers to a position in [`Network::layers`]; the
//! Jacobians returned here are taken with respect to that layer's *output*.

use super::layer::{augment_input, Layer};
use super::network::{Capture, Network};
use crate::error::{dim_err, Result};
use crate::tensor::{kron, FlattenOrder, Matrix};

/// Jacobian of `z = W̃ x̃` with respect to the flattened `W̃`.
///
/// `Cvec` gives `x̃ᵀ ⊗ I`, `Rvec` gives `I ⊗ x̃ᵀ`, with `x̃ = [x; 1]` when
/// `with_bias`.
pub fn linear_param_jacobian(
    x: &[f64],
    d_out: usize,
    order: FlattenOrder,
    with_bias: bool,
) -> Matrix {
    let xt = Matrix::row_vector(&augment_input(x, with_bias));
    let id = Matrix::identity(d_out);
    let jac = match order {
        FlattenOrder::Cvec => kron(&xt, &id),
        FlattenOrder::Rvec => kron(&id, &xt),
    };
    jac.expect("per-datum linear Jacobian stays far below the element cap")
}

/// Jacobian of a layer's output with respect to its input at `x`.
pub fn layer_input_jacobian(layer: &Layer, x: &[f64]) -> Matrix {
    match layer {
        Layer::Linear(l) => l.weight().clone(),
        Layer::Activation(a) => {
            Matrix::from_diag(&x.iter().map(|&v| a.derivative(v)).collect::<Vec<_>>())
        }
    }
}

/// `Jᵀ v` for a single layer, evaluated at input `x`.
fn layer_input_vjp(layer: &Layer, x: &[f64], v: &[f64]) -> Vec<f64> {
    match layer {
        Layer::Linear(l) => l.weight().tr_matvec(v).expect("dims checked by capture"),
        Layer::Activation(a) => v
            .iter()
            .zip(x)
            .map(|(g, &xi)| g * a.derivative(xi))
            .collect(),
    }
}

/// `J u` for a single layer, evaluated at input `x`.
fn layer_input_jvp(layer: &Layer, x: &[f64], u: &[f64]) -> Vec<f64> {
    match layer {
        Layer::Linear(l) => l.weight().matvec(u).expect("dims checked by capture"),
        Layer::Activation(a) => u
            .iter()
            .zip(x)
            .map(|(t, &xi)| t * a.derivative(xi))
            .collect(),
    }
}

fn layer_out_dim(net: &Network, layer_index: usize) -> usize {
    let mut dim = net.input_dim();
    for l in &net.layers()[..=layer_index] {
        dim = l.out_dim(dim);
    }
    dim
}

/// `J_{x⁽ⁱ⁾ₙ} fₙ`: Jacobian of the prediction with respect to the output of
/// layer `i`, as the product of downstream layer Jacobians.
pub fn net_jacobian_from_layer(
    capture: &Capture<'_>,
    layer_index: usize,
    datum: usize,
) -> Result<Matrix> {
    capture.check(layer_index, datum)?;
    let net = capture.network();
    let mut jac = Matrix::identity(net.output_dim());
    for k in ((layer_index + 1)..net.layers().len()).rev() {
        let local = layer_input_jacobian(&net.layers()[k], capture.layer_input(k, datum));
        jac = jac.matmul(&local)?;
    }
    Ok(jac)
}

/// `(J_{x⁽ⁱ⁾ₙ} fₙ)ᵀ v` by backward accumulation.
pub fn vjp_to_layer(
    capture: &Capture<'_>,
    layer_index: usize,
    datum: usize,
    v: &[f64],
) -> Result<Vec<f64>> {
    capture.check(layer_index, datum)?;
    let net = capture.network();
    if v.len() != net.output_dim() {
        return Err(dim_err(format!(
            "VJP vector of length {} for output dimension {}",
            v.len(),
            net.output_dim()
        )));
    }
    let mut g = v.to_vec();
    for k in ((layer_index + 1)..net.layers().len()).rev() {
        g = layer_input_vjp(&net.layers()[k], capture.layer_input(k, datum), &g);
    }
    Ok(g)
}

/// `(J_{x⁽ⁱ⁾ₙ} fₙ) u` by forward accumulation.
pub fn jvp_from_layer(
    capture: &Capture<'_>,
    layer_index: usize,
    datum: usize,
    u: &[f64],
) -> Result<Vec<f64>> {
    capture.check(layer_index, datum)?;
    let net = capture.network();
    let expected = layer_out_dim(net, layer_index);
    if u.len() != expected {
        return Err(dim_err(format!(
            "JVP vector of length {} for layer output dimension {expected}",
            u.len()
        )));
    }
    let mut t = u.to_vec();
    for k in (layer_index + 1)..net.layers().len() {
        t = layer_input_jvp(&net.layers()[k], capture.layer_input(k, datum), &t);
    }
    Ok(t)
}

/// Jacobian of the prediction with respect to the flattened combined
/// parameters `W̃` of linear layer `i`: `J_{x⁽ⁱ⁾}f · J_W̃ z`.
pub fn net_param_jacobian(
    capture: &Capture<'_>,
    layer_index: usize,
    datum: usize,
    order: FlattenOrder,
) -> Result<Matrix> {
    capture.check(layer_index, datum)?;
    let lin = capture.network().linear(layer_index)?;
    let downstream = net_jacobian_from_layer(capture, layer_index, datum)?;
    let local = linear_param_jacobian(
        capture.layer_input(layer_index, datum),
        lin.out_dim(),
        order,
        lin.has_bias(),
    );
    downstream.matmul(&local)
}

/// Jacobian with respect to all parameters, layers in forward order.
pub fn net_full_param_jacobian(
    capture: &Capture<'_>,
    datum: usize,
    order: FlattenOrder,
) -> Result<Matrix> {
    let parts = capture
        .network()
        .linear_layer_indices()
        .into_iter()
        .map(|i| net_param_jacobian(capture, i, datum, order))
        .collect::<Result<Vec<_>>>()?;
    Matrix::hstack(&parts)
}

/// `(J_{W̃⁽ⁱ⁾} fₙ)ᵀ v`, flattened. Matrix-free: the layer-output gradient
/// `g` is formed by VJP and the result is `vec(g x̃ᵀ)`.
pub fn param_vjp(
    capture: &Capture<'_>,
    layer_index: usize,
    datum: usize,
    v: &[f64],
    order: FlattenOrder,
) -> Result<Vec<f64>> {
    let lin = capture.network().linear(layer_index)?;
    let g = vjp_to_layer(capture, layer_index, datum, v)?;
    let x = lin.augment(capture.layer_input(layer_index, datum));
    Ok(Matrix::outer(&g, &x).flatten(order))
}

/// `(J_{W̃⁽ⁱ⁾} fₙ) δ` for a flattened parameter direction `δ`.
pub fn param_jvp(
    capture: &Capture<'_>,
    layer_index: usize,
    datum: usize,
    direction: &[f64],
    order: FlattenOrder,
) -> Result<Vec<f64>> {
    let lin = capture.network().linear(layer_index)?;
    let delta = Matrix::unflatten(direction, lin.out_dim(), lin.augmented_in_dim(), order)?;
    let x = lin.augment(capture.layer_input(layer_index, datum));
    let dz = delta.matvec(&x)?;
    jvp_from_layer(capture, layer_index, datum, &dz)
}
