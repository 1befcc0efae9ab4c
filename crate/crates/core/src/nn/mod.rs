//! Sequential MLPs, forward capture, and analytic Jacobians.

mod jacobian;
mod layer;
mod network;
mod spec;

pub use jacobian::{
    jvp_from_layer, layer_input_jacobian, linear_param_jacobian, net_full_param_jacobian,
    net_jacobian_from_layer, net_param_jacobian, param_jvp, param_vjp, vjp_to_layer,
};
pub(crate) use layer::augment_input;
pub use layer::{Activation, Layer, Linear};
pub use network::{Capture, Network, ParamBlock};
pub use spec::{seeded_mlp, InitSpec, LayerSpec, NetworkSpec, WeightSpec};
