use super::layer::{Layer, Linear};
use crate::error::{dim_err, Error, Result};
use crate::tensor::{FlattenOrder, Matrix};

/// Sequential stack of layers, `f = f⁽ᴸ⁾ ∘ … ∘ f⁽¹⁾`.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
    input_dim: usize,
    output_dim: usize,
}

/// Where one linear layer's parameters live in the concatenated vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamBlock {
    pub layer_index: usize,
    pub offset: usize,
    pub len: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Network {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(dim_err("network needs at least one layer"));
        }
        let mut dim = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if let Layer::Linear(l) = layer {
                if l.in_dim() != dim {
                    return Err(dim_err(format!(
                        "layer {i} expects input of size {}, previous layer produces {dim}",
                        l.in_dim()
                    )));
                }
            }
            dim = layer.out_dim(dim);
        }
        Ok(Self {
            layers,
            input_dim,
            output_dim: dim,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn linear_layer_indices(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.as_linear().map(|_| i))
            .collect()
    }

    pub fn linear(&self, index: usize) -> Result<&Linear> {
        let layer = self.layers.get(index).ok_or(Error::IndexOutOfRange {
            what: "layer",
            index,
            len: self.layers.len(),
        })?;
        layer.as_linear().ok_or_else(|| Error::UnsupportedLayer {
            index,
            reason: format!(
                "`{}` has no parameters; expected a linear layer",
                layer.name()
            ),
        })
    }

    /// Linear layers in forward order with their slice of the parameter vector.
    pub fn param_blocks(&self) -> Vec<ParamBlock> {
        let mut offset = 0;
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            if let Layer::Linear(l) = layer {
                out.push(ParamBlock {
                    layer_index: i,
                    offset,
                    len: l.param_count(),
                    rows: l.out_dim(),
                    cols: l.augmented_in_dim(),
                });
                offset += l.param_count();
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.param_blocks().iter().map(|b| b.len).sum()
    }

    /// Has no ReLU (second derivatives exist everywhere).
    pub fn is_smooth(&self) -> bool {
        self.layers.iter().all(|l| match l {
            Layer::Activation(a) => a.is_smooth(),
            Layer::Linear(_) => true,
        })
    }

    pub fn flatten_params(&self, order: FlattenOrder) -> Vec<f64> {
        self.layers
            .iter()
            .filter_map(Layer::as_linear)
            .flat_map(|l| l.flatten_params(order))
            .collect()
    }

    /// Copy of the network with parameters replaced by `theta`.
    pub fn with_params(&self, theta: &[f64], order: FlattenOrder) -> Result<Network> {
        if theta.len() != self.param_count() {
            return Err(dim_err(format!(
                "parameter vector of length {} for network with {} parameters",
                theta.len(),
                self.param_count()
            )));
        }
        let mut offset = 0;
        let mut layers = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            layers.push(match layer {
                Layer::Linear(l) => {
                    let n = l.param_count();
                    let next = l.with_flat_params(&theta[offset..offset + n], order)?;
                    offset += n;
                    Layer::Linear(next)
                }
                other => other.clone(),
            });
        }
        Network::new(self.input_dim, layers)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(dim_err(format!(
                "input of size {} for network expecting {}",
                x.len(),
                self.input_dim
            )));
        }
        Ok(self.layers.iter().fold(x.to_vec(), |h, l| l.forward(&h)))
    }

    /// Forward pass over a batch (one datum per row), recording every layer's
    /// input and output.
    pub fn forward_capture(&self, inputs: &Matrix) -> Result<Capture<'_>> {
        if inputs.cols() != self.input_dim {
            return Err(dim_err(format!(
                "inputs have {} columns, network expects {}",
                inputs.cols(),
                self.input_dim
            )));
        }
        let n = inputs.rows();
        let mut layer_inputs = Vec::with_capacity(self.layers.len());
        let mut layer_outputs = Vec::with_capacity(self.layers.len());
        let mut current = inputs.clone();
        let mut dim = self.input_dim;
        for layer in &self.layers {
            let out_dim = layer.out_dim(dim);
            let mut out = Matrix::zeros(n, out_dim);
            for d in 0..n {
                let y = layer.forward(current.row(d));
                for (j, v) in y.into_iter().enumerate() {
                    out[(d, j)] = v;
                }
            }
            layer_inputs.push(current);
            current = out.clone();
            layer_outputs.push(out);
            dim = out_dim;
        }
        Ok(Capture {
            net: self,
            layer_inputs,
            layer_outputs,
        })
    }
}

/// Per-datum layer inputs and outputs recorded during a forward pass.
///
/// `layer_inputs[i]` and `layer_outputs[i]` hold one row per datum.
#[derive(Clone, Debug)]
pub struct Capture<'a> {
    net: &'a Network,
    layer_inputs: Vec<Matrix>,
    layer_outputs: Vec<Matrix>,
}

impl<'a> Capture<'a> {
    pub fn network(&self) -> &'a Network {
        self.net
    }

    pub fn len(&self) -> usize {
        self.layer_inputs[0].rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn layer_input(&self, layer: usize, datum: usize) -> &[f64] {
        self.layer_inputs[layer].row(datum)
    }

    pub fn layer_output(&self, layer: usize, datum: usize) -> &[f64] {
        self.layer_outputs[layer].row(datum)
    }

    pub fn layer_inputs(&self, layer: usize) -> &Matrix {
        &self.layer_inputs[layer]
    }

    pub fn layer_outputs(&self, layer: usize) -> &Matrix {
        &self.layer_outputs[layer]
    }

    pub fn prediction(&self, datum: usize) -> &[f64] {
        self.layer_outputs
            .last()
            .expect("non-empty network")
            .row(datum)
    }

    pub fn predictions(&self) -> &Matrix {
        self.layer_outputs.last().expect("non-empty network")
    }

    pub(crate) fn check(&self, layer: usize, datum: usize) -> Result<()> {
        if layer >= self.net.layers().len() {
            return Err(Error::IndexOutOfRange {
                what: "layer",
                index: layer,
                len: self.net.layers().len(),
            });
        }
        if datum >= self.len() {
            return Err(Error::IndexOutOfRange {
                what: "datum",
                index: datum,
                len: self.len(),
            });
        }
        Ok(())
    }
}
