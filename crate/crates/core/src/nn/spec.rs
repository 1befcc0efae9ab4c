//! JSON network description.
//!
//! ```json
//! {"input_dim": 5, "layers": [
//!   {"type": "linear", "in": 5, "out": 4, "bias": true,
//!    "weights": {"init": "seeded-normal", "seed": 0, "scale": 0.5}},
//!   {"type": "relu"},
//!   {"type": "linear", "in": 4, "out": 3, "bias": false,
//!    "weights": [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0]]}
//! ]}
//! ```
//!
//! Inline weights are the combined matrix `[W b]` (bias in the last
//! column when `"bias": true`). A missing `weights` entry means
//! `seeded-normal` with the layer position as seed and scale `1/√in`.
//! `input_dim` may be omitted when the first layer is linear.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layer::{Activation, Layer, Linear};
use super::network::Network;
use crate::error::{Error, Result};
use crate::noise::{LabelNoise, SeedStream, StreamDomain};
use crate::tensor::Matrix;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_dim: Option<usize>,
    pub layers: Vec<LayerSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LayerSpec {
    Linear {
        #[serde(rename = "in")]
        in_dim: usize,
        #[serde(rename = "out")]
        out_dim: usize,
        #[serde(default = "default_bias")]
        bias: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<WeightSpec>,
    },
    Relu,
    Tanh,
    Sigmoid,
    Identity,
}

fn default_bias() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Inline(Vec<Vec<f64>>),
    Init(InitSpec),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InitSpec {
    pub init: String,
    pub seed: u64,
    pub scale: f64,
}

impl NetworkSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn build(&self) -> Result<Network> {
        let input_dim = match (self.input_dim, self.layers.first()) {
            (Some(d), _) => d,
            (None, Some(LayerSpec::Linear { in_dim, .. })) => *in_dim,
            _ => {
                return Err(Error::Parse(
                    "`input_dim` is required when the first layer is not linear".into(),
                ))
            }
        };
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(pos, spec)| spec.build(pos))
            .collect::<Result<Vec<_>>>()?;
        Network::new(input_dim, layers)
    }
}

impl LayerSpec {
    fn build(&self, position: usize) -> Result<Layer> {
        Ok(match self {
            LayerSpec::Relu => Layer::Activation(Activation::Relu),
            LayerSpec::Tanh => Layer::Activation(Activation::Tanh),
            LayerSpec::Sigmoid => Layer::Activation(Activation::Sigmoid),
            LayerSpec::Identity => Layer::Activation(Activation::Identity),
            LayerSpec::Linear {
                in_dim,
                out_dim,
                bias,
                weights,
            } => {
                let cols = in_dim + usize::from(*bias);
                let combined = match weights {
                    Some(WeightSpec::Inline(rows)) => {
                        let m = Matrix::from_rows(rows)?;
                        if m.shape() != (*out_dim, cols) {
                            return Err(Error::Parse(format!(
                                "layer {position}: inline weights are {}x{}, expected {out_dim}x{cols}",
                                m.rows(),
                                m.cols()
                            )));
                        }
                        m
                    }
                    Some(WeightSpec::Init(init)) => seeded_normal(init, *out_dim, cols, position)?,
                    None => seeded_normal(
                        &InitSpec {
                            init: "seeded-normal".into(),
                            seed: position as u64,
                            scale: 1.0 / (*in_dim.max(&1) as f64).sqrt(),
                        },
                        *out_dim,
                        cols,
                        position,
                    )?,
                };
                Layer::Linear(Linear::from_combined(&combined, *bias)?)
            }
        })
    }
}

fn seeded_normal(init: &InitSpec, rows: usize, cols: usize, position: usize) -> Result<Matrix> {
    if init.init != "seeded-normal" {
        return Err(Error::Parse(format!(
            "layer {position}: unknown init `{}`",
            init.init
        )));
    }
    let mut noise = SeedStream::new(StreamDomain::Init, init.seed, position as u64, 0);
    Ok(Matrix::from_fn(rows, cols, |_, _| {
        init.scale * noise.standard_normal()
    }))
}

impl Network {
    /// Spec with every weight written inline.
    pub fn to_spec(&self) -> NetworkSpec {
        let layers = self
            .layers()
            .iter()
            .map(|l| match l {
                Layer::Linear(lin) => {
                    let c = lin.combined();
                    LayerSpec::Linear {
                        in_dim: lin.in_dim(),
                        out_dim: lin.out_dim(),
                        bias: lin.has_bias(),
                        weights: Some(WeightSpec::Inline(
                            (0..c.rows()).map(|i| c.row(i).to_vec()).collect(),
                        )),
                    }
                }
                Layer::Activation(Activation::Relu) => LayerSpec::Relu,
                Layer::Activation(Activation::Tanh) => LayerSpec::Tanh,
                Layer::Activation(Activation::Sigmoid) => LayerSpec::Sigmoid,
                Layer::Activation(Activation::Identity) => LayerSpec::Identity,
            })
            .collect();
        NetworkSpec {
            input_dim: Some(self.input_dim()),
            layers,
        }
    }
}

/// Seeded MLP `dims[0] → dims[1] → …` with `activation` between linear
/// layers (none after the last), all layers with bias.
pub fn seeded_mlp(dims: &[usize], activation: Option<Activation>, seed: u64) -> Result<Network> {
    let mut layers = Vec::new();
    for (k, pair) in dims.windows(2).enumerate() {
        if k > 0 {
            if let Some(a) = activation {
                layers.push(LayerSpec::from(a));
            }
        }
        layers.push(LayerSpec::Linear {
            in_dim: pair[0],
            out_dim: pair[1],
            bias: true,
            weights: Some(WeightSpec::Init(InitSpec {
                init: "seeded-normal".into(),
                seed,
                scale: 1.0 / (pair[0] as f64).sqrt(),
            })),
        });
    }
    NetworkSpec {
        input_dim: dims.first().copied(),
        layers,
    }
    .build()
}

impl From<Activation> for LayerSpec {
    fn from(a: Activation) -> Self {
        match a {
            Activation::Relu => LayerSpec::Relu,
            Activation::Tanh => LayerSpec::Tanh,
            Activation::Sigmoid => LayerSpec::Sigmoid,
            Activation::Identity => LayerSpec::Identity,
        }
    }
}
