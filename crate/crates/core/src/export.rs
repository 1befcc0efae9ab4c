//! On-disk artifacts: matrix CSV + JSON metadata sidecars, and 8-bit PGM
//! heatmaps of `log₁₀(|value| + 1e-12)`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureKind;
use crate::error::Result;
use crate::kfac::KfacBlock;
use crate::nn::Network;
use crate::tensor::{save_matrix_csv, FlattenOrder, Matrix};

pub const HEATMAP_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub layer_index: usize,
    pub offset: usize,
    pub len: usize,
    /// Shape of the combined parameter matrix `[W b]`.
    pub rows: usize,
    pub cols: usize,
}

/// Sidecar describing an exported curvature matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureMetadata {
    pub kind: String,
    pub order: FlattenOrder,
    /// `None` for a full matrix over all layers.
    pub layer: Option<usize>,
    pub reduction_factor: f64,
    pub seed: Option<u64>,
    pub m_samples: Option<usize>,
    pub dim: usize,
    /// Parameter ranges in row/column order; block boundaries for plots.
    pub blocks: Vec<ParamRange>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CurvatureMetadata {
    pub fn new(
        kind_name: &str,
        kind: Option<CurvatureKind>,
        order: FlattenOrder,
        reduction_factor: f64,
    ) -> Self {
        let (seed, m_samples) = match kind {
            Some(CurvatureKind::McFisher { m_samples, seed }) => (Some(seed), Some(m_samples)),
            _ => (None, None),
        };
        Self {
            kind: kind_name.to_string(),
            order,
            layer: None,
            reduction_factor,
            seed,
            m_samples,
            dim: 0,
            blocks: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Fills `dim` and `blocks` for the whole network, or for one layer.
    pub fn with_layout(mut self, net: &Network, layer: Option<usize>) -> Self {
        self.layer = layer;
        let mut offset = 0;
        self.blocks = net
            .param_blocks()
            .into_iter()
            .filter(|b| layer.is_none_or(|l| l == b.layer_index))
            .map(|b| {
                let r = ParamRange {
                    layer_index: b.layer_index,
                    offset,
                    len: b.len,
                    rows: b.rows,
                    cols: b.cols,
                };
                offset += b.len;
                r
            })
            .collect();
        self.dim = offset;
        self
    }
}

/// Sidecar for an exported KFAC block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KfacExportMetadata {
    pub kind: String,
    pub order: FlattenOrder,
    pub layer: usize,
    pub reduction_factor: f64,
    pub seed: Option<u64>,
    pub m_samples: Option<usize>,
    pub grad_normalizer: f64,
    pub include_bias: bool,
    /// `"A⊗B"` for cvec, `"B⊗A"` for rvec.
    pub kronecker_order: String,
}

impl KfacExportMetadata {
    pub fn new(block: &KfacBlock, kind: CurvatureKind) -> Self {
        let (seed, m_samples) = match kind {
            CurvatureKind::McFisher { m_samples, seed } => (Some(seed), Some(m_samples)),
            _ => (None, None),
        };
        Self {
            kind: kind.name().to_string(),
            order: block.order,
            layer: block.layer_index,
            reduction_factor: block.meta.reduction_factor,
            seed,
            m_samples,
            grad_normalizer: block.meta.grad_normalizer,
            include_bias: block.meta.include_bias,
            kronecker_order: match block.order {
                FlattenOrder::Cvec => "A⊗B",
                FlattenOrder::Rvec => "B⊗A",
            }
            .to_string(),
        }
    }
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`; returns both paths.
pub fn write_matrix_with_metadata<T: Serialize>(
    dir: impl AsRef<Path>,
    stem: &str,
    matrix: &Matrix,
    meta: &T,
) -> Result<(PathBuf, PathBuf)> {
    let csv = dir.as_ref().join(format!("{stem}.csv"));
    let json = dir.as_ref().join(format!("{stem}.json"));
    save_matrix_csv(matrix, &csv)?;
    write_json(meta, &json)?;
    Ok((csv, json))
}

/// Binary PGM (P5) bytes of `log₁₀(|m| + ε)` mapped linearly onto 0-255 using
/// this matrix's own min and max. One pixel per entry.
pub fn heatmap_pgm(m: &Matrix) -> Vec<u8> {
    let logs: Vec<f64> = m
        .as_slice()
        .iter()
        .map(|v| (v.abs() + HEATMAP_EPS).log10())
        .collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut out = format!("P5\n{} {}\n255\n", m.cols(), m.rows()).into_bytes();
    out.extend(logs.iter().map(|&l| {
        if span > 0.0 {
            ((l - lo) / span * 255.0).round() as u8
        } else {
            0
        }
    }));
    out
}

pub fn write_heatmap(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, heatmap_pgm(m))?;
    Ok(())
}
