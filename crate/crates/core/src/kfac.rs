//! KFAC for linear layers without weight sharing.
//!
//! For linear layer `z = W̃ x̃` the curvature block is approximated as
//!
//! ```text
//! cvec:  A ⊗ B        rvec:  B ⊗ A
//! A = R Σₙ x̃ₙ x̃ₙᵀ                      (input-based)
//! B = (1/K) Σₙ Σ_c gₙ,c gₙ,cᵀ          (grad-output-based)
//! gₙ,c = (J_{zₙ} fₙ)ᵀ ▲ₙ,c
//! ```
//!
//! where the backpropagated vectors `▲ₙ,c` select the curvature (see
//! [`backprop_vectors`]) and `K` is the number of outer products per
//! datum-sample slot: `N` for type-II and empirical, `N·M` for MC.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{CurvatureBlock, CurvatureKind};
use crate::data::Dataset;
use crate::error::{dim_err, Error, Result};
use crate::losses::{Label, LossConfig};
use crate::nn::{self, Network};
use crate::noise::{LabelNoise, SeedStream};
use crate::tensor::{
    frobenius_norm, kron, spectral_norm_default, FlattenOrder, KroneckerOperator, Matrix,
};

/// Vectors `▲ₙ,c` pulled back through the network for datum `datum`.
///
/// - type-II: the columns of the Hessian factorization `S(fₙ)`
/// - MC: `∇_f c(fₙ, ỹₙ,ₘ)` for `M` labels sampled from `r(y | fₙ)`,
///   drawn from the stream keyed by `(seed, datum, m)`
/// - empirical: `∇_f c(fₙ, yₙ)`
///
/// Signs follow `▲ = ∇_f c`; every consumer uses outer products only.
pub fn backprop_vectors(
    kind: CurvatureKind,
    cfg: &LossConfig,
    f: &[f64],
    y: &Label,
    datum: usize,
) -> Result<Vec<Vec<f64>>> {
    let seed = match kind {
        CurvatureKind::McFisher { seed, .. } => seed,
        _ => 0,
    };
    backprop_vectors_with(kind, cfg, f, y, |m| SeedStream::labels(seed, datum, m))
}

/// [`backprop_vectors`] with a caller-supplied noise source per MC sample.
pub fn backprop_vectors_with<N: LabelNoise>(
    kind: CurvatureKind,
    cfg: &LossConfig,
    f: &[f64],
    y: &Label,
    mut noise_for_sample: impl FnMut(usize) -> N,
) -> Result<Vec<Vec<f64>>> {
    kind.validate()?;
    match kind {
        CurvatureKind::GgnTypeII => {
            let s = cfg.hessian_factorization(f);
            Ok((0..s.cols()).map(|c| s.col(c)).collect())
        }
        CurvatureKind::McFisher { m_samples, .. } => (0..m_samples)
            .map(|m| {
                let sampled = cfg.sample_label(f, &mut noise_for_sample(m));
                cfg.gradient(f, &sampled)
            })
            .collect(),
        CurvatureKind::EmpiricalFisher => Ok(vec![cfg.gradient(f, y)?]),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KfacOptions {
    /// Approximate the block of the combined `[W b]` (input augmented with
    /// a trailing 1). When false, only the weight block is approximated.
    pub include_bias: bool,
}

impl Default for KfacOptions {
    fn default() -> Self {
        Self { include_bias: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KfacMetadata {
    pub reduction_factor: f64,
    /// Divisor applied to the summed gradient outer products.
    pub grad_normalizer: f64,
    pub include_bias: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KfacBlock {
    pub layer_index: usize,
    pub order: FlattenOrder,
    /// `A`, input-based.
    pub input_factor: Matrix,
    /// `B`, grad-output-based.
    pub grad_factor: Matrix,
    pub meta: KfacMetadata,
}

impl KfacBlock {
    /// Kronecker operator in the factor order dictated by the flattening.
    pub fn operator(&self) -> KroneckerOperator {
        match self.order {
            FlattenOrder::Cvec => {
                KroneckerOperator::new(self.input_factor.clone(), self.grad_factor.clone())
            }
            FlattenOrder::Rvec => {
                KroneckerOperator::new(self.grad_factor.clone(), self.input_factor.clone())
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.input_factor.rows() * self.grad_factor.rows()
    }

    pub fn materialize(&self) -> Result<Matrix> {
        kfac_materialize(self)
    }
}

/// KFAC of layer `layer` for the curvature selected by `kind`, on the
/// combined weight-and-bias parameters.
pub fn kfac_block(
    net: &Network,
    data: &Dataset,
    cfg: &LossConfig,
    layer: usize,
    kind: CurvatureKind,
    order: FlattenOrder,
) -> Result<KfacBlock> {
    kfac_block_with(net, data, cfg, layer, kind, order, KfacOptions::default())
}

pub fn kfac_block_with(
    net: &Network,
    data: &Dataset,
    cfg: &LossConfig,
    layer: usize,
    kind: CurvatureKind,
    order: FlattenOrder,
    opts: KfacOptions,
) -> Result<KfacBlock> {
    kind.validate()?;
    let lin = net.linear(layer)?;
    let cap = net.forward_capture(data.inputs())?;
    let with_bias = opts.include_bias && lin.has_bias();
    let in_dim = lin.in_dim() + usize::from(with_bias);
    let out_dim = lin.out_dim();

    let per_datum: Vec<Result<(Matrix, Matrix)>> = (0..data.len())
        .into_par_iter()
        .map(|n| {
            let x = nn::augment_input(cap.layer_input(layer, n), with_bias);
            let mut a = Matrix::zeros(in_dim, in_dim);
            a.add_outer_self(&x)?;
            let mut b = Matrix::zeros(out_dim, out_dim);
            for v in backprop_vectors(kind, cfg, cap.prediction(n), &data.labels()[n], n)? {
                b.add_outer_self(&nn::vjp_to_layer(&cap, layer, n, &v)?)?;
            }
            Ok((a, b))
        })
        .collect();

    let mut a = Matrix::zeros(in_dim, in_dim);
    let mut b = Matrix::zeros(out_dim, out_dim);
    for term in per_datum {
        let (an, bn) = term?;
        a.add_assign(&an)?;
        b.add_assign(&bn)?;
    }
    let r = cfg.reduction_factor(data.len(), cfg.label_dim(net.output_dim()));
    let normalizer = data.len() as f64 / kind.sample_weight();
    a.scale_in_place(r);
    b.scale_in_place(1.0 / normalizer);
    Ok(KfacBlock {
        layer_index: layer,
        order,
        input_factor: a,
        grad_factor: b,
        meta: KfacMetadata {
            reduction_factor: r,
            grad_normalizer: normalizer,
            include_bias: with_bias,
        },
    })
}

/// Dense KFAC matrix: `A ⊗ B` for cvec, `B ⊗ A` for rvec.
pub fn kfac_materialize(block: &KfacBlock) -> Result<Matrix> {
    match block.order {
        FlattenOrder::Cvec => kron(&block.input_factor, &block.grad_factor),
        FlattenOrder::Rvec => kron(&block.grad_factor, &block.input_factor),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualMetric {
    Frobenius,
    Spectral,
}

/// `‖KFAC - C‖ / ‖C‖` in the chosen norm; the absolute residual when `C = 0`.
pub fn kfac_residual(
    block: &KfacBlock,
    exact: &CurvatureBlock,
    metric: ResidualMetric,
) -> Result<f64> {
    if block.order != exact.order {
        return Err(dim_err(format!(
            "KFAC block uses {} flattening, exact block uses {}",
            block.order.as_str(),
            exact.order.as_str()
        )));
    }
    if block.dim() != exact.matrix.rows() {
        return Err(dim_err(format!(
            "KFAC block has dimension {}, exact block {}",
            block.dim(),
            exact.matrix.rows()
        )));
    }
    relative_residual(&kfac_materialize(block)?, &exact.matrix, metric)
}

/// `‖approx - exact‖ / ‖exact‖`, or the absolute residual when `exact = 0`.
pub fn relative_residual(approx: &Matrix, exact: &Matrix, metric: ResidualMetric) -> Result<f64> {
    let diff = approx.sub(exact)?;
    let norm = |m: &Matrix| -> Result<f64> {
        match metric {
            ResidualMetric::Frobenius => Ok(frobenius_norm(m)),
            ResidualMetric::Spectral => spectral_norm_default(m),
        }
    };
    let num = norm(&diff)?;
    let den = norm(exact)?;
    Ok(if den == 0.0 { num } else { num / den })
}

/// Frobenius-optimal `B` for `I ⊗ B ≈ cvec(G) cvec(G)ᵀ` with
/// `G = (g₁ … g_N)`: the average `(1/N) Σₙ gₙ gₙᵀ` of the diagonal blocks.
pub fn kfac_expectation_fit(gradients: &[Vec<f64>]) -> Result<Matrix> {
    let dim = gradients
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::Dimension("need at least one gradient".into()))?;
    let mut b = Matrix::zeros(dim, dim);
    for g in gradients {
        b.add_outer_self(g)?;
    }
    b.scale_in_place(1.0 / gradients.len() as f64);
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{Criterion, Reduction};
    use crate::nn::{seeded_mlp, Activation};
    use crate::noise::ZeroNoise;

    #[test]
    fn type2_mse_vectors_are_unit_vectors() {
        let cfg = LossConfig::mse(Reduction::Sum);
        let y = Label::Target(vec![0.0; 3]);
        let v = backprop_vectors(CurvatureKind::GgnTypeII, &cfg, &[0.3, -1.0, 2.0], &y, 5).unwrap();
        assert_eq!(
            v,
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0]
            ]
        );
    }

    #[test]
    fn empirical_mse_vector_is_residual() {
        let cfg = LossConfig::mse(Reduction::Sum);
        let y = Label::Target(vec![1.0, 1.0]);
        let v = backprop_vectors(CurvatureKind::EmpiricalFisher, &cfg, &[3.0, 0.5], &y, 0).unwrap();
        assert_eq!(v, vec![vec![2.0, -0.5]]);
    }

    #[test]
    fn mc_with_zero_noise_gives_zero_vectors() {
        let cfg = LossConfig::mse(Reduction::Sum);
        let y = Label::Target(vec![9.0, 9.0]);
        let v = backprop_vectors_with(CurvatureKind::mc(3, 0), &cfg, &[3.0, 0.5], &y, |_| {
            ZeroNoise
        })
        .unwrap();
        assert_eq!(v, vec![vec![0.0, 0.0]; 3]);
    }

    #[test]
    fn expectation_fit_trivial_cases() {
        let g = vec![1.0, -2.0];
        assert_eq!(
            kfac_expectation_fit(std::slice::from_ref(&g)).unwrap(),
            Matrix::outer(&g, &g)
        );
        assert_eq!(
            kfac_expectation_fit(&vec![g.clone(); 4]).unwrap(),
            Matrix::outer(&g, &g)
        );
        assert!(kfac_expectation_fit(&[]).is_err());
    }

    #[test]
    fn identity_factors_materialize_to_identity() {
        let block = KfacBlock {
            layer_index: 0,
            order: FlattenOrder::Rvec,
            input_factor: Matrix::identity(3),
            grad_factor: Matrix::identity(2),
            meta: KfacMetadata {
                reduction_factor: 1.0,
                grad_normalizer: 1.0,
                include_bias: false,
            },
        };
        assert_eq!(block.materialize().unwrap(), Matrix::identity(6));
    }

    #[test]
    fn shape_of_first_layer_block() {
        let net = seeded_mlp(&[5, 4, 4, 3], Some(Activation::Relu), 0).unwrap();
        let data = Dataset::synthetic(0, 10, 5, 3, Criterion::SquareLoss).unwrap();
        let cfg = LossConfig::mse(Reduction::Mean);
        let block = kfac_block(
            &net,
            &data,
            &cfg,
            0,
            CurvatureKind::GgnTypeII,
            FlattenOrder::Cvec,
        )
        .unwrap();
        assert_eq!(block.materialize().unwrap().shape(), (24, 24));
        let w_only = kfac_block_with(
            &net,
            &data,
            &cfg,
            0,
            CurvatureKind::GgnTypeII,
            FlattenOrder::Cvec,
            KfacOptions {
                include_bias: false,
            },
        )
        .unwrap();
        assert_eq!(w_only.dim(), 20);
        assert!(kfac_block(
            &net,
            &data,
            &cfg,
            1,
            CurvatureKind::GgnTypeII,
            FlattenOrder::Cvec
        )
        .is_err());
    }

    #[test]
    fn residual_checks_compatibility() {
        let net = seeded_mlp(&[2, 2], None, 0).unwrap();
        let data = Dataset::synthetic(0, 3, 2, 2, Criterion::SquareLoss).unwrap();
        let cfg = LossConfig::mse(Reduction::Sum);
        let k = kfac_block(
            &net,
            &data,
            &cfg,
            0,
            CurvatureKind::GgnTypeII,
            FlattenOrder::Cvec,
        )
        .unwrap();
        let exact = CurvatureBlock {
            layer_index: 0,
            order: FlattenOrder::Cvec,
            matrix: k.materialize().unwrap(),
        };
        assert!(kfac_residual(&k, &exact, ResidualMetric::Frobenius).unwrap() <= 1e-12);
        assert!(kfac_residual(&k, &exact, ResidualMetric::Spectral).unwrap() <= 1e-12);
        let wrong_order = CurvatureBlock {
            order: FlattenOrder::Rvec,
            ..exact.clone()
        };
        assert!(kfac_residual(&k, &wrong_order, ResidualMetric::Frobenius).is_err());
        let wrong_dim = CurvatureBlock {
            matrix: Matrix::identity(2),
            ..exact
        };
        assert!(kfac_residual(&k, &wrong_dim, ResidualMetric::Frobenius).is_err());
    }
}
