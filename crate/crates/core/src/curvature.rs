//! Exact curvature matrices of the empirical risk `R Σₙ c(f(xₙ, θ), yₙ)`.
//!
//! Every matrix here has the self-outer-product form `R Σₙ Jₙᵀ Qₙ Jₙ`
//! where `Jₙ` is the Jacobian of the prediction with respect to the
//! flattened parameters and `Qₙ` depends on the curvature:
//!
//! | curvature        | `Qₙ`                                    |
//! |------------------|-----------------------------------------|
//! | GGN              | `∇²_f c(fₙ, yₙ)`                        |
//! | type-II Fisher   | `Σ_c sₙ,c sₙ,cᵀ` (columns of `S`)         |
//! | MC type-I Fisher | `(1/M) Σₘ gₙ,ₘ gₙ,ₘᵀ`, sampled labels     |
//! | empirical Fisher | `gₙ gₙᵀ` at the true label              |
//!
//! Per-datum terms may be computed in parallel but are always summed in
//! ascending datum order, so results do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{dim_err, Error, Result};
use crate::kfac::backprop_vectors;
use crate::losses::LossConfig;
use crate::nn::{self, Capture, Network};
use crate::tensor::{min_eigenvalue, FlattenOrder, Matrix};

/// Which curvature matrix (and which backpropagated vectors) to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CurvatureKind {
    /// GGN, equal to the type-II Fisher for square and cross-entropy loss.
    GgnTypeII,
    /// Type-I Fisher with `m_samples` labels drawn per datum.
    McFisher { m_samples: usize, seed: u64 },
    /// Outer products of gradients at the true labels.
    EmpiricalFisher,
}

impl CurvatureKind {
    pub fn mc(m_samples: usize, seed: u64) -> Self {
        CurvatureKind::McFisher { m_samples, seed }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CurvatureKind::GgnTypeII => "ggn",
            CurvatureKind::McFisher { .. } => "fisher-mc",
            CurvatureKind::EmpiricalFisher => "fisher-emp",
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            CurvatureKind::McFisher { m_samples: 0, .. } => {
                Err(dim_err("Monte Carlo Fisher needs at least one sample"))
            }
            _ => Ok(()),
        }
    }

    /// Weight of each backpropagated outer product: `1/M` for MC, else 1.
    pub fn sample_weight(&self) -> f64 {
        match self {
            CurvatureKind::McFisher { m_samples, .. } => 1.0 / *m_samples as f64,
            _ => 1.0,
        }
    }
}

/// Curvature restricted to one linear layer's combined parameters `W̃`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureBlock {
    pub layer_index: usize,
    pub order: FlattenOrder,
    pub matrix: Matrix,
}

impl CurvatureBlock {
    /// Sub-block over the weight entries only, dropping bias rows/columns.
    pub fn weight_only(&self, net: &Network) -> Result<CurvatureBlock> {
        let lin = net.linear(self.layer_index)?;
        if self.matrix.rows() != lin.param_count() {
            return Err(dim_err(
                "block does not hold the layer's combined parameters",
            ));
        }
        Ok(CurvatureBlock {
            layer_index: self.layer_index,
            order: self.order,
            matrix: self
                .matrix
                .select_symmetric(&lin.weight_positions(self.order)),
        })
    }
}

/// Checks that `m` is symmetric to `1e-10` and has no eigenvalue below
/// `-1e-8 · max(1, ‖m‖_F)`.
pub fn verify_curvature(m: &Matrix) -> Result<()> {
    if !m.is_symmetric(1e-10) {
        return Err(Error::Contract(format!(
            "curvature matrix is not symmetric (max asymmetry {:e})",
            m.max_asymmetry()
        )));
    }
    let lambda = min_eigenvalue(m)?;
    let scale = crate::tensor::frobenius_norm(m).max(1.0);
    if lambda < -1e-8 * scale {
        return Err(Error::Contract(format!(
            "curvature matrix is not PSD (min eigenvalue estimate {lambda:e})"
        )));
    }
    Ok(())
}

fn capture<'a>(net: &'a Network, data: &Dataset) -> Result<Capture<'a>> {
    net.forward_capture(data.inputs())
}

fn reduction(net: &Network, data: &Dataset, cfg: &LossConfig) -> f64 {
    cfg.reduction_factor(data.len(), cfg.label_dim(net.output_dim()))
}

/// Sums per-datum matrices in ascending datum order.
fn ordered_sum(terms: Vec<Result<Matrix>>, dim: usize) -> Result<Matrix> {
    let mut acc = Matrix::zeros(dim, dim);
    for t in terms {
        acc.add_assign(&t?)?;
    }
    Ok(acc)
}

/// Which parameters a Jacobian is taken against.
#[derive(Clone, Copy)]
enum Scope {
    Layer(usize),
    Full,
}

impl Scope {
    fn jacobian(self, cap: &Capture<'_>, n: usize, order: FlattenOrder) -> Result<Matrix> {
        match self {
            Scope::Layer(i) => nn::net_param_jacobian(cap, i, n, order),
            Scope::Full => nn::net_full_param_jacobian(cap, n, order),
        }
    }

    fn dim(self, net: &Network) -> Result<usize> {
        match self {
            Scope::Layer(i) => Ok(net.linear(i)?.param_count()),
            Scope::Full => Ok(net.param_count()),
        }
    }
}

/// `R Σₙ Jₙᵀ Qₙ Jₙ` with `Qₙ` supplied per datum.
fn assemble_output_space(
    net: &Network,
    data: &Dataset,
    cfg: &LossConfig,
    scope: Scope,
    order: FlattenOrder,
    q: impl Fn(&Capture<'_>, usize) -> Result<Matrix> + Sync,
) -> Result<Matrix> {
    let cap = capture(net, data)?;
    let dim = scope.dim(net)?;
    let terms: Vec<Result<Matrix>> = (0..data.len())
        .into_par_iter()
        .map(|n| {
            let jac = scope.jacobian(&cap, n, order)?;
            let qn = q(&cap, n)?;
            jac.tr_matmul(&qn.matmul(&jac)?)
        })
        .collect();
    let mut sum = ordered_sum(terms, dim)?;
    sum.scale_in_place(reduction(net, data, cfg));
    Ok(sum)
}

/// `R Σₙ w Σ_c (Jₙᵀ ▲ₙ,c)(Jₙᵀ ▲ₙ,c)ᵀ`, outer products in parameter space.
fn assemble_parameter_space(
    net: &Network,
    data: &Dataset,
    cfg: &LossConfig,
    scope: Scope,
    order: FlattenOrder,
    weight: f64,
    vectors: impl Fn(&Capture<'_>, usize) -> Result<Vec<Vec<f64>>> + Sync,
) -> Result<Matrix> {
    let cap = capture(net, data)?;
    let dim = scope.dim(net)?;
    let terms: Vec<Result<Matrix>> = (0..data.len())
        .into_par_iter()
        .map(|n| {
            let jac = scope.jacobian(&cap, n, order)?;
            let mut acc = Matrix::zeros(dim, dim);
            for v in vectors(&cap, n)? {
                acc.add_outer_self(&jac.tr_matvec(&v)?)?;
            }
            Ok(acc)
        })
        .collect();
    let mut sum = ordered_sum(terms, dim)?;
    sum.scale_in_place(weight * reduction(net, data, cfg));
    Ok(sum)
}

fn hessian_q<'d>(
    data: &'d Dataset,
    cfg: &LossConfig,
) -> impl Fn(&Capture<'_>, usize) -> Result<Matrix> + Sync + 'd {
    let cfg = *cfg;
    move |cap, n| cfg.hessian(cap.prediction(n), &data.labels()[n])
}

/// Output-space `(w) Σ_c ▲ ▲ᵀ` for the sampled or empirical kinds.
fn outer_q(
    data: &Dataset,
    cfg: LossConfig,
    kind: CurvatureKind,
) -> impl Fn(&Capture<'_>, usize) -> Result<Matrix> + Sync + '_ {
    move |cap, n| {
        let f = cap.prediction(n);
        let mut q = Matrix::zeros(f.len(), f.len());
        for v in backprop_vectors(kind, &cfg, f, &data.labels()[n], n)? {
            q.add_outer_self(&v)?;
        }
        q.scale_in_place(kind.sample_weight());
        Ok(q)
    }
}

fn s_columns(
    data: &Dataset,
    cfg: LossConfig,
) -> impl Fn(&Capture<'_>, usize) -> Result<Vec<Vec<f64>>> + Sync + '_ {
    move |cap, n| {
        backprop_vectors(
            CurvatureKind::GgnTypeII,
            &cfg,
            cap.prediction(n),
            &data.labels()[n],
            n,
        )
    }
}

/// GGN block `R Σₙ Jₙᵀ Hₙ Jₙ` of linear layer `layer`.
pub fn ggn_block(
    net: &Network,
    data: &Dataset,
    cfg: &LossConfig,
    layer: usize,
    order: FlattenOrder,
) -> Result<CurvatureBlock> {
    let matrix = assemble_output_space(
        net,
        data,
        cfg,
        Scope::Layer(layer),
        order,
        hessian_q(data, cfg),
    )?;
    Ok(CurvatureBlock {
        layer_index: layer,
        order,
        matrix,
    })
}

/// Type-II Fisher block assembled from the columns of the Hessian's
/// symmetric factorization, `R Σₙ Σ_c (Jₙᵀ sₙ,c)(Jₙᵀ sₙ,c)ᵀ`.
pub fn type2_fisher_block(
    net: &Network,
    data: &Dataset,
    cfg: &LossConfig,
    layer: usize,
    order: FlattenOrder,
) -> Result<CurvatureBlock> {
    let matrix = assemble_parameter_space(
        net,
        data,
        cfg,
        Scope::Layer(layer),
        order,
        1.0,
        s_columns(data, *cfg),
    )?;
    Ok(CurvatureBlock {
        layer_index: layer,
        order,
        matrix,
    })
}

/// `(R/M) Σₙ Σₘ Jₙᵀ gₙ,ₘ gₙ,ₘᵀ Jₙ` with would-be gradients at labels
/// sampled from the model's predictive distribution.
pub fn mc_fisher_block(
    net: &Network,
    data: &Dataset,
    cfg: &LossConfig,
    layer: usize,
    order: FlattenOrder,
    m_samples: usize,
    seed: u64,
) -> Result<CurvatureBlock> {
    curvature_block(
        net,
        data,
        cfg,
        layer,
        order,
        CurvatureKind::mc(m_samples, seed),
    )
}

/// `R Σₙ Jₙᵀ gₙ gₙᵀ Jₙ` with gradients at the true labels.
pub fn empirical_fisher_block(
    net: &Network,
    data: &Dataset,
    cfg: &LossConfig,
    layer: usize,
    order: FlattenOrder,
) -> Result<CurvatureBlock> {
    curvature_block(net, data, cfg, layer, order, CurvatureKind::EmpiricalFisher)
}

pub fn curvature_block(
    net: &Network,
    data: &Dataset,
    cfg: &LossConfig,
    layer: usize,
    order: FlattenOrder,
    kind: CurvatureKind,
) -> Result<CurvatureBlock> {
    kind.validate()?;
    let matrix = match kind {
        CurvatureKind::GgnTypeII => return ggn_block(net, data, cfg, layer, order),
        _ => assemble_output_space(
            net,
            data,
            cfg,
            Scope::Layer(layer),
            order,
            outer_q(data, *cfg, kind),
        )?,
    };
    Ok(CurvatureBlock {
        layer_index: layer,
        order,
        matrix,
    })
}

/// Full GGN over all linear layers, including cross-layer blocks.
pub fn ggn_full(
    net: &Network,
    data: &Dataset,
    cfg: &LossConfig,
    order: FlattenOrder,
) -> Result<Matrix> {
    check_all_linear(net)?;
    assemble_output_space(net, data, cfg, Scope::Full, order, hessian_q(data, cfg))
}

/// Full type-II Fisher from the Hessian factorization columns.
pub fn type2_fisher_full(
    net: &Network,
    data: &Dataset,
    cfg: &LossConfig,
    order: FlattenOrder,
) -> Result<Matrix> {
    check_all_linear(net)?;
    assemble_parameter_space(
        net,
        data,
        cfg,
        Scope::Full,
        order,
        1.0,
        s_columns(data, *cfg),
    )
}

pub fn curvature_full(
    net: &Network,
    data: &Dataset,
    cfg: &LossConfig,
    order: FlattenOrder,
    kind: CurvatureKind,
) -> Result<Matrix> {
    kind.validate()?;
    match kind {
        CurvatureKind::GgnTypeII => ggn_full(net, data, cfg, order),
        _ => {
            check_all_linear(net)?;
            assemble_output_space(
                net,
                data,
                cfg,
                Scope::Full,
                order,
                outer_q(data, *cfg, kind),
            )
        }
    }
}

fn check_all_linear(net: &Network) -> Result<()> {
    if net.param_count() == 0 {
        return Err(Error::Unsupported("network has no linear layers".into()));
    }
    Ok(())
}

/// `G v` computed per datum as `Jᵀ (H (J v))` without forming `G`.
pub fn ggn_vector_product(
    net: &Network,
    data: &Dataset,
    cfg: &LossConfig,
    order: FlattenOrder,
    v: &[f64],
) -> Result<Vec<f64>> {
    let blocks = net.param_blocks();
    let dim = net.param_count();
    if v.len() != dim {
        return Err(dim_err(format!(
            "vector of length {} for {dim} parameters",
            v.len()
        )));
    }
    let cap = capture(net, data)?;
    let terms: Vec<Result<Vec<f64>>> = (0..data.len())
        .into_par_iter()
        .map(|n| {
            let mut jv = vec![0.0; net.output_dim()];
            for b in &blocks {
                let part = nn::param_jvp(
                    &cap,
                    b.layer_index,
                    n,
                    &v[b.offset..b.offset + b.len],
                    order,
                )?;
                jv.iter_mut().zip(part).for_each(|(a, p)| *a += p);
            }
            let hjv = cfg
                .hessian(cap.prediction(n), &data.labels()[n])?
                .matvec(&jv)?;
            let mut out = Vec::with_capacity(dim);
            for b in &blocks {
                out.extend(nn::param_vjp(&cap, b.layer_index, n, &hjv, order)?);
            }
            Ok(out)
        })
        .collect();
    let mut acc = vec![0.0; dim];
    for t in terms {
        acc.iter_mut().zip(t?).for_each(|(a, x)| *a += x);
    }
    let r = reduction(net, data, cfg);
    Ok(acc.into_iter().map(|x| r * x).collect())
}

/// `R Σₙ Jₙᵀ Hₙ Jₙ` from explicitly supplied Jacobians and criterion
/// Hessians. Usable for any composite `g ∘ h`, not only networks.
pub fn ggn_from_jacobians(
    jacobians: &[Matrix],
    hessians: &[Matrix],
    reduction_factor: f64,
) -> Result<Matrix> {
    if jacobians.len() != hessians.len() || jacobians.is_empty() {
        return Err(dim_err(
            "need one Hessian per Jacobian and at least one term",
        ));
    }
    let dim = jacobians[0].cols();
    let terms = jacobians
        .iter()
        .zip(hessians)
        .map(|(j, h)| j.tr_matmul(&h.matmul(j)?))
        .collect();
    let mut sum = ordered_sum(terms, dim)?;
    sum.scale_in_place(reduction_factor);
    Ok(sum)
}

/// Empirical risk `R Σₙ c(f(xₙ), yₙ)`.
pub fn risk(net: &Network, data: &Dataset, cfg: &LossConfig) -> Result<f64> {
    let cap = capture(net, data)?;
    let mut total = 0.0;
    for n in 0..data.len() {
        total += cfg.value(cap.prediction(n), &data.labels()[n])?;
    }
    Ok(reduction(net, data, cfg) * total)
}

/// Gradient of the empirical risk with respect to the flattened parameters.
pub fn risk_gradient(
    net: &Network,
    data: &Dataset,
    cfg: &LossConfig,
    order: FlattenOrder,
) -> Result<Vec<f64>> {
    let cap = capture(net, data)?;
    let blocks = net.param_blocks();
    let mut acc = vec![0.0; net.param_count()];
    for n in 0..data.len() {
        let g = cfg.gradient(cap.prediction(n), &data.labels()[n])?;
        for b in &blocks {
            let part = nn::param_vjp(&cap, b.layer_index, n, &g, order)?;
            acc[b.offset..b.offset + b.len]
                .iter_mut()
                .zip(part)
                .for_each(|(a, p)| *a += p);
        }
    }
    let r = reduction(net, data, cfg);
    Ok(acc.into_iter().map(|x| r * x).collect())
}

/// Relative central-difference step used for all finite-difference oracles.
pub const FD_STEP: f64 = 1e-5;

/// Central differences of a gradient: column `j` is
/// `(∇(θ + h eⱼ) - ∇(θ - h eⱼ)) / 2h` with `h = FD_STEP · max(1, |θⱼ|)`.
pub fn fd_hessian(
    gradient: impl Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    theta: &[f64],
) -> Result<Matrix> {
    let dim = theta.len();
    let columns: Vec<Result<Vec<f64>>> = (0..dim)
        .into_par_iter()
        .map(|j| {
            let h = FD_STEP * theta[j].abs().max(1.0);
            let mut plus = theta.to_vec();
            let mut minus = theta.to_vec();
            plus[j] += h;
            minus[j] -= h;
            let gp = gradient(&plus)?;
            let gm = gradient(&minus)?;
            if gp.len() != dim || gm.len() != dim {
                return Err(dim_err("gradient length differs from parameter count"));
            }
            Ok(gp
                .iter()
                .zip(&gm)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect())
        })
        .collect();
    let mut out = Matrix::zeros(dim, dim);
    for (j, col) in columns.into_iter().enumerate() {
        for (i, x) in col?.into_iter().enumerate() {
            out[(i, j)] = x;
        }
    }
    Ok(out)
}

/// Full parameter Hessian of the empirical risk by central differences of
/// the analytic gradient. Refuses networks with ReLU.
pub fn hessian_full_fd(
    net: &Network,
    data: &Dataset,
    cfg: &LossConfig,
    order: FlattenOrder,
) -> Result<Matrix> {
    if !net.is_smooth() {
        return Err(Error::Unsupported(
            "finite-difference Hessian needs smooth activations; network contains ReLU".into(),
        ));
    }
    check_all_linear(net)?;
    let theta = net.flatten_params(order);
    fd_hessian(
        |t| {
            let perturbed = net.with_params(t, order)?;
            risk_gradient(&perturbed, data, cfg, order)
        },
        &theta,
    )
}
