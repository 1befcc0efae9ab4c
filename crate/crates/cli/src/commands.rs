use anyhow::{bail, Context, Result};
use curvkit::curvature::{
    curvature_block, curvature_full, ggn_full, hessian_full_fd, verify_curvature,
};
use curvkit::export::{
    write_heatmap, write_json, write_matrix_with_metadata, CurvatureMetadata, KfacExportMetadata,
};
use curvkit::kfac::{kfac_block, kfac_residual, relative_residual, ResidualMetric};
use curvkit::tensor::{save_matrix_csv, save_table_csv};
use curvkit::{CurvatureKind, Matrix};

use crate::args::{Common, Experiment, KindArg};

const FD_NOTE: &str = "central differences of the analytic gradient, step 1e-5*max(1,|theta|); \
                       needs smooth activations, so Hessian figures use tanh where the other curvatures use ReLU";

pub fn curvature(common: &Common, layer: Option<usize>, heatmap: bool) -> Result<()> {
    let kind = common.curvature_kind()?;
    let Experiment {
        net,
        data,
        loss,
        order,
    } = common.load()?;
    let r = loss.reduction_factor(data.len(), loss.label_dim(net.output_dim()));

    let matrix = match (kind, layer) {
        (Some(kind), Some(l)) => curvature_block(&net, &data, &loss, l, order, kind)?.matrix,
        (Some(kind), None) => curvature_full(&net, &data, &loss, order, kind)?,
        (None, _) => {
            let full = hessian_full_fd(&net, &data, &loss, order)?;
            match layer {
                None => full,
                Some(l) => {
                    let block = net
                        .param_blocks()
                        .into_iter()
                        .find(|b| b.layer_index == l)
                        .with_context(|| format!("layer {l} has no parameters"))?;
                    full.block(block.offset, block.offset, block.len, block.len)?
                }
            }
        }
    };
    if kind.is_some() {
        verify_curvature(&matrix)?;
    }

    let name = kind.map_or("hessian-fd", |k| k.name());
    let mut meta = CurvatureMetadata::new(name, kind, order, r).with_layout(&net, layer);
    if kind.is_none() {
        meta.notes.push(FD_NOTE.into());
    }
    let stem = match layer {
        Some(l) => format!("{name}_{}_layer{l}", order.as_str()),
        None => format!("{name}_{}", order.as_str()),
    };
    write_matrix_with_metadata(&common.out, &stem, &matrix, &meta)?;
    if heatmap {
        write_heatmap(&matrix, common.out.join(format!("{stem}.pgm")))?;
    }
    Ok(())
}

pub fn kfac(common: &Common, heatmap: bool) -> Result<()> {
    let Some(kind) = common.curvature_kind()? else {
        bail!("KFAC is defined for ggn, fisher-mc and fisher-emp, not hessian-fd");
    };
    let Experiment {
        net,
        data,
        loss,
        order,
    } = common.load()?;
    let layers = net.linear_layer_indices();
    let mut summary = Matrix::zeros(layers.len(), 4);
    for (row, &l) in layers.iter().enumerate() {
        let block = kfac_block(&net, &data, &loss, l, kind, order)?;
        let exact = curvature_block(&net, &data, &loss, l, order, kind)?;
        let approx = block.materialize()?;
        verify_curvature(&approx)?;
        verify_curvature(&exact.matrix)?;
        save_matrix_csv(
            &block.input_factor,
            common.out.join(format!("layer{l}_A.csv")),
        )?;
        save_matrix_csv(
            &block.grad_factor,
            common.out.join(format!("layer{l}_B.csv")),
        )?;
        write_json(
            &KfacExportMetadata::new(&block, kind),
            common.out.join(format!("layer{l}_kfac.json")),
        )?;
        if heatmap {
            write_heatmap(&approx, common.out.join(format!("layer{l}_kfac.pgm")))?;
            write_heatmap(
                &exact.matrix,
                common.out.join(format!("layer{l}_exact.pgm")),
            )?;
        }
        summary[(row, 0)] = l as f64;
        summary[(row, 1)] = block.dim() as f64;
        summary[(row, 2)] = kfac_residual(&block, &exact, ResidualMetric::Frobenius)?;
        summary[(row, 3)] = kfac_residual(&block, &exact, ResidualMetric::Spectral)?;
    }
    save_table_csv(
        &["layer", "dim", "frobenius", "spectral"],
        &summary,
        common.out.join("summary.csv"),
    )?;
    Ok(())
}

pub fn mc_sweep(common: &Common, m_grid: &[usize], seeds: &[u64]) -> Result<()> {
    if common.kind != KindArg::Ggn && common.kind != KindArg::FisherMc {
        bail!("mc-sweep compares the Monte Carlo Fisher against the GGN; --kind must be ggn or fisher-mc");
    }
    if m_grid.is_empty() || m_grid.contains(&0) || m_grid.windows(2).any(|w| w[0] >= w[1]) {
        bail!("--m-grid must be a strictly ascending list of positive counts");
    }
    if seeds.is_empty() {
        bail!("--seeds must list at least one seed");
    }
    let Experiment {
        net,
        data,
        loss,
        order,
    } = common.load()?;
    let exact = ggn_full(&net, &data, &loss, order)?;
    verify_curvature(&exact)?;
    let mut rows = Matrix::zeros(m_grid.len() * seeds.len(), 4);
    let mut row = 0;
    for &m in m_grid {
        for &seed in seeds {
            let mc = curvature_full(&net, &data, &loss, order, CurvatureKind::mc(m, seed))?;
            rows[(row, 0)] = m as f64;
            rows[(row, 1)] = seed as f64;
            rows[(row, 2)] = relative_residual(&mc, &exact, ResidualMetric::Spectral)?;
            rows[(row, 3)] = relative_residual(&mc, &exact, ResidualMetric::Frobenius)?;
            row += 1;
        }
    }
    save_table_csv(
        &["M", "seed", "spectral", "frobenius"],
        &rows,
        common.out.join("mc_sweep.csv"),
    )?;
    Ok(())
}
