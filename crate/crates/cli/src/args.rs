use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use curvkit::losses::{Criterion, LossConfig, Reduction};
use curvkit::nn::NetworkSpec;
use curvkit::{CurvatureKind, Dataset, FlattenOrder, Network};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LossArg {
    Mse,
    Ce,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ReductionArg {
    Sum,
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Ggn,
    FisherMc,
    FisherEmp,
    HessianFd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FlattenArg {
    Cvec,
    Rvec,
}

impl From<FlattenArg> for FlattenOrder {
    fn from(f: FlattenArg) -> Self {
        match f {
            FlattenArg::Cvec => FlattenOrder::Cvec,
            FlattenArg::Rvec => FlattenOrder::Rvec,
        }
    }
}

/// `--data` value: a CSV path or `synthetic:seed=S,n=N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DataSource {
    File(PathBuf),
    Synthetic { seed: u64, n: usize },
}

impl FromStr for DataSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let Some(spec) = s.strip_prefix("synthetic:") else {
            return Ok(DataSource::File(PathBuf::from(s)));
        };
        let (mut seed, mut n) = (0, None);
        for part in spec.split(',').filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{part}`"))?;
            match key.trim() {
                "seed" => seed = value.trim().parse().map_err(|e| format!("seed: {e}"))?,
                "n" => n = Some(value.trim().parse().map_err(|e| format!("n: {e}"))?),
                other => return Err(format!("unknown synthetic data key `{other}`")),
            }
        }
        match n {
            Some(0) | None => Err("synthetic data needs n=N with N > 0".into()),
            Some(n) => Ok(DataSource::Synthetic { seed, n }),
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Args, Debug)]
pub struct Common {
    /// Network description (JSON).
    #[arg(long)]
    pub net: PathBuf,
    /// CSV file (inputs then target columns) or `synthetic:seed=S,n=N`.
    #[arg(long)]
    pub data: DataSource,
    #[arg(long, value_enum, default_value = "mse")]
    pub loss: LossArg,
    #[arg(long, value_enum, default_value = "mean")]
    pub reduction: ReductionArg,
    #[arg(long, value_enum, default_value = "ggn")]
    pub kind: KindArg,
    #[arg(long, value_enum, default_value = "cvec")]
    pub flatten: FlattenArg,
    /// Labels sampled per datum for `fisher-mc`.
    #[arg(long, default_value_t = 1)]
    pub mc_samples: usize,
    /// Seed for label sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

pub struct Experiment {
    pub net: Network,
    pub data: Dataset,
    pub loss: LossConfig,
    pub order: FlattenOrder,
}

impl Common {
    pub fn criterion(&self) -> Criterion {
        match self.loss {
            LossArg::Mse => Criterion::SquareLoss,
            LossArg::Ce => Criterion::SoftmaxCrossEntropy,
        }
    }

    pub fn loss_config(&self) -> LossConfig {
        let reduction = match self.reduction {
            ReductionArg::Sum => Reduction::Sum,
            ReductionArg::Mean => Reduction::Mean,
        };
        LossConfig::new(self.criterion(), reduction)
    }

    /// The curvature selected by `--kind`; `None` for the FD Hessian.
    pub fn curvature_kind(&self) -> Result<Option<CurvatureKind>> {
        Ok(match self.kind {
            KindArg::Ggn => Some(CurvatureKind::GgnTypeII),
            KindArg::FisherEmp => Some(CurvatureKind::EmpiricalFisher),
            KindArg::FisherMc => {
                if self.mc_samples == 0 {
                    bail!("--mc-samples must be at least 1");
                }
                Some(CurvatureKind::mc(self.mc_samples, self.seed))
            }
            KindArg::HessianFd => None,
        })
    }

    pub fn load(&self) -> Result<Experiment> {
        let net = NetworkSpec::load(&self.net)
            .and_then(|s| s.build())
            .with_context(|| format!("loading network {}", self.net.display()))?;
        let criterion = self.criterion();
        let data = match &self.data {
            DataSource::File(path) => Dataset::load_csv(path, net.input_dim(), criterion)
                .with_context(|| format!("loading data {}", path.display()))?,
            DataSource::Synthetic { seed, n } => {
                Dataset::synthetic(*seed, *n, net.input_dim(), net.output_dim(), criterion)?
            }
        };
        std::fs::create_dir_all(&self.out)
            .with_context(|| format!("creating output directory {}", self.out.display()))?;
        Ok(Experiment {
            net,
            data,
            loss: self.loss_config(),
            order: self.flatten.into(),
        })
    }
}
