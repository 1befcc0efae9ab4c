//! Datasets: inputs plus labels, loaded from CSV or generated from a seed.

use std::path::Path;

use crate::error::{dim_err, Error, Result};
use crate::losses::{Criterion, Label};
use crate::noise::{LabelNoise, SeedStream, StreamDomain};
use crate::tensor::{read_matrix_csv, Matrix};

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    inputs: Matrix,
    labels: Vec<Label>,
}

impl Dataset {
    pub fn new(inputs: Matrix, labels: Vec<Label>) -> Result<Self> {
        if inputs.rows() != labels.len() {
            return Err(dim_err(format!(
                "{} inputs but {} labels",
                inputs.rows(),
                labels.len()
            )));
        }
        if inputs.rows() == 0 {
            return Err(dim_err("dataset is empty"));
        }
        for l in &labels {
            if let Label::Target(t) = l {
                if t.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidLabel(
                        "regression target is not finite".into(),
                    ));
                }
            }
        }
        Ok(Self { inputs, labels })
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.cols()
    }

    /// Only the first `n` data.
    pub fn truncate(&self, n: usize) -> Result<Dataset> {
        let n = n.min(self.len());
        Dataset::new(
            self.inputs.block(0, 0, n, self.inputs.cols())?,
            self.labels[..n].to_vec(),
        )
    }

    /// Parses rows of `d_in` inputs followed by the target: `C` reals for
    /// square loss or one integer class index for cross-entropy.
    pub fn from_csv_str(text: &str, d_in: usize, criterion: Criterion) -> Result<Dataset> {
        let table = read_matrix_csv(text.as_bytes())?;
        if table.cols() <= d_in {
            return Err(dim_err(format!(
                "data rows have {} columns, need more than {d_in} input columns",
                table.cols()
            )));
        }
        let inputs = table.block(0, 0, table.rows(), d_in)?;
        let labels = (0..table.rows())
            .map(|i| {
                let tail = &table.row(i)[d_in..];
                match criterion {
                    Criterion::SquareLoss => Ok(Label::Target(tail.to_vec())),
                    Criterion::SoftmaxCrossEntropy => {
                        if tail.len() != 1 || tail[0] < 0.0 || tail[0].fract() != 0.0 {
                            return Err(Error::InvalidLabel(format!(
                                "row {i}: expected one non-negative integer class, got {tail:?}"
                            )));
                        }
                        Ok(Label::Class(tail[0] as usize))
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(inputs, labels)
    }

    pub fn load_csv(path: impl AsRef<Path>, d_in: usize, criterion: Criterion) -> Result<Dataset> {
        Self::from_csv_str(&std::fs::read_to_string(path)?, d_in, criterion)
    }

    /// Standard-normal inputs; standard-normal targets (square loss) or
    /// uniform classes (cross-entropy). Datum `n` depends only on
    /// `(seed, n)`.
    pub fn synthetic(
        seed: u64,
        n: usize,
        d_in: usize,
        d_out: usize,
        criterion: Criterion,
    ) -> Result<Dataset> {
        let mut inputs = Matrix::zeros(n, d_in);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let mut s = SeedStream::new(StreamDomain::Data, seed, i as u64, 0);
            for j in 0..d_in {
                inputs[(i, j)] = s.standard_normal();
            }
            labels.push(match criterion {
                Criterion::SquareLoss => {
                    Label::Target((0..d_out).map(|_| s.standard_normal()).collect())
                }
                Criterion::SoftmaxCrossEntropy => {
                    Label::Class(((s.uniform() * d_out as f64) as usize).min(d_out - 1))
                }
            });
        }
        Dataset::new(inputs, labels)
    }
}
