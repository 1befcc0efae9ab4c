//! Plain-text matrix exchange: one row per line, comma-separated. Lines
//! starting with `#` are comments, which is how tables carry column names.
//! Values are written in their shortest exactly-round-tripping decimal form.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::Matrix;
use crate::error::{Error, Result};

pub fn write_matrix_csv<W: Write>(m: &Matrix, mut w: W) -> Result<()> {
    let mut line = String::new();
    for i in 0..m.rows() {
        line.clear();
        for (j, x) in m.row(i).iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format_value(*x));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

fn format_value(x: f64) -> String {
    if x == 0.0 {
        // drop the sign of negative zero so output stays stable
        "0".to_string()
    } else {
        let s = format!("{x:?}");
        match s.strip_suffix(".0") {
            Some(int) => int.to_string(),
            None => s,
        }
    }
}

pub fn read_matrix_csv<R: Read>(r: R) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: `{s}`: {e}", lineno + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Matrix::from_rows(&rows)
}

pub fn save_matrix_csv(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_matrix_csv(m, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Like [`save_matrix_csv`] with a leading `# name,name,…` comment line.
pub fn save_table_csv(columns: &[&str], m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = format!("# {}\n", columns.join(",")).into_bytes();
    write_matrix_csv(m, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<Matrix> {
    read_matrix_csv(fs::File::open(path)?)
}
