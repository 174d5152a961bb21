use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-feature z-score parameters. Population (divide-by-n) standard deviation;
/// constant columns keep a std of 1 so they map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::TooFewRows {
                needed: 2,
                got: rows.len(),
            });
        }
        let dim = check_rectangular(rows)?;
        let n = rows.len() as f64;
        let mut means = vec![0.0; dim];
        for row in rows {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; dim];
        for row in rows {
            for ((s, v), m) in vars.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let stds = vars
            .iter()
            .zip(&means)
            .map(|(&var, &mean)| {
                let std = (var / n).sqrt();
                // rounding residue of a constant column is treated as zero spread
                if std <= 1e-12 * mean.abs().max(1.0) {
                    1.0
                } else {
                    std
                }
            })
            .collect();
        Ok(Self { means, stds })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} features", self.dim()),
                actual: format!("{} features", row.len()),
            });
        }
        Ok(row
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn transform_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

/// Returns the common row length, checking every value is finite.
pub(crate) fn check_rectangular(rows: &[Vec<f64>]) -> Result<usize> {
    let dim = rows.first().map_or(0, Vec::len);
    if dim == 0 {
        return Err(Error::EmptyInput("feature rows are empty".into()));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: format!("{dim} features"),
                actual: format!("{} features in row {r}", row.len()),
            });
        }
        if let Some(col) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { row: r, col });
        }
    }
    Ok(dim)
}
