//! Per-feature standardization, frozen at the train/test boundary.

use crate::error::{Error, Result};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Train-set mean/scale per feature; applied unchanged to test rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    /// Fits means and standard deviations column-wise on training rows.
    /// Zero-variance columns get unit scale (pass-through after centering).
    pub fn fit(rows: &[DVector<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Sizing("cannot fit a standardizer on zero rows".into()));
        };
        let d = first.len();
        let n = rows.len() as f64;
        let mut means = vec![0.0; d];
        for row in rows {
            if row.len() != d {
                return Err(Error::Shape(format!("row length {} != {}", row.len(), d)));
            }
            for j in 0..d {
                means[j] += row[j];
            }
        }
        for m in means.iter_mut() {
            *m /= n;
        }
        let mut scales = vec![0.0; d];
        for row in rows {
            for j in 0..d {
                let c = row[j] - means[j];
                scales[j] += c * c;
            }
        }
        for s in scales.iter_mut() {
            let var = *s / n;
            *s = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Ok(Standardizer { means, scales })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, row: &DVector<f64>) -> Result<DVector<f64>> {
        if row.len() != self.dim() {
            return Err(Error::Shape(format!(
                "feature row length {} != standardizer dim {}",
                row.len(),
                self.dim()
            )));
        }
        Ok(DVector::from_fn(self.dim(), |j, _| (row[j] - self.means[j]) / self.scales[j]))
    }
}
