//! Per-target feature selection: forward stepwise R² maximisation with
//! variance-inflation-factor admission.
//!
//! Selection runs on training data only; the chosen subset is held fixed
//! for the whole test period.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Result of selecting external-input features for one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub target_id: String,
    /// Column indices into the candidate matrix, in selection order.
    pub ordered_features: Vec<usize>,
    /// In-sample R² after each inclusion; non-decreasing.
    pub r2_path: Vec<f64>,
    /// Final per-feature VIFs, aligned with `ordered_features`.
    pub vifs: Vec<f64>,
}

impl FeatureSelection {
    pub fn is_empty(&self) -> bool {
        self.ordered_features.is_empty()
    }

    /// One audit line: target, ordered features, R² path, VIFs.
    pub fn audit_row(&self, feature_names: &[String]) -> String {
        let feats: Vec<&str> = self
            .ordered_features
            .iter()
            .map(|&j| feature_names[j].as_str())
            .collect();
        format!(
            "{}\t[{}]\t[{}]\t[{}]",
            self.target_id,
            feats.join(","),
            self.r2_path.iter().map(|r| format!("{:.6}", r)).collect::<Vec<_>>().join(","),
            self.vifs.iter().map(|v| format!("{:.4}", v)).collect::<Vec<_>>().join(","),
        )
    }
}

/// Stepwise/VIF hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionParams {
    pub max_features: usize,
    pub min_r2_gain: f64,
    pub vif_threshold: f64,
}

impl Default for SelectionParams {
    fn default() -> Self {
        SelectionParams { max_features: 5, min_r2_gain: 0.005, vif_threshold: 5.0 }
    }
}

struct OlsFit {
    r2: f64,
    rank_deficient: bool,
}

// In-sample R² of an intercepted OLS fit of y on the given columns of x.
fn ols_r2(x: &DMatrix<f64>, cols: &[usize], y: &DVector<f64>) -> Result<OlsFit> {
    let n = x.nrows();
    let m = cols.len();
    let y_mean = y.mean();
    let sst: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    if sst <= 0.0 {
        return Err(Error::Selection("target has zero variance".into()));
    }
    let mut design = DMatrix::zeros(n, m + 1);
    for i in 0..n {
        design[(i, 0)] = 1.0;
        for (c, &j) in cols.iter().enumerate() {
            design[(i, c + 1)] = x[(i, j)];
        }
    }
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let eps = smax * 1e-10;
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let rank_deficient = rank < m + 1;
    let theta = svd
        .solve(y, eps)
        .map_err(|e| Error::Solver(format!("least squares failed: {}", e)))?;
    let resid = y - design * theta;
    let ssr: f64 = resid.iter().map(|r| r * r).sum();
    let r2 = (1.0 - ssr / sst).clamp(0.0, 1.0);
    Ok(OlsFit { r2, rank_deficient })
}

/// Greedy forward stepwise selection maximising in-sample R².
///
/// Stops at `max_features` or when the best R² gain drops below
/// `min_r2_gain`. Candidates perfectly collinear with the chosen set are
/// skipped. Ties break toward the lowest column index. The returned
/// selection has empty `vifs`.
pub fn forward_stepwise(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    max_features: usize,
    min_r2_gain: f64,
) -> Result<FeatureSelection> {
    stepwise_impl(x, y, max_features, min_r2_gain, None)
}

/// Per-feature variance inflation factors: `VIF_j = 1 / (1 - R²_j)` with
/// `R²_j` from regressing column j on the remaining columns (with
/// intercept). A perfectly collinear column yields `f64::INFINITY`.
/// A single column is defined to have VIF 1.
pub fn vif(x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let d = x.ncols();
    if d == 0 {
        return Ok(Vec::new());
    }
    if d == 1 {
        return Ok(vec![1.0]);
    }
    if x.nrows() <= d {
        return Err(Error::Sizing(format!(
            "VIF requires more rows ({}) than features ({})",
            x.nrows(),
            d
        )));
    }
    let mut out = Vec::with_capacity(d);
    for j in 0..d {
        let others: Vec<usize> = (0..d).filter(|&c| c != j).collect();
        let target = DVector::from_fn(x.nrows(), |i, _| x[(i, j)]);
        let r2 = match ols_r2(x, &others, &target) {
            Ok(fit) => fit.r2,
            // Constant column: uncorrelated with everything by convention.
            Err(Error::Selection(_)) => 0.0,
            Err(e) => return Err(e),
        };
        if r2 >= 1.0 - 1e-12 {
            out.push(f64::INFINITY);
        } else {
            out.push(1.0 / (1.0 - r2));
        }
    }
    Ok(out)
}

/// Forward stepwise selection with VIF admission: a candidate joins only if
/// afterwards every chosen feature's VIF stays within `vif_threshold`.
///
/// An empty result is not an error; the downstream model degrades to a
/// bias-only head.
pub fn select_features(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    params: &SelectionParams,
) -> Result<FeatureSelection> {
    let mut sel = stepwise_impl(x, y, params.max_features, params.min_r2_gain, Some(params.vif_threshold))?;
    if sel.is_empty() {
        log::warn!("feature selection returned no admissible features; model degrades to bias-only");
    } else {
        let sub = gather_columns(x, &sel.ordered_features);
        sel.vifs = vif(&sub)?;
        debug_assert!(sel.vifs.iter().all(|&v| v <= params.vif_threshold));
    }
    Ok(sel)
}

fn gather_columns(x: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), cols.len(), |i, c| x[(i, cols[c])])
}

fn stepwise_impl(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    max_features: usize,
    min_r2_gain: f64,
    vif_threshold: Option<f64>,
) -> Result<FeatureSelection> {
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!(
            "feature rows ({}) != target length ({})",
            x.nrows(),
            y.len()
        )));
    }
    if x.nrows() <= max_features + 1 {
        return Err(Error::Sizing(format!(
            "need more than max_features + 1 = {} rows, got {}",
            max_features + 1,
            x.nrows()
        )));
    }
    // Fail fast on a degenerate target.
    let y_mean = y.mean();
    if y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() <= 0.0 {
        return Err(Error::Selection("target has zero variance".into()));
    }

    let mut chosen: Vec<usize> = Vec::new();
    let mut r2_path: Vec<f64> = Vec::new();
    let mut current_r2 = 0.0;

    while chosen.len() < max_features {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..x.ncols() {
            if chosen.contains(&j) {
                continue;
            }
            let mut trial = chosen.clone();
            trial.push(j);
            let fit = ols_r2(x, &trial, y)?;
            if fit.rank_deficient {
                continue; // collinear with the chosen set
            }
            if let Some(threshold) = vif_threshold {
                if trial.len() >= 2 {
                    let sub = gather_columns(x, &trial);
                    let vifs = vif(&sub)?;
                    if vifs.iter().any(|&v| !(v <= threshold)) {
                        continue;
                    }
                }
            }
            // Strictly-greater keeps the lowest index on ties.
            if best.map_or(true, |(_, r)| fit.r2 > r) {
                best = Some((j, fit.r2));
            }
        }
        let Some((j, r2)) = best else { break };
        if r2 - current_r2 < min_r2_gain {
            break;
        }
        chosen.push(j);
        r2_path.push(r2);
        current_r2 = r2;
        if current_r2 >= 1.0 - 1e-12 {
            break;
        }
    }

    Ok(FeatureSelection {
        target_id: String::new(),
        ordered_features: chosen,
        r2_path,
        vifs: Vec::new(),
    })
}
