//! Forecast metrics (MSE, NMSE vs the random-walk baseline, sign
//! accuracy), summary tables and the associated statistical tests.
//!
//! Undefined metrics propagate as explicit `None`/`Degenerate` markers and
//! are rendered as `NA` in output files, never zero-filled.

use crate::error::{Error, Result};
use crate::pipeline::ForecastRecord;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Three-valued sign: 1 for positive, 0 for zero, -1 for negative.
pub fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Mean squared error over resolved records; `None` if nothing resolved.
pub fn mse(records: &[&ForecastRecord]) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for r in records {
        if let Some(y) = r.y_realized {
            let e = y - r.y_hat;
            sum += e * e;
            n += 1;
        }
    }
    if n == 0 {
        None
    } else {
        Some(sum / n as f64)
    }
}

/// `mse_model / mse_rw`; `None` when either side is undefined or the
/// baseline is zero.
pub fn nmse(model_mse: Option<f64>, rw_mse: Option<f64>) -> Option<f64> {
    match (model_mse, rw_mse) {
        (Some(m), Some(b)) if b > 0.0 => Some(m / b),
        _ => None,
    }
}

/// Fraction of resolved records whose realized and predicted signs agree.
pub fn accuracy(records: &[&ForecastRecord]) -> Option<f64> {
    let mut hits = 0usize;
    let mut n = 0usize;
    for r in records {
        if let Some(y) = r.y_realized {
            if sign(y) == sign(r.y_hat) {
                hits += 1;
            }
            n += 1;
        }
    }
    if n == 0 {
        None
    } else {
        Some(hits as f64 / n as f64)
    }
}

/// Outcome of a statistical test; degenerate inputs yield a marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestOutcome {
    Degenerate,
    Computed { statistic: f64, p_value: f64 },
}

impl TestOutcome {
    pub fn statistic(&self) -> Option<f64> {
        match self {
            TestOutcome::Computed { statistic, .. } => Some(*statistic),
            TestOutcome::Degenerate => None,
        }
    }

    pub fn p_value(&self) -> Option<f64> {
        match self {
            TestOutcome::Computed { p_value, .. } => Some(*p_value),
            TestOutcome::Degenerate => None,
        }
    }

    pub fn significant_at(&self, alpha: f64) -> bool {
        matches!(self, TestOutcome::Computed { p_value, .. } if *p_value < alpha)
    }
}

fn sample_moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Wald test of H0: mean = 1, with a standard-normal reference.
pub fn wald_test_vs_one(samples: &[f64]) -> TestOutcome {
    if samples.len() < 2 {
        return TestOutcome::Degenerate;
    }
    let (mean, var) = sample_moments(samples);
    if !(var > 0.0) || !var.is_finite() {
        return TestOutcome::Degenerate;
    }
    let se = (var / samples.len() as f64).sqrt();
    let w = (mean - 1.0) / se;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let p = 2.0 * (1.0 - normal.cdf(w.abs()));
    TestOutcome::Computed { statistic: w, p_value: p }
}

/// Two-sample t-test from summary moments. Welch by default; the pooled
/// variant assumes equal variances.
pub fn two_sample_t_from_moments(
    mean_a: f64,
    var_a: f64,
    n_a: usize,
    mean_b: f64,
    var_b: f64,
    n_b: usize,
    pooled: bool,
) -> TestOutcome {
    if n_a < 2 || n_b < 2 {
        return TestOutcome::Degenerate;
    }
    if !(var_a.is_finite() && var_b.is_finite()) || (var_a <= 0.0 && var_b <= 0.0) {
        return TestOutcome::Degenerate;
    }
    let (na, nb) = (n_a as f64, n_b as f64);
    let (t, df) = if pooled {
        let sp2 = ((na - 1.0) * var_a + (nb - 1.0) * var_b) / (na + nb - 2.0);
        let t = (mean_a - mean_b) / (sp2 * (1.0 / na + 1.0 / nb)).sqrt();
        (t, na + nb - 2.0)
    } else {
        let se2 = var_a / na + var_b / nb;
        let t = (mean_a - mean_b) / se2.sqrt();
        // Welch-Satterthwaite degrees of freedom.
        let df = se2 * se2
            / ((var_a / na).powi(2) / (na - 1.0) + (var_b / nb).powi(2) / (nb - 1.0));
        (t, df)
    };
    if !t.is_finite() || !(df > 0.0) {
        return TestOutcome::Degenerate;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid dof");
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    TestOutcome::Computed { statistic: t, p_value: p }
}

/// Two-sample t-test for equal means on raw samples.
pub fn two_sample_t_test(a: &[f64], b: &[f64], pooled: bool) -> TestOutcome {
    if a.len() < 2 || b.len() < 2 {
        return TestOutcome::Degenerate;
    }
    let (ma, va) = sample_moments(a);
    let (mb, vb) = sample_moments(b);
    two_sample_t_from_moments(ma, va, a.len(), mb, vb, b.len(), pooled)
}

/// Table-1-style summary of a sample: count, mean, std, min, quartiles,
/// max and standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub se: f64,
}

/// Quantile by linear interpolation on the sorted sample.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn summary_stats(samples: &[f64]) -> Option<SummaryStats> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    Some(SummaryStats {
        count: n,
        mean,
        std,
        min: sorted[0],
        q25: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q75: quantile(&sorted, 0.75),
        max: sorted[n - 1],
        se: if n > 0 { std / (n as f64).sqrt() } else { 0.0 },
    })
}

/// Metrics for one (model, target, horizon) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMetrics {
    pub model_id: String,
    pub target_id: String,
    pub horizon: usize,
    pub count: usize,
    pub mse: Option<f64>,
    pub nmse: Option<f64>,
    pub accuracy: Option<f64>,
}

/// Per-model aggregate over all (target, horizon) cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub model_id: String,
    pub targets: usize,
    pub nmse: Option<SummaryStats>,
    pub accuracy: Option<SummaryStats>,
    /// Wald test of mean NMSE against 1.
    pub wald_vs_one: TestOutcome,
}

/// The full evaluation output: cells, per-model summaries, pairwise tests
/// and the per-horizon NMSE curve.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub cells: Vec<CellMetrics>,
    pub summaries: Vec<ModelSummary>,
    /// (model_a, model_b, Welch statistic, p-value) on NMSE samples.
    pub pairwise_nmse_tests: Vec<(String, String, TestOutcome)>,
    /// (model, horizon, mean NMSE across targets).
    pub nmse_by_horizon: Vec<(String, usize, Option<f64>)>,
    pub baseline_id: String,
}

/// Aggregates forecast records into the full report. `baseline_id` names
/// the model whose per-cell MSE normalises the others (usually `rw`).
pub fn build_report(records: &[ForecastRecord], baseline_id: &str) -> EvaluationReport {
    // Group by (model, target, horizon); BTreeMap keeps output order stable.
    let mut groups: BTreeMap<(String, String, usize), Vec<&ForecastRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.model_id.clone(), r.target_id.clone(), r.horizon))
            .or_default()
            .push(r);
    }
    // Baseline MSE per (target, horizon).
    let mut baseline_mse: BTreeMap<(String, usize), Option<f64>> = BTreeMap::new();
    for ((model, target, horizon), recs) in &groups {
        if model == baseline_id {
            baseline_mse.insert((target.clone(), *horizon), mse(recs));
        }
    }

    let mut cells = Vec::new();
    for ((model, target, horizon), recs) in &groups {
        let cell_mse = mse(recs);
        let rw = baseline_mse.get(&(target.clone(), *horizon)).copied().flatten();
        cells.push(CellMetrics {
            model_id: model.clone(),
            target_id: target.clone(),
            horizon: *horizon,
            count: recs.iter().filter(|r| r.y_realized.is_some()).count(),
            mse: cell_mse,
            nmse: nmse(cell_mse, rw),
            accuracy: accuracy(recs),
        });
    }

    let mut models: Vec<String> = cells.iter().map(|c| c.model_id.clone()).collect();
    models.dedup();
    models.sort();
    models.dedup();

    let mut summaries = Vec::new();
    let mut nmse_samples_by_model: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for m in &models {
        let mcells: Vec<&CellMetrics> = cells.iter().filter(|c| &c.model_id == m).collect();
        let nmse_samples: Vec<f64> = mcells.iter().filter_map(|c| c.nmse).collect();
        let acc_samples: Vec<f64> = mcells.iter().filter_map(|c| c.accuracy).collect();
        let mut targets: Vec<&str> = mcells.iter().map(|c| c.target_id.as_str()).collect();
        targets.sort();
        targets.dedup();
        summaries.push(ModelSummary {
            model_id: m.clone(),
            targets: targets.len(),
            nmse: summary_stats(&nmse_samples),
            accuracy: summary_stats(&acc_samples),
            wald_vs_one: wald_test_vs_one(&nmse_samples),
        });
        nmse_samples_by_model.insert(m.clone(), nmse_samples);
    }

    let mut pairwise = Vec::new();
    for i in 0..models.len() {
        for j in (i + 1)..models.len() {
            let a = &nmse_samples_by_model[&models[i]];
            let b = &nmse_samples_by_model[&models[j]];
            pairwise.push((models[i].clone(), models[j].clone(), two_sample_t_test(a, b, false)));
        }
    }

    let mut nmse_by_horizon = Vec::new();
    let mut horizons: Vec<usize> = cells.iter().map(|c| c.horizon).collect();
    horizons.sort_unstable();
    horizons.dedup();
    for m in &models {
        for &h in &horizons {
            let samples: Vec<f64> = cells
                .iter()
                .filter(|c| &c.model_id == m && c.horizon == h)
                .filter_map(|c| c.nmse)
                .collect();
            let mean = if samples.is_empty() {
                None
            } else {
                Some(samples.iter().sum::<f64>() / samples.len() as f64)
            };
            nmse_by_horizon.push((m.clone(), h, mean));
        }
    }

    EvaluationReport {
        cells,
        summaries,
        pairwise_nmse_tests: pairwise,
        nmse_by_horizon,
        baseline_id: baseline_id.to_string(),
    }
}

/// Renders a float with 6 significant digits; `NA` for undefined markers.
pub fn format_sig6(x: Option<f64>) -> String {
    match x {
        None => "NA".to_string(),
        Some(v) if !v.is_finite() => {
            if v.is_nan() {
                "NA".to_string()
            } else if v > 0.0 {
                "inf".to_string()
            } else {
                "-inf".to_string()
            }
        }
        Some(v) if v == 0.0 => "0".to_string(),
        Some(v) => {
            let magnitude = v.abs().log10().floor() as i32;
            let decimals = (5 - magnitude).max(0) as usize;
            format!("{:.*}", decimals, v)
        }
    }
}

/// Writes the summary tables and the per-horizon NMSE curve as CSV.
///
/// Emits `summary_nmse.csv` (Table-1 row schema), `summary_accuracy.csv`
/// (Table-2 schema) and `nmse_by_horizon.csv` for external plotting.
/// Returns the paths written.
pub fn emit_report(report: &EvaluationReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    if report.summaries.is_empty() {
        log::warn!("empty evaluation report; writing headers-only files");
    }

    // Table-1 shape: one column block per model, rows are the statistics.
    let nmse_path = out_dir.join("summary_nmse.csv");
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&nmse_path)?);
        writeln!(
            f,
            "model,targets,count,mean,std,min,q25,median,q75,max,se,wald_statistic,wald_p_value"
        )?;
        for s in &report.summaries {
            let st = s.nmse;
            writeln!(
                f,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                s.model_id,
                s.targets,
                st.map_or(0, |v| v.count),
                format_sig6(st.map(|v| v.mean)),
                format_sig6(st.map(|v| v.std)),
                format_sig6(st.map(|v| v.min)),
                format_sig6(st.map(|v| v.q25)),
                format_sig6(st.map(|v| v.median)),
                format_sig6(st.map(|v| v.q75)),
                format_sig6(st.map(|v| v.max)),
                format_sig6(st.map(|v| v.se)),
                format_sig6(s.wald_vs_one.statistic()),
                format_sig6(s.wald_vs_one.p_value()),
            )?;
        }
    }
    written.push(nmse_path);

    let acc_path = out_dir.join("summary_accuracy.csv");
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&acc_path)?);
        writeln!(f, "model,targets,count,mean,std,min,q25,median,q75,max")?;
        for s in &report.summaries {
            let st = s.accuracy;
            writeln!(
                f,
                "{},{},{},{},{},{},{},{},{},{}",
                s.model_id,
                s.targets,
                st.map_or(0, |v| v.count),
                format_sig6(st.map(|v| v.mean)),
                format_sig6(st.map(|v| v.std)),
                format_sig6(st.map(|v| v.min)),
                format_sig6(st.map(|v| v.q25)),
                format_sig6(st.map(|v| v.median)),
                format_sig6(st.map(|v| v.q75)),
                format_sig6(st.map(|v| v.max)),
            )?;
        }
    }
    written.push(acc_path);

    let curve_path = out_dir.join("nmse_by_horizon.csv");
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&curve_path)?);
        writeln!(f, "model,horizon,mean_nmse")?;
        for (m, h, v) in &report.nmse_by_horizon {
            writeln!(f, "{},{},{}", m, h, format_sig6(*v))?;
        }
    }
    written.push(curve_path);

    let tests_path = out_dir.join("pairwise_tests.csv");
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&tests_path)?);
        writeln!(f, "model_a,model_b,welch_statistic,welch_p_value")?;
        for (a, b, t) in &report.pairwise_nmse_tests {
            writeln!(f, "{},{},{},{}", a, b, format_sig6(t.statistic()), format_sig6(t.p_value()))?;
        }
    }
    written.push(tests_path);

    Ok(written)
}

/// Validates that an output directory is writable before a long run.
pub fn check_writable(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let probe = dir.join(".write_probe");
    std::fs::write(&probe, b"ok").map_err(Error::Io)?;
    std::fs::remove_file(&probe)?;
    Ok(())
}
