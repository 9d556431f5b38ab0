//! Experiment orchestration: build the model bank over all targets and
//! horizons, run train then prequential test, and aggregate the forecast
//! log into the evaluation report.

pub mod config;
pub mod forecasters;
pub mod records;

pub use config::{DataSource, ExperimentConfig, RwMode, SyntheticKind};
pub use forecasters::{random_walk_forecast, Forecaster};
pub use records::{read_forecast_log, write_forecast_log, ForecastRecord};

use crate::data::{
    self, compute_returns, load_csv, PricePanel, ReturnSeries,
};
use crate::error::{Error, Result};
use crate::evaluation::{build_report, emit_report, EvaluationReport};
use crate::featsel::{select_features, FeatureSelection};
use crate::rbfnet::{RbfNetConfig, RbfNetModel};
use forecasters::{EwrlsRawForecaster, RandomWalkForecaster, RbfNetForecaster, RidgeRawForecaster};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

/// Per-target plan: the target column and its frozen feature columns.
#[derive(Debug, Clone)]
pub struct TargetPlan {
    pub target_col: usize,
    pub target_id: String,
    /// Absolute columns of the selected features, in selection order.
    pub feature_cols: Vec<usize>,
    /// The selection audit (R² path, VIFs); `ordered_features` holds
    /// absolute column indices after remapping.
    pub selection: FeatureSelection,
}

/// Everything a run produces, before any files are written.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<ForecastRecord>,
    pub report: EvaluationReport,
    pub plans: Vec<TargetPlan>,
    pub instruments: Vec<String>,
    /// Train rows (returns); test starts here.
    pub boundary: usize,
    pub n_returns: usize,
    pub failed_cells: Vec<String>,
    /// (file name, serialized checkpoint) when checkpoints are enabled.
    pub checkpoints: Vec<(String, String)>,
}

/// Materializes the configured data source into a price panel.
pub fn build_panel(cfg: &ExperimentConfig) -> Result<PricePanel> {
    match cfg.data.source {
        DataSource::Csv => load_csv(Path::new(&cfg.data.csv_path)),
        DataSource::Synthetic => {
            let syn = &cfg.data.synthetic;
            match syn.kind {
                SyntheticKind::JumpDiffusion => data::synthesize_jump_diffusion(&syn.jump_diffusion),
                SyntheticKind::FactorAr1 => data::synthesize_factor_ar1(&syn.factor_ar1),
                SyntheticKind::RegimeFlip => data::synthesize_regime_flip(&syn.regime_flip),
            }
        }
    }
}

fn features_at(series: &ReturnSeries, cols: &[usize], t: usize) -> Option<DVector<f64>> {
    let mut out = DVector::zeros(cols.len());
    for (i, &c) in cols.iter().enumerate() {
        out[i] = series.value(t, c)?;
    }
    Some(out)
}

// splitmix64-style mixing for per-cell RNG seeds.
fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9e3779b97f4a7c15) ^ b.wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Runs feature selection for every target on the training window
/// (h = 1 alignment), reusing the result across horizons.
fn build_plans(series: &ReturnSeries, boundary: usize, cfg: &ExperimentConfig) -> Result<Vec<TargetPlan>> {
    let d = series.n_instruments();
    let mut plans = Vec::with_capacity(d);
    for target_col in 0..d {
        let candidates: Vec<usize> = (0..d).filter(|&c| c != target_col).collect();
        // Complete training rows: features at t, target at t+1.
        let mut xs: Vec<DVector<f64>> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for t in 0..boundary.saturating_sub(1) {
            let (Some(x), Some(y)) =
                (features_at(series, &candidates, t), series.value(t + 1, target_col))
            else {
                continue;
            };
            xs.push(x);
            ys.push(y);
        }
        let target_id = series.instruments[target_col].clone();
        let selection = if xs.len() <= cfg.selection.max_features + 1 || candidates.is_empty() {
            log::warn!(
                "target {}: only {} complete training rows; skipping feature selection",
                target_id,
                xs.len()
            );
            FeatureSelection {
                target_id: target_id.clone(),
                ordered_features: Vec::new(),
                r2_path: Vec::new(),
                vifs: Vec::new(),
            }
        } else {
            let x = DMatrix::from_fn(xs.len(), candidates.len(), |i, j| xs[i][j]);
            let y = DVector::from_column_slice(&ys);
            let mut sel = match select_features(&x, &y, &cfg.selection) {
                Ok(sel) => sel,
                Err(Error::Selection(msg)) => {
                    log::warn!("target {}: {}; falling back to empty selection", target_id, msg);
                    FeatureSelection {
                        target_id: target_id.clone(),
                        ordered_features: Vec::new(),
                        r2_path: Vec::new(),
                        vifs: Vec::new(),
                    }
                }
                Err(e) => return Err(e),
            };
            sel.target_id = target_id.clone();
            // Remap candidate-pool indices to absolute series columns.
            sel.ordered_features = sel.ordered_features.iter().map(|&ci| candidates[ci]).collect();
            sel
        };
        plans.push(TargetPlan {
            target_col,
            target_id,
            feature_cols: selection.ordered_features.clone(),
            selection,
        });
    }
    Ok(plans)
}

struct CellResult {
    records: Vec<ForecastRecord>,
    checkpoint: Option<(String, String)>,
}

fn run_cell(
    series: &ReturnSeries,
    plan: &TargetPlan,
    model_id: &str,
    horizon: usize,
    boundary: usize,
    cfg: &ExperimentConfig,
) -> Result<CellResult> {
    let n = series.n_rows();
    let target = plan.target_col;
    let cols = &plan.feature_cols;

    // Horizon-aligned training pairs: features at t, label at t + h.
    let mut train_x: Vec<DVector<f64>> = Vec::new();
    let mut train_y: Vec<f64> = Vec::new();
    for t in 0..boundary.saturating_sub(horizon) {
        let (Some(x), Some(y)) = (features_at(series, cols, t), series.value(t + horizon, target))
        else {
            continue;
        };
        train_x.push(x);
        train_y.push(y);
    }

    let mut forecaster: Box<dyn Forecaster> = match model_id {
        "rw" => Box::new(RandomWalkForecaster::new(cfg.rw_mode)),
        "ridge" => Box::new(RidgeRawForecaster::fit(&train_x, &train_y, cfg.ridge.lambda)?),
        "ewrls" => {
            Box::new(EwrlsRawForecaster::fit(&train_x, &train_y, cfg.ewrls.tau, cfg.ewrls.delta)?)
        }
        "rbfnet" => {
            let p = cfg.rbfnet;
            let k = if cols.is_empty() { Some(1) } else { p.k };
            let net_cfg = RbfNetConfig {
                k,
                kmeans_seed: mix_seed(cfg.seed, target as u64, horizon as u64),
                kmeans_max_iter: p.kmeans_max_iter,
                kmeans_tol: p.kmeans_tol,
                proto_params: crate::prototypes::PrototypeParams {
                    shrinkage: p.shrinkage,
                    eps_floor: p.eps_floor,
                    decay: p.decay,
                },
                tau: p.tau,
                delta: p.delta,
                online_updates: true,
            };
            let model = RbfNetModel::fit_initial(
                &plan.target_id,
                horizon,
                plan.selection.clone(),
                &train_x,
                &train_y,
                net_cfg,
            )?;
            Box::new(RbfNetForecaster { model })
        }
        other => return Err(Error::Config(format!("unknown model {:?}", other))),
    };

    // Prequential test pass.
    let mut last_y: Option<f64> = None;
    for t in (0..boundary).rev() {
        if let Some(y) = series.value(t, target) {
            last_y = Some(y);
            break;
        }
    }
    let mut pending: VecDeque<(usize, usize)> = VecDeque::new();
    let mut out: Vec<ForecastRecord> = Vec::new();
    for s in boundary..n {
        let label_s = series.value(s, target);
        // Resolve the prediction made h steps ago before anything else.
        if s >= horizon {
            let t0 = s - horizon;
            if pending.front().map(|&(t, _)| t == t0).unwrap_or(false) {
                let (_, idx) = pending.pop_front().unwrap();
                match label_s {
                    Some(y) => {
                        forecaster.resolve(t0, y)?;
                        out[idx].y_realized = Some(y);
                    }
                    None => forecaster.discard(t0)?,
                }
            }
        }
        if let Some(y) = label_s {
            last_y = Some(y);
        }
        let Some(x) = features_at(series, cols, s) else { continue };
        let Some(y_latest) = last_y else { continue };
        let y_hat = forecaster.predict(s, &x, y_latest)?;
        pending.push_back((s, out.len()));
        out.push(ForecastRecord {
            target_id: plan.target_id.clone(),
            model_id: model_id.to_string(),
            horizon,
            time_index: s,
            y_hat,
            y_realized: None,
        });
    }
    // Stream ends: remaining pending predictions stay unresolved.
    let checkpoint = if cfg.save_checkpoints { forecaster.snapshot()? } else { None };
    Ok(CellResult { records: out, checkpoint })
}

/// Runs the full experiment on an already constructed return series.
pub fn run_experiment_on_series(
    cfg: &ExperimentConfig,
    series: &ReturnSeries,
) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let n = series.n_rows();
    if n < 4 {
        return Err(Error::Sizing(format!("need at least 4 return rows, got {}", n)));
    }
    let boundary = cfg.split.boundary_index(n)?;
    let plans = build_plans(series, boundary, cfg)?;

    // One cell per (target, model, horizon), in deterministic order.
    let mut cells: Vec<(usize, String, usize)> = Vec::new();
    for plan_idx in 0..plans.len() {
        for model_id in &cfg.models {
            for &h in &cfg.horizons {
                cells.push((plan_idx, model_id.clone(), h));
            }
        }
    }

    let results: Vec<(String, Result<CellResult>)> = cells
        .par_iter()
        .map(|(plan_idx, model_id, h)| {
            let plan = &plans[*plan_idx];
            let label = format!("{}/{}/h{}", plan.target_id, model_id, h);
            let res = run_cell(series, plan, model_id, *h, boundary, cfg);
            (label, res)
        })
        .collect();

    let mut records = Vec::new();
    let mut failed_cells = Vec::new();
    let mut checkpoints = Vec::new();
    for (label, res) in results {
        match res {
            Ok(mut cell) => {
                records.append(&mut cell.records);
                if let Some(cp) = cell.checkpoint {
                    checkpoints.push(cp);
                }
            }
            Err(e) => {
                log::error!("cell {} failed: {}", label, e);
                failed_cells.push(format!("{}: {}", label, e));
            }
        }
    }

    let report = build_report(&records, "rw");
    Ok(ExperimentOutput {
        records,
        report,
        plans,
        instruments: series.instruments.clone(),
        boundary,
        n_returns: n,
        failed_cells,
        checkpoints,
    })
}

/// Loads/synthesizes data per the config and runs the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let panel = build_panel(cfg)?;
    let series = compute_returns(&panel, cfg.data.return_kind)?;
    let run = || run_experiment_on_series(cfg, &series);
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {}", e)))?
            .install(run)
    } else {
        run()
    }
}

/// Runs the experiment and writes every artifact into `out_dir`:
/// effective config, forecast log, report CSVs, selection audit, run
/// manifest and (optionally) model checkpoints.
pub fn run_to_dir(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutput> {
    let started = std::time::Instant::now();
    std::fs::create_dir_all(out_dir)?;
    crate::evaluation::check_writable(out_dir)?;

    std::fs::write(out_dir.join("config_effective.toml"), cfg.to_toml_string()?)?;
    let output = run_experiment(cfg)?;

    write_forecast_log(&output.records, &out_dir.join("forecasts.csv"))?;
    emit_report(&output.report, out_dir)?;

    let mut audit = String::from("target\tfeatures\tr2_path\tvifs\n");
    for plan in &output.plans {
        audit.push_str(&plan.selection.audit_row(&output.instruments));
        audit.push('\n');
    }
    std::fs::write(out_dir.join("selections.txt"), audit)?;

    if !output.checkpoints.is_empty() {
        let ckpt_dir = out_dir.join("checkpoints");
        std::fs::create_dir_all(&ckpt_dir)?;
        for (name, payload) in &output.checkpoints {
            std::fs::write(ckpt_dir.join(name), payload)?;
        }
    }

    let mut manifest = String::new();
    manifest.push_str(&format!("version: {}\n", env!("CARGO_PKG_VERSION")));
    manifest.push_str(&format!("seed: {}\n", cfg.seed));
    manifest.push_str(&format!("returns: {}\n", output.n_returns));
    manifest.push_str(&format!("train_rows: {}\n", output.boundary));
    manifest.push_str(&format!("records: {}\n", output.records.len()));
    manifest.push_str(&format!("failed_cells: {}\n", output.failed_cells.len()));
    for f in &output.failed_cells {
        manifest.push_str(&format!("  - {}\n", f));
    }
    manifest.push_str(&format!("elapsed_ms: {}\n", started.elapsed().as_millis()));
    std::fs::write(out_dir.join("manifest.txt"), manifest)?;

    let mut log = std::io::stderr();
    let _ = writeln!(
        log,
        "run complete: {} records, {} failed cells, {:.1}s",
        output.records.len(),
        output.failed_cells.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(output)
}
