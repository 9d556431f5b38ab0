//! Experiment configuration: a fully defaulted TOML document plus
//! `key=value` overrides.
//!
//! Schema (everything optional; shown with defaults):
//!
//! ```toml
//! seed = 0
//! horizons = [1, 2, ..., 30]        # or override with --set horizons=1..30
//! models = ["rw", "ridge", "ewrls", "rbfnet"]
//! rw_mode = "last_value"            # or "zero"
//! threads = 0                       # 0 = library default
//! save_checkpoints = false
//!
//! [data]
//! source = "synthetic"              # or "csv"
//! csv_path = ""
//! return_kind = "log"               # or "simple"
//!
//! [data.synthetic]
//! kind = "jump_diffusion"           # jump_diffusion | factor_ar1 | regime_flip
//!
//! [data.synthetic.jump_diffusion]   # see data::JumpDiffusionSpec
//! [data.synthetic.factor_ar1]       # see data::FactorAr1Spec
//! [data.synthetic.regime_flip]      # see data::RegimeFlipSpec
//!
//! [split]
//! train_fraction = 0.5
//! rounding = "floor"                # or "ceil"
//!
//! [selection]
//! max_features = 5
//! min_r2_gain = 0.005
//! vif_threshold = 5.0
//!
//! [rbfnet]
//! tau = 0.99
//! delta = 1.0
//! decay = 0.99
//! shrinkage = 0.1
//! eps_floor = 1e-6
//! kmeans_max_iter = 100
//! kmeans_tol = 1e-8
//! # k = 16                          # omit for max(2, round(sqrt(n/2)))
//!
//! [ewrls]
//! tau = 0.99
//! delta = 1.0
//!
//! [ridge]
//! lambda = 1.0
//! ```

use crate::data::{
    FactorAr1Spec, JumpDiffusionSpec, RegimeFlipSpec, ReturnKind, SplitSpec,
};
use crate::error::{Error, Result};
use crate::featsel::SelectionParams;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const KNOWN_MODELS: [&str; 4] = ["rw", "ridge", "ewrls", "rbfnet"];

/// Random-walk baseline reading: repeat the last observed return, or
/// forecast zero (random walk in prices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RwMode {
    LastValue,
    Zero,
}

impl Default for RwMode {
    fn default() -> Self {
        RwMode::LastValue
    }
}

impl std::str::FromStr for RwMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "last_value" => Ok(RwMode::LastValue),
            "zero" => Ok(RwMode::Zero),
            other => Err(Error::Config(format!("unknown rw_mode {:?}", other))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synthetic,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    JumpDiffusion,
    FactorAr1,
    RegimeFlip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub kind: SyntheticKind,
    pub jump_diffusion: JumpDiffusionSpec,
    pub factor_ar1: FactorAr1Spec,
    pub regime_flip: RegimeFlipSpec,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            kind: SyntheticKind::JumpDiffusion,
            jump_diffusion: JumpDiffusionSpec::default(),
            factor_ar1: FactorAr1Spec::default(),
            regime_flip: RegimeFlipSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub source: DataSource,
    pub csv_path: String,
    pub return_kind: ReturnKind,
    pub synthetic: SyntheticConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            source: DataSource::Synthetic,
            csv_path: String::new(),
            return_kind: ReturnKind::Log,
            synthetic: SyntheticConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RbfNetParams {
    pub k: Option<usize>,
    pub tau: f64,
    pub delta: f64,
    pub decay: f64,
    pub shrinkage: f64,
    pub eps_floor: f64,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
}

impl Default for RbfNetParams {
    fn default() -> Self {
        RbfNetParams {
            k: None,
            tau: 0.99,
            delta: 1.0,
            decay: 0.99,
            shrinkage: 0.1,
            eps_floor: 1e-6,
            kmeans_max_iter: 100,
            kmeans_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EwrlsParams {
    pub tau: f64,
    pub delta: f64,
}

impl Default for EwrlsParams {
    fn default() -> Self {
        EwrlsParams { tau: 0.99, delta: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RidgeParams {
    pub lambda: f64,
}

impl Default for RidgeParams {
    fn default() -> Self {
        RidgeParams { lambda: 1.0 }
    }
}

/// The full experiment configuration. Every field has a default; a run is
/// reproducible from (config, seed) alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub horizons: Vec<usize>,
    pub models: Vec<String>,
    pub rw_mode: RwMode,
    pub threads: usize,
    pub save_checkpoints: bool,
    pub data: DataConfig,
    pub split: SplitSpec,
    pub selection: SelectionParams,
    pub rbfnet: RbfNetParams,
    pub ewrls: EwrlsParams,
    pub ridge: RidgeParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            horizons: (1..=30).collect(),
            models: KNOWN_MODELS.iter().map(|s| s.to_string()).collect(),
            rw_mode: RwMode::default(),
            threads: 0,
            save_checkpoints: false,
            data: DataConfig::default(),
            split: SplitSpec::default(),
            selection: SelectionParams::default(),
            rbfnet: RbfNetParams::default(),
            ewrls: EwrlsParams::default(),
            ridge: RidgeParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() {
            return Err(Error::Config("horizons must be non-empty".into()));
        }
        if self.horizons.iter().any(|&h| h == 0) {
            return Err(Error::Config("horizons must all be >= 1".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("models must be non-empty".into()));
        }
        for m in &self.models {
            if !KNOWN_MODELS.contains(&m.as_str()) {
                return Err(Error::Config(format!(
                    "unknown model {:?}; known models: {:?}",
                    m, KNOWN_MODELS
                )));
            }
        }
        if matches!(self.data.source, DataSource::Csv) && self.data.csv_path.is_empty() {
            return Err(Error::Config("data.source = \"csv\" requires data.csv_path".into()));
        }
        Ok(())
    }

    /// Parses a TOML document and applies `key=value` overrides on top.
    pub fn from_toml_str(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e| Error::Config(format!("config parse error: {}", e)))?;
        for (key, value) in overrides {
            apply_override(&mut table, key, value)?;
        }
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e| Error::Config(format!("config schema error: {}", e)))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {}", path.display(), e))
        })?;
        Self::from_toml_str(&text, overrides)
    }

    /// Serializes the effective configuration for the run manifest.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("config serialization failed: {}", e)))
    }
}

// Parses an override value into a TOML value. Ranges ("1..30") expand to
// integer arrays; comma lists become arrays of scalars.
fn parse_override_value(raw: &str) -> toml::Value {
    if let Some((lo, hi)) = raw.split_once("..") {
        if let (Ok(lo), Ok(hi)) = (lo.trim().parse::<i64>(), hi.trim().parse::<i64>()) {
            return toml::Value::Array((lo..=hi).map(toml::Value::Integer).collect());
        }
    }
    if raw.contains(',') {
        return toml::Value::Array(raw.split(',').map(|s| parse_scalar(s.trim())).collect());
    }
    parse_scalar(raw)
}

fn parse_scalar(raw: &str) -> toml::Value {
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    toml::Value::String(raw.to_string())
}

// Keys whose schema type is an array; a scalar override becomes a
// one-element array so `--set horizons=1` works.
const ARRAY_KEYS: [&str; 2] = ["horizons", "models"];

fn apply_override(table: &mut toml::Table, key: &str, value: &str) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key {:?}", key)));
    }
    let mut current = table;
    for part in &parts[..parts.len() - 1] {
        let entry = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = entry.as_table_mut().ok_or_else(|| {
            Error::Config(format!("override key {:?}: {:?} is not a table", key, part))
        })?;
    }
    let leaf = parts[parts.len() - 1];
    let mut parsed = parse_override_value(value);
    if ARRAY_KEYS.contains(&leaf) && !parsed.is_array() {
        parsed = toml::Value::Array(vec![parsed]);
    }
    current.insert(leaf.to_string(), parsed);
    Ok(())
}
