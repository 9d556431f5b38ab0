//! Price panels, return construction, chronological splits and synthetic
//! generators.
//!
//! Panels are daily-sampled price levels per instrument; gaps are explicit
//! (`None`) and never imputed. Returns are computed only where both adjacent
//! prices are present.

use crate::error::{Error, Result};
use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Daily price levels for a set of instruments over a shared time index.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    pub timestamps: Vec<NaiveDate>,
    pub instruments: Vec<String>,
    /// Row-major: `prices[row][col]`, `None` marks a gap.
    pub prices: Vec<Vec<Option<f64>>>,
}

impl PricePanel {
    /// Checks the panel invariants, returning every violation found.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for w in self.timestamps.windows(2) {
            if w[1] <= w[0] {
                out.push(format!("timestamps not strictly increasing at {} -> {}", w[0], w[1]));
            }
        }
        if self.prices.len() != self.timestamps.len() {
            out.push(format!(
                "price rows ({}) != timestamps ({})",
                self.prices.len(),
                self.timestamps.len()
            ));
        }
        for (i, row) in self.prices.iter().enumerate() {
            if row.len() != self.instruments.len() {
                out.push(format!("row {} has {} cells, expected {}", i, row.len(), self.instruments.len()));
                continue;
            }
            for (j, cell) in row.iter().enumerate() {
                if let Some(p) = cell {
                    if !p.is_finite() || *p <= 0.0 {
                        out.push(format!(
                            "non-positive or non-finite price {} at row {} ({}), column {} ({})",
                            p, i, self.timestamps[i], j, self.instruments[j]
                        ));
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v.join("; ")))
        }
    }

    pub fn n_rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn n_instruments(&self) -> usize {
        self.instruments.len()
    }

    /// Writes the panel as `date,<instrument>...` CSV; gaps become empty cells.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(f, "date")?;
        for name in &self.instruments {
            write!(f, ",{}", name)?;
        }
        writeln!(f)?;
        for (ts, row) in self.timestamps.iter().zip(&self.prices) {
            write!(f, "{}", ts.format("%Y-%m-%d"))?;
            for cell in row {
                match cell {
                    Some(p) => write!(f, ",{}", fmt_price(*p))?,
                    None => write!(f, ",")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

// Round-trippable price formatting for byte-stable synthetic files.
fn fmt_price(p: f64) -> String {
    let s = format!("{:.12e}", p);
    match s.parse::<f64>() {
        Ok(back) if back == p => s,
        _ => format!("{:e}", p),
    }
}

/// Per-instrument returns on the panel's time index (one fewer row).
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub timestamps: Vec<NaiveDate>,
    pub instruments: Vec<String>,
    /// Row-major: `values[row][col]`, `None` where either adjacent price was missing.
    pub values: Vec<Vec<Option<f64>>>,
}

impl ReturnSeries {
    pub fn n_rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn n_instruments(&self) -> usize {
        self.instruments.len()
    }

    /// One instrument's return at a row, if present.
    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        self.values[row][col]
    }

    /// Column index for an instrument id.
    pub fn column_of(&self, id: &str) -> Option<usize> {
        self.instruments.iter().position(|s| s == id)
    }
}

/// How per-period returns are derived from price levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnKind {
    Log,
    Simple,
}

impl Default for ReturnKind {
    fn default() -> Self {
        ReturnKind::Log
    }
}

/// Rounding convention used to resolve the train/test boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRounding {
    Floor,
    Ceil,
}

impl Default for SplitRounding {
    fn default() -> Self {
        SplitRounding::Floor
    }
}

/// Chronological train/test split: train strictly precedes test, no shuffling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    #[serde(default)]
    pub rounding: SplitRounding,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train_fraction: 0.5, rounding: SplitRounding::Floor }
    }
}

impl SplitSpec {
    /// Resolved number of training rows for a series of length `n`.
    pub fn boundary_index(&self, n: usize) -> Result<usize> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must lie in (0,1), got {}",
                self.train_fraction
            )));
        }
        let raw = self.train_fraction * n as f64;
        let b = match self.rounding {
            SplitRounding::Floor => raw.floor() as usize,
            SplitRounding::Ceil => raw.ceil() as usize,
        };
        Ok(b.clamp(1, n - 1))
    }
}

/// Parses a `date,<instrument>...` CSV into a validated panel.
///
/// Empty cells are gaps; dates must be ISO-8601 and strictly increasing.
pub fn load_csv(path: &Path) -> Result<PricePanel> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::InputFormat("empty header row".into()));
    }
    let instruments: Vec<String> = headers.iter().skip(1).map(|s| s.trim().to_string()).collect();
    if instruments.is_empty() {
        return Err(Error::InputFormat("no instrument columns after the date column".into()));
    }

    let mut timestamps = Vec::new();
    let mut prices = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row_no = i + 2; // 1-based, counting the header
        let date_str = rec.get(0).unwrap_or("").trim();
        let ts = NaiveDate::parse_from_str(date_str, "%Y-%m-%d").map_err(|_| {
            Error::InputFormat(format!("row {}: unparseable date {:?}", row_no, date_str))
        })?;
        if let Some(prev) = timestamps.last() {
            if ts == *prev {
                return Err(Error::Validation(format!("row {}: duplicate timestamp {}", row_no, ts)));
            }
            if ts < *prev {
                return Err(Error::Validation(format!(
                    "row {}: timestamp {} precedes previous {}",
                    row_no, ts, prev
                )));
            }
        }
        let mut row = Vec::with_capacity(instruments.len());
        for (j, cell) in rec.iter().skip(1).enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                row.push(None);
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::InputFormat(format!(
                        "row {}, column {} ({}): unparseable number {:?}",
                        row_no,
                        j + 2,
                        instruments[j],
                        cell
                    ))
                })?;
                row.push(Some(v));
            }
        }
        timestamps.push(ts);
        prices.push(row);
    }

    let panel = PricePanel { timestamps, instruments, prices };
    panel.validate()?;
    Ok(panel)
}

/// Per-period returns from a price panel.
///
/// Log: `ln(p_t / p_{t-1})`; simple: `p_t / p_{t-1} - 1`. A return row is
/// missing wherever either adjacent price is missing.
pub fn compute_returns(panel: &PricePanel, kind: ReturnKind) -> Result<ReturnSeries> {
    panel.validate()?;
    if panel.n_rows() < 2 {
        return Err(Error::Sizing(format!("need at least 2 price rows, got {}", panel.n_rows())));
    }
    let mut values = Vec::with_capacity(panel.n_rows() - 1);
    for t in 1..panel.n_rows() {
        let mut row = Vec::with_capacity(panel.n_instruments());
        for j in 0..panel.n_instruments() {
            let r = match (panel.prices[t - 1][j], panel.prices[t][j]) {
                (Some(prev), Some(cur)) => {
                    if matches!(kind, ReturnKind::Log) && (prev <= 0.0 || cur <= 0.0) {
                        return Err(Error::Domain(format!(
                            "non-positive price under log returns at row {}, column {}",
                            t, j
                        )));
                    }
                    Some(match kind {
                        ReturnKind::Log => (cur / prev).ln(),
                        ReturnKind::Simple => cur / prev - 1.0,
                    })
                }
                _ => None,
            };
            row.push(r);
        }
        values.push(row);
    }
    Ok(ReturnSeries {
        timestamps: panel.timestamps[1..].to_vec(),
        instruments: panel.instruments.clone(),
        values,
    })
}

/// Splits a return series into chronological train and test segments.
pub fn split(series: &ReturnSeries, spec: &SplitSpec) -> Result<(ReturnSeries, ReturnSeries)> {
    let n = series.n_rows();
    if n < 4 {
        return Err(Error::Sizing(format!("need at least 4 return rows to split, got {}", n)));
    }
    let b = spec.boundary_index(n)?;
    let train = ReturnSeries {
        timestamps: series.timestamps[..b].to_vec(),
        instruments: series.instruments.clone(),
        values: series.values[..b].to_vec(),
    };
    let test = ReturnSeries {
        timestamps: series.timestamps[b..].to_vec(),
        instruments: series.instruments.clone(),
        values: series.values[b..].to_vec(),
    };
    Ok((train, test))
}

/// Parameters of the jump-diffusion price generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JumpDiffusionSpec {
    pub n: usize,
    pub instruments: usize,
    pub seed: u64,
    /// Per-period drift of the log-price increments.
    pub drift: f64,
    /// Per-period volatility of the continuous component.
    pub vol: f64,
    /// Probability of a jump per step, in [0,1].
    pub jump_intensity: f64,
    /// Standard deviation of the jump sizes.
    pub jump_scale: f64,
    pub start_price: f64,
}

impl Default for JumpDiffusionSpec {
    fn default() -> Self {
        JumpDiffusionSpec {
            n: 1298,
            instruments: 10,
            seed: 0,
            drift: 0.0,
            vol: 0.01,
            jump_intensity: 0.0,
            jump_scale: 0.05,
            start_price: 100.0,
        }
    }
}

fn synthetic_dates(n: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(2018, 11, 1).unwrap();
    (0..n).map(|i| start + chrono::Duration::days(i as i64)).collect()
}

/// Generates prices whose log increments are Gaussian plus occasional
/// Gaussian jumps. Deterministic for a fixed seed.
pub fn synthesize_jump_diffusion(spec: &JumpDiffusionSpec) -> Result<PricePanel> {
    if spec.n < 2 {
        return Err(Error::Config(format!("n must be >= 2, got {}", spec.n)));
    }
    if !(spec.vol > 0.0) {
        return Err(Error::Config(format!("vol must be > 0, got {}", spec.vol)));
    }
    if !(0.0..=1.0).contains(&spec.jump_intensity) {
        return Err(Error::Config(format!(
            "jump_intensity must lie in [0,1], got {}",
            spec.jump_intensity
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut prices = Vec::with_capacity(spec.n);
    let mut log_levels: Vec<f64> = vec![spec.start_price.ln(); spec.instruments];
    prices.push(log_levels.iter().map(|l| Some(l.exp())).collect());
    for _ in 1..spec.n {
        for level in log_levels.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            let mut incr = spec.drift + spec.vol * z;
            if spec.jump_intensity > 0.0 && rng.gen::<f64>() < spec.jump_intensity {
                let j: f64 = StandardNormal.sample(&mut rng);
                incr += spec.jump_scale * j;
            }
            *level += incr;
        }
        prices.push(log_levels.iter().map(|l| Some(l.exp())).collect());
    }
    Ok(PricePanel {
        timestamps: synthetic_dates(spec.n),
        instruments: (0..spec.instruments).map(|j| format!("syn{:02}", j)).collect(),
        prices,
    })
}

/// Parameters of the common-factor AR(1) generator.
///
/// Each instrument's log return is a shared AR(1) factor plus independent
/// idiosyncratic noise, so every target is partially predictable from the
/// other instruments' current returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FactorAr1Spec {
    pub n: usize,
    pub instruments: usize,
    pub seed: u64,
    /// AR(1) coefficient of the shared factor.
    pub coefficient: f64,
    /// Innovation volatility of the factor.
    pub factor_vol: f64,
    /// Volatility of the per-instrument idiosyncratic noise.
    pub idio_vol: f64,
    pub start_price: f64,
}

impl Default for FactorAr1Spec {
    fn default() -> Self {
        FactorAr1Spec {
            n: 1301,
            instruments: 10,
            seed: 0,
            coefficient: 0.6,
            factor_vol: 0.01,
            idio_vol: 0.003,
            start_price: 100.0,
        }
    }
}

/// Generates a price panel whose returns share an AR(1) common factor.
pub fn synthesize_factor_ar1(spec: &FactorAr1Spec) -> Result<PricePanel> {
    if spec.n < 2 {
        return Err(Error::Config(format!("n must be >= 2, got {}", spec.n)));
    }
    if spec.coefficient.abs() >= 1.0 {
        return Err(Error::Config(format!(
            "AR coefficient must satisfy |phi| < 1, got {}",
            spec.coefficient
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut prices = Vec::with_capacity(spec.n);
    let mut log_levels: Vec<f64> = vec![spec.start_price.ln(); spec.instruments];
    prices.push(log_levels.iter().map(|l| Some(l.exp())).collect());
    // Start the factor at its stationary distribution.
    let stationary_sd = spec.factor_vol / (1.0 - spec.coefficient * spec.coefficient).sqrt();
    let z0: f64 = StandardNormal.sample(&mut rng);
    let mut factor = stationary_sd * z0;
    for _ in 1..spec.n {
        let z: f64 = StandardNormal.sample(&mut rng);
        factor = spec.coefficient * factor + spec.factor_vol * z;
        for level in log_levels.iter_mut() {
            let e: f64 = StandardNormal.sample(&mut rng);
            *level += factor + spec.idio_vol * e;
        }
        prices.push(log_levels.iter().map(|l| Some(l.exp())).collect());
    }
    Ok(PricePanel {
        timestamps: synthetic_dates(spec.n),
        instruments: (0..spec.instruments).map(|j| format!("ar1_{:02}", j)).collect(),
        prices,
    })
}

/// Parameters of the regime-flip generator used for drift experiments.
///
/// Instrument 0 is the target; its next-period return is `beta_t * x_t`
/// plus noise, where `x_t` is instrument 1's return and `beta_t` flips
/// from +1 to -1 at `flip_at` (a return-row index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegimeFlipSpec {
    pub n: usize,
    pub seed: u64,
    pub feature_vol: f64,
    pub noise_vol: f64,
    pub flip_at: usize,
    pub start_price: f64,
}

impl Default for RegimeFlipSpec {
    fn default() -> Self {
        RegimeFlipSpec {
            n: 1301,
            seed: 0,
            feature_vol: 0.01,
            noise_vol: 0.002,
            flip_at: 975,
            start_price: 100.0,
        }
    }
}

/// Generates a two-instrument panel with a mid-sample coefficient flip.
pub fn synthesize_regime_flip(spec: &RegimeFlipSpec) -> Result<PricePanel> {
    if spec.n < 3 {
        return Err(Error::Config(format!("n must be >= 3, got {}", spec.n)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_ret = spec.n - 1;
    let mut x_returns = Vec::with_capacity(n_ret);
    for _ in 0..n_ret {
        let z: f64 = StandardNormal.sample(&mut rng);
        x_returns.push(spec.feature_vol * z);
    }
    let mut y_returns = vec![0.0; n_ret];
    for t in 1..n_ret {
        let beta = if t >= spec.flip_at { -1.0 } else { 1.0 };
        let e: f64 = StandardNormal.sample(&mut rng);
        y_returns[t] = beta * x_returns[t - 1] + spec.noise_vol * e;
    }
    let mut prices = Vec::with_capacity(spec.n);
    let mut y_level = spec.start_price.ln();
    let mut x_level = spec.start_price.ln();
    prices.push(vec![Some(y_level.exp()), Some(x_level.exp())]);
    for t in 0..n_ret {
        y_level += y_returns[t];
        x_level += x_returns[t];
        prices.push(vec![Some(y_level.exp()), Some(x_level.exp())]);
    }
    Ok(PricePanel {
        timestamps: synthetic_dates(spec.n),
        instruments: vec!["target".into(), "driver".into()],
        prices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn panel_from_prices(prices: &[f64]) -> PricePanel {
        PricePanel {
            timestamps: synthetic_dates(prices.len()),
            instruments: vec!["a".into()],
            prices: prices.iter().map(|p| vec![Some(*p)]).collect(),
        }
    }

    #[test]
    fn log_returns_of_constant_prices_are_zero() {
        let s = compute_returns(&panel_from_prices(&[100.0, 100.0, 100.0]), ReturnKind::Log).unwrap();
        assert_eq!(s.n_rows(), 2);
        assert_eq!(s.value(0, 0), Some(0.0));
        assert_eq!(s.value(1, 0), Some(0.0));
    }

    #[test]
    fn simple_return_arithmetic() {
        let s = compute_returns(&panel_from_prices(&[100.0, 110.0]), ReturnKind::Simple).unwrap();
        assert_relative_eq!(s.value(0, 0).unwrap(), 0.10, max_relative = 1e-12);
    }

    #[test]
    fn log_return_of_e_fold_is_one() {
        let s = compute_returns(
            &panel_from_prices(&[100.0, 100.0 * std::f64::consts::E]),
            ReturnKind::Log,
        )
        .unwrap();
        assert_relative_eq!(s.value(0, 0).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn missing_neighbour_propagates_gap() {
        let mut panel = panel_from_prices(&[100.0, 101.0, 102.0]);
        panel.prices[1][0] = None;
        let s = compute_returns(&panel, ReturnKind::Log).unwrap();
        assert_eq!(s.value(0, 0), None);
        assert_eq!(s.value(1, 0), None);
    }

    #[test]
    fn log_returns_round_trip_reconstructs_prices() {
        let spec = JumpDiffusionSpec { n: 200, instruments: 2, seed: 3, ..Default::default() };
        let panel = synthesize_jump_diffusion(&spec).unwrap();
        let rets = compute_returns(&panel, ReturnKind::Log).unwrap();
        for j in 0..2 {
            let mut level = panel.prices[0][j].unwrap();
            for t in 0..rets.n_rows() {
                level *= rets.value(t, j).unwrap().exp();
                assert_relative_eq!(level, panel.prices[t + 1][j].unwrap(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn split_follows_floor_convention() {
        let spec = SplitSpec::default();
        assert_eq!(spec.boundary_index(1297).unwrap(), 648);
        assert_eq!(spec.boundary_index(10).unwrap(), 5);
        assert_eq!(spec.boundary_index(11).unwrap(), 5);
        let ceil = SplitSpec { rounding: SplitRounding::Ceil, ..Default::default() };
        assert_eq!(ceil.boundary_index(1297).unwrap(), 649);
    }

    #[test]
    fn split_is_a_partition() {
        let panel = synthesize_jump_diffusion(&JumpDiffusionSpec {
            n: 57,
            instruments: 3,
            seed: 1,
            ..Default::default()
        })
        .unwrap();
        let series = compute_returns(&panel, ReturnKind::Log).unwrap();
        let (train, test) = split(&series, &SplitSpec::default()).unwrap();
        assert_eq!(train.n_rows() + test.n_rows(), series.n_rows());
        let mut glued = train.values.clone();
        glued.extend(test.values.clone());
        assert_eq!(glued, series.values);
        assert!(train.timestamps.last().unwrap() < test.timestamps.first().unwrap());
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let series = compute_returns(
            &panel_from_prices(&[1.0, 2.0, 3.0, 4.0, 5.0]),
            ReturnKind::Log,
        )
        .unwrap();
        let bad = SplitSpec { train_fraction: 1.5, ..Default::default() };
        assert!(matches!(split(&series, &bad), Err(Error::Config(_))));
    }

    #[test]
    fn duplicate_dates_rejected_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dup.csv");
        std::fs::write(&path, "date,a\n2020-01-01,100\n2020-01-01,101\n").unwrap();
        assert!(matches!(load_csv(&path), Err(Error::Validation(_))));
    }

    #[test]
    fn load_csv_parses_values_and_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        std::fs::write(&path, "date,a\n2020-01-01,100\n2020-01-02,\n2020-01-03,99\n").unwrap();
        let panel = load_csv(&path).unwrap();
        assert_eq!(panel.n_rows(), 3);
        assert_eq!(panel.n_instruments(), 1);
        assert_eq!(panel.prices[0][0], Some(100.0));
        assert_eq!(panel.prices[1][0], None);
        assert_eq!(panel.prices[2][0], Some(99.0));
    }

    #[test]
    fn load_csv_names_bad_cell() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "date,a\n2020-01-01,100\n2020-01-02,oops\n").unwrap();
        let err = load_csv(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 3"), "{}", msg);
        assert!(msg.contains("oops"), "{}", msg);
    }

    #[test]
    fn csv_round_trip_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let spec = JumpDiffusionSpec { n: 40, instruments: 2, seed: 9, ..Default::default() };
        let panel = synthesize_jump_diffusion(&spec).unwrap();
        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        panel.write_csv(&p1).unwrap();
        let reloaded = load_csv(&p1).unwrap();
        reloaded.write_csv(&p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        assert_eq!(reloaded.timestamps, panel.timestamps);
        for t in 0..panel.n_rows() {
            for j in 0..panel.n_instruments() {
                assert_relative_eq!(
                    reloaded.prices[t][j].unwrap(),
                    panel.prices[t][j].unwrap(),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn generator_is_deterministic_for_fixed_seed() {
        let spec = JumpDiffusionSpec { n: 100, instruments: 4, seed: 42, ..Default::default() };
        assert_eq!(synthesize_jump_diffusion(&spec).unwrap(), synthesize_jump_diffusion(&spec).unwrap());
        let fspec = FactorAr1Spec { n: 100, seed: 42, ..Default::default() };
        assert_eq!(synthesize_factor_ar1(&fspec).unwrap(), synthesize_factor_ar1(&fspec).unwrap());
    }

    #[test]
    fn increment_variance_matches_vol_without_jumps() {
        let spec = JumpDiffusionSpec {
            n: 10001,
            instruments: 1,
            seed: 5,
            vol: 0.01,
            ..Default::default()
        };
        let panel = synthesize_jump_diffusion(&spec).unwrap();
        let rets = compute_returns(&panel, ReturnKind::Log).unwrap();
        let xs: Vec<f64> = (0..rets.n_rows()).map(|t| rets.value(t, 0).unwrap()).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // Var of the sample variance of Gaussians is 2 sigma^4 / (n-1).
        let se = (2.0 * spec.vol.powi(4) / (n - 1.0)).sqrt();
        assert!((var - spec.vol * spec.vol).abs() < 3.0 * se, "var {} vs {}", var, spec.vol * spec.vol);
    }

    #[test]
    fn random_walk_variance_grows_linearly_in_time() {
        // Monte Carlo over many paths: Var[log p_t - log p_0] ~ t * sigma^2.
        let vol = 0.01;
        let n_paths = 400;
        let horizon = 60;
        let mut sums = vec![0.0; horizon + 1];
        let mut sq_sums = vec![0.0; horizon + 1];
        for seed in 0..n_paths {
            let spec = JumpDiffusionSpec {
                n: horizon + 1,
                instruments: 1,
                seed: 1000 + seed as u64,
                vol,
                ..Default::default()
            };
            let panel = synthesize_jump_diffusion(&spec).unwrap();
            for t in 0..=horizon {
                let y = panel.prices[t][0].unwrap().ln() - panel.prices[0][0].unwrap().ln();
                sums[t] += y;
                sq_sums[t] += y * y;
            }
        }
        // Least-squares slope of Var[y_t] on t, through the origin.
        let mut num = 0.0;
        let mut den = 0.0;
        for t in 1..=horizon {
            let m = sums[t] / n_paths as f64;
            let v = sq_sums[t] / n_paths as f64 - m * m;
            num += (t as f64) * v;
            den += (t as f64) * (t as f64);
        }
        let slope = num / den;
        let expected = vol * vol;
        assert!(
            (slope - expected).abs() < 0.10 * expected,
            "slope {} vs sigma^2 {}",
            slope,
            expected
        );
    }

    #[test]
    fn random_walk_mean_stays_at_start() {
        // Monte Carlo mean of y_t stays at y_0 = 0 within 3 standard errors.
        let vol = 0.01;
        let n_paths = 500;
        let t_final = 50;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for seed in 0..n_paths {
            let spec = JumpDiffusionSpec {
                n: t_final + 1,
                instruments: 1,
                seed: 7000 + seed as u64,
                vol,
                ..Default::default()
            };
            let panel = synthesize_jump_diffusion(&spec).unwrap();
            let y = panel.prices[t_final][0].unwrap().ln() - panel.prices[0][0].unwrap().ln();
            sum += y;
            sq += y * y;
        }
        let mean = sum / n_paths as f64;
        let var = sq / n_paths as f64 - mean * mean;
        let se = (var / n_paths as f64).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {} vs se {}", mean, se);
    }

    #[test]
    fn random_walk_covariance_structure() {
        // Cov[y_t, y_{t-tau}] ~ (t - tau) sigma^2 for the pure random walk.
        let vol = 0.01;
        let n_paths = 600;
        let t = 40;
        let tau = 15;
        let mut s_a = 0.0;
        let mut s_b = 0.0;
        let mut s_ab = 0.0;
        for seed in 0..n_paths {
            let spec = JumpDiffusionSpec {
                n: t + 1,
                instruments: 1,
                seed: 20_000 + seed as u64,
                vol,
                ..Default::default()
            };
            let panel = synthesize_jump_diffusion(&spec).unwrap();
            let base = panel.prices[0][0].unwrap().ln();
            let a = panel.prices[t][0].unwrap().ln() - base;
            let b = panel.prices[t - tau][0].unwrap().ln() - base;
            s_a += a;
            s_b += b;
            s_ab += a * b;
        }
        let np = n_paths as f64;
        let cov = s_ab / np - (s_a / np) * (s_b / np);
        let expected = (t - tau) as f64 * vol * vol;
        assert!(
            (cov - expected).abs() < 0.25 * expected,
            "cov {} vs expected {}",
            cov,
            expected
        );
    }
}
