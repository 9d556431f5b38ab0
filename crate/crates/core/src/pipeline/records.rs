//! The forecast log: one record per prediction, resolved when the label
//! arrives.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// One prediction for (target, model, horizon) at a time index, plus the
/// realized response once it resolves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub target_id: String,
    pub model_id: String,
    pub horizon: usize,
    /// Return-row index at prediction time.
    pub time_index: usize,
    pub y_hat: f64,
    /// `None` until the label at `time_index + horizon` arrives; resolves
    /// at most once.
    pub y_realized: Option<f64>,
}

/// Writes the forecast log with header `target,model,horizon,t,y_hat,y_realized`.
/// Unresolved records leave the last field empty.
pub fn write_forecast_log(records: &[ForecastRecord], path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "target,model,horizon,t,y_hat,y_realized")?;
    for r in records {
        let realized = r.y_realized.map(|y| format!("{:.12e}", y)).unwrap_or_default();
        writeln!(
            f,
            "{},{},{},{},{:.12e},{}",
            r.target_id, r.model_id, r.horizon, r.time_index, r.y_hat, realized
        )?;
    }
    Ok(())
}

/// Reads a forecast log written by [`write_forecast_log`].
pub fn read_forecast_log(path: &Path) -> Result<Vec<ForecastRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let field = |idx: usize| -> Result<&str> {
            rec.get(idx)
                .ok_or_else(|| Error::InputFormat(format!("row {}: missing column {}", row, idx)))
        };
        let parse_num = |s: &str, what: &str| -> Result<f64> {
            s.parse().map_err(|_| {
                Error::InputFormat(format!("row {}: unparseable {} {:?}", row, what, s))
            })
        };
        let realized_raw = field(5)?.trim().to_string();
        out.push(ForecastRecord {
            target_id: field(0)?.to_string(),
            model_id: field(1)?.to_string(),
            horizon: field(2)?
                .parse()
                .map_err(|_| Error::InputFormat(format!("row {}: bad horizon", row)))?,
            time_index: field(3)?
                .parse()
                .map_err(|_| Error::InputFormat(format!("row {}: bad time index", row)))?,
            y_hat: parse_num(field(4)?, "y_hat")?,
            y_realized: if realized_raw.is_empty() {
                None
            } else {
                Some(parse_num(&realized_raw, "y_realized")?)
            },
        });
    }
    Ok(out)
}
