//! The model bank: random walk, train-frozen ridge, online EWRLS on raw
//! features, and the online RBF network, all behind one prequential
//! interface.

use super::config::RwMode;
use crate::error::{Error, Result};
use crate::estimators::{ewrls_init, ewrls_predict, ewrls_step, ridge_fit, EwrlsState};
use crate::rbfnet::RbfNetModel;
use crate::standardize::Standardizer;
use nalgebra::{DMatrix, DVector};
use std::collections::VecDeque;

/// Last-observed-value forecast of a series; the canonical baseline.
pub fn random_walk_forecast(history: &[f64], _horizon: usize) -> Result<f64> {
    history
        .last()
        .copied()
        .ok_or_else(|| Error::Protocol("random-walk forecast requested on empty history".into()))
}

/// Prequential forecaster protocol: predict at `t`, resolve (or discard)
/// labels strictly in prediction order.
pub trait Forecaster {
    fn model_id(&self) -> &'static str;

    /// Forecast of the target `horizon` steps ahead, given the feature row
    /// at `t` and the target's return observed at `t`.
    fn predict(&mut self, t: usize, features: &DVector<f64>, y_latest: f64) -> Result<f64>;

    /// Delivers the realized label for the prediction made at `t`.
    fn resolve(&mut self, t: usize, y: f64) -> Result<()>;

    /// Drops the pending prediction made at `t` (label missing in the data).
    fn discard(&mut self, t: usize) -> Result<()>;

    /// Serialized checkpoint of the model state as (file name, payload),
    /// for models that support it.
    fn snapshot(&self) -> Result<Option<(String, String)>> {
        Ok(None)
    }
}

/// Random-walk baseline; keeps no pending state.
pub struct RandomWalkForecaster {
    mode: RwMode,
}

impl RandomWalkForecaster {
    pub fn new(mode: RwMode) -> Self {
        RandomWalkForecaster { mode }
    }
}

impl Forecaster for RandomWalkForecaster {
    fn model_id(&self) -> &'static str {
        "rw"
    }

    fn predict(&mut self, _t: usize, _features: &DVector<f64>, y_latest: f64) -> Result<f64> {
        Ok(match self.mode {
            RwMode::LastValue => y_latest,
            RwMode::Zero => 0.0,
        })
    }

    fn resolve(&mut self, _t: usize, _y: f64) -> Result<()> {
        Ok(())
    }

    fn discard(&mut self, _t: usize) -> Result<()> {
        Ok(())
    }
}

fn design_row(standardizer: &Standardizer, features: &DVector<f64>) -> Result<DVector<f64>> {
    let z = standardizer.transform(features)?;
    let mut phi = DVector::zeros(z.len() + 1);
    phi[0] = 1.0;
    for j in 0..z.len() {
        phi[j + 1] = z[j];
    }
    Ok(phi)
}

/// Ridge on `[1, standardized features]`, fit once on train and frozen.
pub struct RidgeRawForecaster {
    standardizer: Standardizer,
    theta: DVector<f64>,
}

impl RidgeRawForecaster {
    pub fn fit(x_rows: &[DVector<f64>], y: &[f64], lambda: f64) -> Result<Self> {
        if x_rows.is_empty() || x_rows.len() != y.len() {
            return Err(Error::Sizing("empty or misaligned training data".into()));
        }
        let standardizer = Standardizer::fit(x_rows)?;
        let d = standardizer.dim() + 1;
        let mut design = DMatrix::zeros(x_rows.len(), d);
        for (i, row) in x_rows.iter().enumerate() {
            let phi = design_row(&standardizer, row)?;
            design.set_row(i, &phi.transpose());
        }
        let yv = DVector::from_column_slice(y);
        let theta = ridge_fit(&design, &yv, lambda, Some(0))?;
        Ok(RidgeRawForecaster { standardizer, theta })
    }
}

impl Forecaster for RidgeRawForecaster {
    fn model_id(&self) -> &'static str {
        "ridge"
    }

    fn predict(&mut self, _t: usize, features: &DVector<f64>, _y_latest: f64) -> Result<f64> {
        Ok(self.theta.dot(&design_row(&self.standardizer, features)?))
    }

    fn resolve(&mut self, _t: usize, _y: f64) -> Result<()> {
        Ok(())
    }

    fn discard(&mut self, _t: usize) -> Result<()> {
        Ok(())
    }
}

/// EWRLS on `[1, standardized features]`; warm-started on train and
/// updated online through test.
pub struct EwrlsRawForecaster {
    standardizer: Standardizer,
    head: EwrlsState,
    pending: VecDeque<(usize, DVector<f64>)>,
}

impl EwrlsRawForecaster {
    pub fn fit(x_rows: &[DVector<f64>], y: &[f64], tau: f64, delta: f64) -> Result<Self> {
        if x_rows.is_empty() || x_rows.len() != y.len() {
            return Err(Error::Sizing("empty or misaligned training data".into()));
        }
        let standardizer = Standardizer::fit(x_rows)?;
        let mut head = ewrls_init(standardizer.dim() + 1, delta, tau)?;
        for (row, &target) in x_rows.iter().zip(y) {
            let phi = design_row(&standardizer, row)?;
            ewrls_step(&mut head, &phi, target)?;
        }
        Ok(EwrlsRawForecaster { standardizer, head, pending: VecDeque::new() })
    }

    fn pop_pending(&mut self, t: usize) -> Result<DVector<f64>> {
        match self.pending.front() {
            Some((front_t, _)) if *front_t == t => Ok(self.pending.pop_front().unwrap().1),
            Some((front_t, _)) => Err(Error::Protocol(format!(
                "label for t = {} but oldest pending prediction is t = {}",
                t, front_t
            ))),
            None => Err(Error::Protocol(format!("label for t = {} but no pending prediction", t))),
        }
    }
}

impl Forecaster for EwrlsRawForecaster {
    fn model_id(&self) -> &'static str {
        "ewrls"
    }

    fn predict(&mut self, t: usize, features: &DVector<f64>, _y_latest: f64) -> Result<f64> {
        let phi = design_row(&self.standardizer, features)?;
        let y_hat = ewrls_predict(&self.head, &phi)?;
        self.pending.push_back((t, phi));
        Ok(y_hat)
    }

    fn resolve(&mut self, t: usize, y: f64) -> Result<()> {
        let phi = self.pop_pending(t)?;
        ewrls_step(&mut self.head, &phi, y)?;
        Ok(())
    }

    fn discard(&mut self, t: usize) -> Result<()> {
        self.pop_pending(t)?;
        Ok(())
    }
}

/// The online RBF network behind the common forecaster interface.
pub struct RbfNetForecaster {
    pub model: RbfNetModel,
}

impl Forecaster for RbfNetForecaster {
    fn model_id(&self) -> &'static str {
        "rbfnet"
    }

    fn predict(&mut self, t: usize, features: &DVector<f64>, _y_latest: f64) -> Result<f64> {
        self.model.predict(t, features)
    }

    fn resolve(&mut self, t: usize, y: f64) -> Result<()> {
        self.model.resolve_label(t, y)
    }

    fn discard(&mut self, t: usize) -> Result<()> {
        self.model.discard_label(t)
    }

    fn snapshot(&self) -> Result<Option<(String, String)>> {
        let name = format!("rbfnet_{}_h{}.json", self.model.target_id, self.model.horizon);
        let payload = crate::checkpoint::to_envelope_string("rbfnet_model", &self.model)?;
        Ok(Some((name, payload)))
    }
}
