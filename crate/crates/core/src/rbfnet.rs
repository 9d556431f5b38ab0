//! The composed online RBF network: frozen feature selection and
//! standardizer, clustered prototypes, and an EWRLS head.
//!
//! Test-time protocol is prequential with delayed labels: the feature
//! vector built at prediction time is cached and reused when the label
//! arrives, so prototype drift between prediction and resolution never
//! alters the supervised pair.

use crate::error::{Error, Result};
use crate::estimators::{ewrls_init, ewrls_predict, ewrls_step, EwrlsState};
use crate::featsel::FeatureSelection;
use crate::prototypes::{
    default_k, estimate_covariances, kmeans_fit, online_update, PrototypeParams, PrototypeSet,
};
use crate::rbfmap::{feature_vector, RbfFeatureVector};
use crate::standardize::Standardizer;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Hyperparameters of one RBF network instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbfNetConfig {
    /// Hidden-unit count; `None` resolves to `max(2, round(sqrt(n/2)))`.
    pub k: Option<usize>,
    pub kmeans_seed: u64,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    pub proto_params: PrototypeParams,
    /// Forgetting factor of the EWRLS head.
    pub tau: f64,
    /// RLS initialization scale.
    pub delta: f64,
    /// When false, resolution records labels but mutates nothing.
    pub online_updates: bool,
}

impl Default for RbfNetConfig {
    fn default() -> Self {
        RbfNetConfig {
            k: None,
            kmeans_seed: 0,
            kmeans_max_iter: 100,
            kmeans_tol: 1e-8,
            proto_params: PrototypeParams::default(),
            tau: 0.99,
            delta: 1.0,
            online_updates: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PendingPrediction {
    t: usize,
    x_std: DVector<f64>,
    phi: RbfFeatureVector,
}

/// A fitted per-(target, horizon) RBF network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfNetModel {
    pub target_id: String,
    pub horizon: usize,
    pub selection: FeatureSelection,
    pub standardizer: Standardizer,
    pub prototypes: PrototypeSet,
    pub head: EwrlsState,
    pub config: RbfNetConfig,
    pending: VecDeque<PendingPrediction>,
}

impl RbfNetModel {
    /// Fits the initial model on training rows: standardize, cluster,
    /// estimate covariances, then stream the rows once through the head.
    ///
    /// `x_rows` are raw (unstandardized) selected-feature rows, already
    /// aligned so that `y[i]` is the horizon-shifted response for `x_rows[i]`.
    pub fn fit_initial(
        target_id: &str,
        horizon: usize,
        selection: FeatureSelection,
        x_rows: &[DVector<f64>],
        y: &[f64],
        config: RbfNetConfig,
    ) -> Result<Self> {
        if x_rows.len() != y.len() {
            return Err(Error::Shape(format!("{} feature rows vs {} targets", x_rows.len(), y.len())));
        }
        let k = config.k.unwrap_or_else(|| default_k(x_rows.len()));
        if x_rows.len() < k + x_rows.first().map_or(0, |r| r.len()) + 2 {
            return Err(Error::Sizing(format!(
                "{} training rows is too few for k = {} hidden units",
                x_rows.len(),
                k
            )));
        }
        let standardizer = Standardizer::fit(x_rows)?;
        let std_rows: Vec<DVector<f64>> =
            x_rows.iter().map(|r| standardizer.transform(r)).collect::<Result<_>>()?;
        let mut fit = kmeans_fit(
            &std_rows,
            k,
            config.kmeans_seed,
            config.kmeans_max_iter,
            config.kmeans_tol,
            config.proto_params,
        )?;
        let assignments = fit.assignments.clone();
        estimate_covariances(&mut fit.set, &std_rows, &assignments)?;

        let mut head = ewrls_init(k + 1, config.delta, config.tau)?;
        for (z, &target) in std_rows.iter().zip(y) {
            let phi = feature_vector(z, &fit.set)?;
            ewrls_step(&mut head, &phi.values, target)?;
        }

        Ok(RbfNetModel {
            target_id: target_id.to_string(),
            horizon,
            selection,
            standardizer,
            prototypes: fit.set,
            head,
            config,
            pending: VecDeque::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.prototypes.k()
    }

    /// Predicts at time `t` and queues the feature vector for resolution.
    pub fn predict(&mut self, t: usize, x_raw: &DVector<f64>) -> Result<f64> {
        let x_std = self.standardizer.transform(x_raw)?;
        let phi = feature_vector(&x_std, &self.prototypes)?;
        let y_hat = ewrls_predict(&self.head, &phi.values)?;
        self.pending.push_back(PendingPrediction { t, x_std, phi });
        debug_assert!(self.pending.len() <= self.horizon.max(1));
        Ok(y_hat)
    }

    /// Prediction without queueing; used by replay/consistency checks.
    pub fn predict_readonly(&self, x_raw: &DVector<f64>) -> Result<f64> {
        let x_std = self.standardizer.transform(x_raw)?;
        let phi = feature_vector(&x_std, &self.prototypes)?;
        ewrls_predict(&self.head, &phi.values)
    }

    /// Delivers the realized label for the prediction made at `t`.
    ///
    /// Labels must arrive in prediction order. With online updates enabled
    /// the nearest prototype absorbs the cached (prediction-time) row and
    /// the head takes one EWRLS step on the cached feature vector.
    pub fn resolve_label(&mut self, t: usize, y: f64) -> Result<()> {
        let Some(front) = self.pending.front() else {
            return Err(Error::Protocol(format!("label for t = {} but no pending prediction", t)));
        };
        if front.t != t {
            return Err(Error::Protocol(format!(
                "label for t = {} but oldest pending prediction is t = {}",
                t, front.t
            )));
        }
        let pending = self.pending.pop_front().unwrap();
        if self.config.online_updates {
            online_update(&mut self.prototypes, &pending.x_std)?;
            ewrls_step(&mut self.head, &pending.phi.values, y)?;
        }
        Ok(())
    }

    /// Drops the pending prediction made at `t` without updating anything
    /// (the label is missing from the data).
    pub fn discard_label(&mut self, t: usize) -> Result<()> {
        match self.pending.front() {
            Some(front) if front.t == t => {
                self.pending.pop_front();
                Ok(())
            }
            Some(front) => Err(Error::Protocol(format!(
                "discard for t = {} but oldest pending prediction is t = {}",
                t, front.t
            ))),
            None => Err(Error::Protocol(format!("discard for t = {} but no pending prediction", t))),
        }
    }

    /// Discards unresolved predictions at end of stream.
    pub fn drain_pending(&mut self) -> usize {
        let n = self.pending.len();
        self.pending.clear();
        n
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }
}
