//! Online radial basis function networks for multi-horizon financial
//! returns forecasting.
//!
//! The crate provides:
//! - CSV price-panel ingestion, return construction and synthetic
//!   jump-diffusion / factor-AR(1) generators ([`data`]);
//! - forward stepwise feature selection with VIF admission ([`featsel`]);
//! - k-means prototype learning with streaming updates ([`prototypes`]);
//! - Gaussian RBF feature maps ([`rbfmap`]);
//! - exponentially weighted recursive least squares and batch ridge
//!   heads ([`estimators`]);
//! - the composed online RBF network ([`rbfnet`]);
//! - a prequential experiment pipeline over a bank of models and
//!   horizons ([`pipeline`]);
//! - NMSE/accuracy metrics and the associated statistical tests
//!   ([`evaluation`]).

pub mod checkpoint;
pub mod data;
pub mod error;
pub mod estimators;
pub mod evaluation;
pub mod featsel;
pub mod pipeline;
pub mod prototypes;
pub mod rbfmap;
pub mod rbfnet;
pub mod standardize;

pub use data::{PricePanel, ReturnSeries, SplitSpec};
pub use error::{Error, Result};
pub use estimators::EwrlsState;
pub use evaluation::EvaluationReport;
pub use featsel::FeatureSelection;
pub use pipeline::{ExperimentConfig, ForecastRecord};
pub use prototypes::{Prototype, PrototypeSet};
pub use rbfnet::RbfNetModel;
pub use standardize::Standardizer;
