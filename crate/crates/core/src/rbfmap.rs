//! Gaussian radial basis function feature maps over a prototype set.

use crate::error::{Error, Result};
use crate::prototypes::{Prototype, PrototypeSet};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// The aggregated hidden-unit outputs `[1, φ_1(x), ..., φ_k(x)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfFeatureVector {
    pub values: DVector<f64>,
}

impl RbfFeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() == 0
    }
}

/// `exp(-1/2 (x-μ)ᵀ Σ⁻¹ (x-μ))`, evaluated through the prototype's cached
/// Cholesky factor. Always lies in (0, 1]; underflows to 0 for inputs far
/// outside the unit's support.
pub fn rbf_activation(x: &DVector<f64>, p: &Prototype) -> Result<f64> {
    let q = p.mahalanobis_sq(x)?;
    Ok((-0.5 * q).exp())
}

/// Builds the feature vector `[1, φ_1, ..., φ_k]` in prototype order.
pub fn feature_vector(x: &DVector<f64>, set: &PrototypeSet) -> Result<RbfFeatureVector> {
    if set.k() == 0 {
        return Err(Error::Sizing("prototype set is empty".into()));
    }
    let mut values = DVector::zeros(set.k() + 1);
    values[0] = 1.0;
    for (j, p) in set.prototypes.iter().enumerate() {
        values[j + 1] = rbf_activation(x, p)?;
    }
    Ok(RbfFeatureVector { values })
}
