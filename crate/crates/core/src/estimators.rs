//! Linear heads: exponentially weighted recursive least squares and a
//! batch ridge solver.
//!
//! At τ = 1 the recursive estimate coincides with batch ridge on the same
//! stream, which the test suite uses as the verification oracle.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// State of the exponentially weighted RLS estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EwrlsState {
    pub theta: DVector<f64>,
    /// Inverse of the exponentially weighted regularized Gram matrix.
    pub inv_gram: DMatrix<f64>,
    pub tau: f64,
    pub delta: f64,
    pub n_updates: u64,
}

/// Initializes θ = 0 and P = δ⁻¹ I.
pub fn ewrls_init(dim: usize, delta: f64, tau: f64) -> Result<EwrlsState> {
    if dim == 0 {
        return Err(Error::Config("feature dimension must be >= 1".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::Config(format!("delta must be > 0, got {}", delta)));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Config(format!("tau must lie in (0,1], got {}", tau)));
    }
    if tau <= 0.8 {
        return Err(Error::Config(format!("tau {} is below the degenerate-decay guard 0.8", tau)));
    }
    Ok(EwrlsState {
        theta: DVector::zeros(dim),
        inv_gram: DMatrix::identity(dim, dim) / delta,
        tau,
        delta,
        n_updates: 0,
    })
}

/// Prediction θᵀφ without touching the state.
pub fn ewrls_predict(state: &EwrlsState, phi: &DVector<f64>) -> Result<f64> {
    if phi.len() != state.theta.len() {
        return Err(Error::Shape(format!(
            "feature length {} != state dimension {}",
            phi.len(),
            state.theta.len()
        )));
    }
    Ok(state.theta.dot(phi))
}

/// One prequential step: returns the prior prediction θᵀφ (computed before
/// any mutation), then applies the gain update
/// `g = Pφ / (τ + φᵀPφ)`, `θ += g (y - θᵀφ)`, `P = (P - g φᵀP)/τ`,
/// followed by symmetrization. On non-finite input the state is unchanged.
pub fn ewrls_step(state: &mut EwrlsState, phi: &DVector<f64>, y: f64) -> Result<f64> {
    if phi.len() != state.theta.len() {
        return Err(Error::Shape(format!(
            "feature length {} != state dimension {}",
            phi.len(),
            state.theta.len()
        )));
    }
    if !y.is_finite() || phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite input rejected by ewrls_step".into()));
    }
    let y_hat_prior = state.theta.dot(phi);

    let p_phi = &state.inv_gram * phi;
    let denom = state.tau + phi.dot(&p_phi);
    let gain = &p_phi / denom;
    state.theta += &gain * (y - y_hat_prior);
    let update = &gain * p_phi.transpose();
    state.inv_gram = (&state.inv_gram - update) / state.tau;
    // Symmetrize: long online runs accumulate asymmetry otherwise.
    state.inv_gram = (&state.inv_gram + state.inv_gram.transpose()) * 0.5;
    state.n_updates += 1;

    if nalgebra::Cholesky::new(state.inv_gram.clone()).is_none() {
        log::warn!("ewrls inv_gram lost positive definiteness; reconditioning");
        let d = state.inv_gram.nrows();
        let mut jitter = 1e-12;
        loop {
            state.inv_gram += DMatrix::identity(d, d) * jitter;
            if nalgebra::Cholesky::new(state.inv_gram.clone()).is_some() {
                break;
            }
            jitter *= 10.0;
            if jitter > 1.0 {
                return Err(Error::Solver("ewrls inv_gram could not be reconditioned".into()));
            }
        }
    }
    Ok(y_hat_prior)
}

/// Batch ridge: solves `(XᵀX + λ R) θ = Xᵀ y` where R is the identity with
/// a zero in the intercept position, so the intercept is unpenalized.
///
/// `intercept_col`, when set, names the column excluded from the penalty
/// (the pipeline always puts the bias first).
pub fn ridge_fit(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, intercept_col: Option<usize>) -> Result<DVector<f64>> {
    if x.nrows() == 0 {
        return Err(Error::Sizing("ridge_fit needs at least one row".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!("{} rows vs {} targets", x.nrows(), y.len())));
    }
    if lambda < 0.0 {
        return Err(Error::Config(format!("lambda must be >= 0, got {}", lambda)));
    }
    let d = x.ncols();
    let mut lhs = x.transpose() * x;
    for j in 0..d {
        if Some(j) != intercept_col {
            lhs[(j, j)] += lambda;
        }
    }
    let rhs = x.transpose() * y;
    lhs.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Solver("singular normal equations; use lambda > 0".into()))
}

/// The exponentially weighted regularized batch solution
/// `(Σ τ^{n-i} φ_i φ_iᵀ + δ τⁿ I) θ = Σ τ^{n-i} y_i φ_i`.
///
/// This is the closed form the recursion tracks; it doubles as the test
/// oracle and as a reference for checkpoint validation.
pub fn weighted_batch_solution(
    phis: &[DVector<f64>],
    ys: &[f64],
    tau: f64,
    delta: f64,
) -> Result<DVector<f64>> {
    if phis.is_empty() || phis.len() != ys.len() {
        return Err(Error::Shape("empty or misaligned stream".into()));
    }
    let d = phis[0].len();
    let n = phis.len();
    let mut gram = DMatrix::identity(d, d) * (delta * tau.powi(n as i32));
    let mut rhs = DVector::zeros(d);
    for (i, (phi, &y)) in phis.iter().zip(ys).enumerate() {
        let w = tau.powi((n - 1 - i) as i32);
        gram += phi * phi.transpose() * w;
        rhs += phi * (w * y);
    }
    gram.lu().solve(&rhs).ok_or_else(|| Error::Solver("weighted normal equations singular".into()))
}
