//! Hidden-unit prototypes: k-means initialization on the training window
//! and sequential updates with decayed counts during test.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Shrinkage and decay parameters for prototype covariances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrototypeParams {
    /// Blend toward the diagonal: `(1-λ)S + λ diag(S)`.
    pub shrinkage: f64,
    /// Eigenvalue floor added as `ε_Σ I`.
    pub eps_floor: f64,
    /// Decay γ applied to the effective sample mass on each online update.
    pub decay: f64,
}

impl Default for PrototypeParams {
    fn default() -> Self {
        PrototypeParams { shrinkage: 0.1, eps_floor: 1e-6, decay: 0.99 }
    }
}

/// One hidden unit: mean, covariance and cached factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prototype {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// Cached inverse of the covariance.
    pub precision: DMatrix<f64>,
    /// Cached lower Cholesky factor of the covariance.
    pub chol_lower: DMatrix<f64>,
    /// Effective sample mass (decayed count).
    pub weight: f64,
}

impl Prototype {
    /// Builds a prototype, flooring and factoring the covariance.
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>, weight: f64, eps_floor: f64) -> Result<Self> {
        let mut p = Prototype {
            mean,
            covariance: DMatrix::zeros(0, 0),
            precision: DMatrix::zeros(0, 0),
            chol_lower: DMatrix::zeros(0, 0),
            weight,
        };
        p.set_covariance(covariance, eps_floor)?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Symmetrizes, floors and re-factors the covariance; refreshes caches.
    pub fn set_covariance(&mut self, cov: DMatrix<f64>, eps_floor: f64) -> Result<()> {
        let d = cov.nrows();
        let sym = (&cov + cov.transpose()) * 0.5;
        let mut floored = sym + DMatrix::identity(d, d) * eps_floor;
        let mut jitter = eps_floor.max(1e-12);
        let chol = loop {
            match nalgebra::Cholesky::new(floored.clone()) {
                Some(c) => break c,
                None => {
                    jitter *= 10.0;
                    if jitter > 1e6 {
                        return Err(Error::Solver("covariance cannot be made positive definite".into()));
                    }
                    floored += DMatrix::identity(d, d) * jitter;
                }
            }
        };
        self.chol_lower = chol.l();
        self.precision = chol.inverse();
        self.covariance = floored;
        Ok(())
    }

    /// Squared Mahalanobis distance of `x` under this prototype's covariance,
    /// via a triangular solve on the cached Cholesky factor.
    pub fn mahalanobis_sq(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Shape(format!(
                "input dim {} != prototype dim {}",
                x.len(),
                self.dim()
            )));
        }
        let diff = x - &self.mean;
        let z = self
            .chol_lower
            .solve_lower_triangular(&diff)
            .ok_or_else(|| Error::Solver("singular Cholesky factor".into()))?;
        Ok(z.norm_squared())
    }
}

/// The full set of hidden units plus online-update parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeSet {
    pub prototypes: Vec<Prototype>,
    pub params: PrototypeParams,
}

impl PrototypeSet {
    pub fn k(&self) -> usize {
        self.prototypes.len()
    }

    pub fn dim(&self) -> usize {
        self.prototypes.first().map_or(0, |p| p.dim())
    }

    /// Index of the nearest prototype under each unit's own Mahalanobis metric.
    pub fn nearest(&self, x: &DVector<f64>) -> Result<usize> {
        let mut best = (0usize, f64::INFINITY);
        for (j, p) in self.prototypes.iter().enumerate() {
            let d = p.mahalanobis_sq(x)?;
            if d < best.1 {
                best = (j, d);
            }
        }
        Ok(best.0)
    }
}

/// Result of a k-means fit: the prototype set, final assignments and the
/// per-iteration inertia path.
#[derive(Debug, Clone)]
pub struct KmeansFit {
    pub set: PrototypeSet,
    pub assignments: Vec<usize>,
    pub inertia_path: Vec<f64>,
}

fn sq_dist(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm_squared()
}

// k-means++ seeding.
fn seed_centers(rows: &[DVector<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    let mut centers = Vec::with_capacity(k);
    let first = rng.gen_range(0..rows.len());
    centers.push(rows[first].clone());
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total <= 0.0 {
            rng.gen_range(0..rows.len())
        } else {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = rows.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if target < *w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        };
        centers.push(rows[idx].clone());
        for (i, r) in rows.iter().enumerate() {
            let d = sq_dist(r, centers.last().unwrap());
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centers
}

/// Lloyd's algorithm with k-means++ seeding on standardized rows.
///
/// Inertia is non-increasing across iterations; an emptied cluster is
/// re-seeded to the point currently farthest from its assigned centroid.
pub fn kmeans_fit(
    rows: &[DVector<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
    params: PrototypeParams,
) -> Result<KmeansFit> {
    if k == 0 {
        return Err(Error::Sizing("k must be >= 1".into()));
    }
    if rows.len() < k {
        return Err(Error::Sizing(format!("{} rows is fewer than k = {}", rows.len(), k)));
    }
    let d = rows[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(rows, k, &mut rng);
    let mut assignments = vec![0usize; rows.len()];
    let mut inertia_path = Vec::new();
    let mut prev_inertia = f64::INFINITY;

    for _iter in 0..max_iter {
        // Assignment step.
        for (i, r) in rows.iter().enumerate() {
            let mut best = (0usize, f64::INFINITY);
            for (j, c) in centers.iter().enumerate() {
                let dist = sq_dist(r, c);
                if dist < best.1 {
                    best = (j, dist);
                }
            }
            assignments[i] = best.0;
        }
        // Re-seed empty clusters to the point farthest from its centroid.
        let mut counts = vec![0usize; k];
        for &a in &assignments {
            counts[a] += 1;
        }
        let mut reseeds = 0;
        while let Some(j) = counts.iter().position(|&c| c == 0) {
            if reseeds >= k {
                break;
            }
            let (far_i, _) = rows
                .iter()
                .enumerate()
                .filter(|(i, _)| counts[assignments[*i]] > 1)
                .map(|(i, r)| (i, sq_dist(r, &centers[assignments[i]])))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            counts[assignments[far_i]] -= 1;
            assignments[far_i] = j;
            counts[j] = 1;
            centers[j] = rows[far_i].clone();
            reseeds += 1;
        }
        // Inertia under the possibly re-seeded assignment.
        let inertia: f64 = rows
            .iter()
            .zip(&assignments)
            .map(|(r, &a)| sq_dist(r, &centers[a]))
            .sum();
        debug_assert!(inertia <= prev_inertia * (1.0 + 1e-12) || !prev_inertia.is_finite());
        inertia_path.push(inertia);

        // Update step.
        let mut sums = vec![DVector::zeros(d); k];
        for (r, &a) in rows.iter().zip(&assignments) {
            sums[a] += r;
        }
        for j in 0..k {
            centers[j] = &sums[j] / counts[j] as f64;
        }

        if prev_inertia.is_finite() {
            let denom = prev_inertia.max(f64::MIN_POSITIVE);
            if (prev_inertia - inertia) / denom < tol {
                break;
            }
        }
        prev_inertia = inertia;
    }

    // Final assignment pass against the converged centers.
    let mut counts = vec![0usize; k];
    for (i, r) in rows.iter().enumerate() {
        let mut best = (0usize, f64::INFINITY);
        for (j, c) in centers.iter().enumerate() {
            let dist = sq_dist(r, c);
            if dist < best.1 {
                best = (j, dist);
            }
        }
        assignments[i] = best.0;
        counts[assignments[i]] += 1;
    }

    let prototypes = centers
        .into_iter()
        .enumerate()
        .map(|(j, mean)| Prototype::new(mean, DMatrix::identity(d, d), counts[j] as f64, params.eps_floor))
        .collect::<Result<Vec<_>>>()?;
    Ok(KmeansFit { set: PrototypeSet { prototypes, params }, assignments, inertia_path })
}

/// Per-cluster shrunk sample covariances from the final k-means assignment.
///
/// `Σ_j = (1-λ) S_j + λ diag(S_j) + ε_Σ I`; clusters with fewer than `d+1`
/// members fall back to the global diagonal covariance.
pub fn estimate_covariances(
    set: &mut PrototypeSet,
    rows: &[DVector<f64>],
    assignments: &[usize],
) -> Result<()> {
    if rows.len() != assignments.len() {
        return Err(Error::Shape(format!(
            "{} rows vs {} assignments",
            rows.len(),
            assignments.len()
        )));
    }
    let d = set.dim();
    let lambda = set.params.shrinkage;
    let eps = set.params.eps_floor;

    // Global diagonal covariance as the degenerate-cluster fallback.
    let n = rows.len() as f64;
    let mut gmean = DVector::zeros(d);
    for r in rows {
        gmean += r;
    }
    gmean /= n;
    let mut gdiag = DVector::zeros(d);
    for r in rows {
        let c = r - &gmean;
        for j in 0..d {
            gdiag[j] += c[j] * c[j];
        }
    }
    gdiag /= n.max(1.0);
    let global_fallback = DMatrix::from_diagonal(&gdiag);

    for (j, proto) in set.prototypes.iter_mut().enumerate() {
        let members: Vec<&DVector<f64>> =
            rows.iter().zip(assignments).filter(|(_, &a)| a == j).map(|(r, _)| r).collect();
        let cov = if members.len() < d + 1 {
            global_fallback.clone()
        } else {
            let m = members.len() as f64;
            let mut s = DMatrix::zeros(d, d);
            for r in &members {
                let c = *r - &proto.mean;
                s += &c * c.transpose();
            }
            s /= m;
            let diag = DMatrix::from_diagonal(&s.diagonal());
            s * (1.0 - lambda) + diag * lambda
        };
        proto.weight = members.len() as f64;
        proto.set_covariance(cov, eps)?;
    }
    Ok(())
}

/// Sequential k-means update with decayed counts.
///
/// The nearest prototype (its own Mahalanobis metric) absorbs `x`:
/// `w ← γw + 1`, `μ += (x-μ)/w`, rank-one covariance update, then
/// re-shrink and re-floor.
pub fn online_update(set: &mut PrototypeSet, x: &DVector<f64>) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite feature row rejected by prototype update".into()));
    }
    if x.len() != set.dim() {
        return Err(Error::Shape(format!("input dim {} != prototype dim {}", x.len(), set.dim())));
    }
    let j = set.nearest(x)?;
    let lambda = set.params.shrinkage;
    let eps = set.params.eps_floor;
    let gamma = set.params.decay;
    let proto = &mut set.prototypes[j];

    proto.weight = gamma * proto.weight + 1.0;
    let w = proto.weight;
    let innovation = x - &proto.mean;
    proto.mean += &innovation / w;
    let centered = x - &proto.mean;
    let rank_one = &centered * centered.transpose();
    let mut cov = proto.covariance.clone();
    cov += (rank_one - &cov) / w;
    let diag = DMatrix::from_diagonal(&cov.diagonal());
    let shrunk = cov * (1.0 - lambda) + diag * lambda;
    proto.set_covariance(shrunk, eps)?;
    Ok(())
}

/// Default hidden-unit count heuristic: `max(2, round(sqrt(n_train / 2)))`.
pub fn default_k(n_train: usize) -> usize {
    ((n_train as f64 / 2.0).sqrt().round() as usize).max(2)
}
