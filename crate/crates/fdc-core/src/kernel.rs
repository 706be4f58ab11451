//! Kernelized variant: prototypes live implicitly in the feature space
//! induced by a kernel, and squared distances to them expand into Gram
//! matrix sums weighted by the squared memberships.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::FdcError;
use crate::linalg::{squared_distance, Matrix};
use crate::mem::{fit_in_space, FdcModel, MetricSpace};
use crate::types::{
    validate_inputs, ConstraintSet, Dataset, FdcConfig, MembershipMatrix, Prototypes,
};

/// Kernel function choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// Plain inner product; reproduces the explicit-prototype model.
    Linear,
    /// `exp(-mu * ||x - y||^2)` with width `mu > 0`.
    Gaussian { mu: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<(), FdcError> {
        if let KernelSpec::Gaussian { mu } = self {
            if !mu.is_finite() || *mu <= 0.0 {
                return Err(FdcError::BadParameter {
                    field: "mu",
                    reason: alloc::format!("{mu} must be a positive real"),
                });
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => crate::linalg::dot(x, y),
            KernelSpec::Gaussian { mu } => libm::exp(-mu * squared_distance(x, y)),
        }
    }
}

/// Precomputed symmetric Gram matrix.
#[derive(Debug, Clone)]
pub struct KernelCache {
    gram: Matrix,
}

impl KernelCache {
    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn len(&self) -> usize {
        self.gram.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.gram.rows() == 0
    }
}

/// Evaluates the kernel on every sample pair.
pub fn gram_matrix(data: &Dataset, spec: KernelSpec) -> Result<KernelCache, FdcError> {
    spec.validate()?;
    let m = data.len();
    let mut gram = Matrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = spec.eval(data.sample(i), data.sample(j));
            gram.set(i, j, v);
            gram.set(j, i, v);
        }
    }
    Ok(KernelCache { gram })
}

/// Per-cluster weights `u_ij^2 - alpha` and their sums.
fn cluster_weights(u: &MembershipMatrix, alpha: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let m = u.len();
    let k = u.k();
    let mut w = vec![vec![0.0; m]; k];
    let mut sums = vec![0.0; k];
    for i in 0..m {
        let row = u.row(i);
        for j in 0..k {
            let v = row[j] * row[j] - alpha;
            w[j][i] = v;
            sums[j] += v;
        }
    }
    (w, sums)
}

/// Squared distance of in-sample point `i` to the implicit prototype of
/// cluster `j`: the three-term Gram expansion, clamped at zero against
/// rounding. Errors if the cluster's weight sum is not positive.
pub fn kernel_distance(
    i: usize,
    j: usize,
    u: &MembershipMatrix,
    alpha: f64,
    cache: &KernelCache,
) -> Result<f64, FdcError> {
    let (w, sums) = cluster_weights(u, alpha);
    if sums[j] <= 0.0 {
        return Err(FdcError::DeletedCluster { cluster: j });
    }
    let m = u.len();
    let gram = &cache.gram;
    let mut cross = 0.0;
    for l in 0..m {
        cross += w[j][l] * gram.get(l, i);
    }
    let mut pairwise = 0.0;
    for l1 in 0..m {
        let wl1 = w[j][l1];
        if wl1 == 0.0 {
            continue;
        }
        for l2 in 0..m {
            pairwise += wl1 * w[j][l2] * gram.get(l1, l2);
        }
    }
    let d = gram.get(i, i) - 2.0 * cross / sums[j] + pairwise / (sums[j] * sums[j]);
    Ok(d.max(0.0))
}

/// Same expansion for an out-of-sample point `x`.
pub fn kernel_distance_point(
    x: &[f64],
    j: usize,
    data: &Dataset,
    spec: KernelSpec,
    u: &MembershipMatrix,
    alpha: f64,
    cache: &KernelCache,
) -> Result<f64, FdcError> {
    let (w, sums) = cluster_weights(u, alpha);
    if sums[j] <= 0.0 {
        return Err(FdcError::DeletedCluster { cluster: j });
    }
    let m = data.len();
    let mut cross = 0.0;
    for l in 0..m {
        cross += w[j][l] * spec.eval(data.sample(l), x);
    }
    let mut pairwise = 0.0;
    for l1 in 0..m {
        let wl1 = w[j][l1];
        if wl1 == 0.0 {
            continue;
        }
        for l2 in 0..m {
            pairwise += wl1 * w[j][l2] * cache.gram.get(l1, l2);
        }
    }
    let d = spec.eval(x, x) - 2.0 * cross / sums[j] + pairwise / (sums[j] * sums[j]);
    Ok(d.max(0.0))
}

/// Distance oracle over the kernel-induced feature space. Prototypes
/// are never materialized; every refresh recomputes the per-cluster
/// weight vectors and the full distance matrix.
pub struct KernelSpace {
    cache: KernelCache,
    dist: Matrix,
}

impl KernelSpace {
    pub fn new(cache: KernelCache) -> Self {
        KernelSpace {
            cache,
            dist: Matrix::zeros(0, 0),
        }
    }

    pub fn cache(&self) -> &KernelCache {
        &self.cache
    }
}

impl MetricSpace for KernelSpace {
    fn refresh(&mut self, u: &MembershipMatrix, alpha: f64) -> Result<(), FdcError> {
        let m = u.len();
        let k = u.k();
        let gram = &self.cache.gram;
        let (w, sums) = cluster_weights(u, alpha);
        let mut dist = Matrix::zeros(m, k);
        for j in 0..k {
            if sums[j] <= 0.0 {
                return Err(FdcError::DeletedCluster { cluster: j });
            }
            // a = K w, b = w' K w, shared across all samples.
            let mut a = vec![0.0; m];
            for l1 in 0..m {
                let wl1 = w[j][l1];
                if wl1 == 0.0 {
                    continue;
                }
                let grow = gram.row(l1);
                for (al, &g) in a.iter_mut().zip(grow) {
                    *al += wl1 * g;
                }
            }
            let b = crate::linalg::dot(&w[j], &a);
            let inv = 1.0 / sums[j];
            for i in 0..m {
                let d = gram.get(i, i) - 2.0 * a[i] * inv + b * inv * inv;
                dist.set(i, j, d.max(0.0));
            }
        }
        self.dist = dist;
        Ok(())
    }

    fn distances(&self) -> &Matrix {
        &self.dist
    }

    fn prototypes(&self) -> Option<Prototypes> {
        None
    }
}

/// Fits the model in the kernel-induced space.
pub fn kernel_fit(
    data: &Dataset,
    cons: &ConstraintSet,
    cfg: &FdcConfig,
    spec: KernelSpec,
) -> Result<FdcModel, FdcError> {
    validate_inputs(data, cons, cfg)?;
    let cache = gram_matrix(data, spec)?;
    let mut space = KernelSpace::new(cache);
    fit_in_space(&mut space, data.len(), cons, cfg)
}
