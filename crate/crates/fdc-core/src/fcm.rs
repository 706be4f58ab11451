//! Classical fuzzy c-means, used as the unconstrained baseline and as
//! the fixed-point oracle for the constrained model as beta vanishes.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::FdcError;
use crate::linalg::{squared_distance, Matrix};
use crate::mem::{init_memberships, ZERO_DIST_TOL};
use crate::types::{Dataset, MembershipMatrix, Prototypes};

#[derive(Debug, Clone)]
pub struct FcmModel {
    pub memberships: MembershipMatrix,
    pub prototypes: Prototypes,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn fcm_prototypes(u: &MembershipMatrix, data: &Dataset, gamma: f64) -> Prototypes {
    let m = data.len();
    let n = data.dim();
    let k = u.k();
    let mut c = Matrix::zeros(k, n);
    for j in 0..k {
        let mut wsum = 0.0;
        let row = c.row_mut(j);
        for i in 0..m {
            let w = libm::pow(u.row(i)[j], gamma);
            wsum += w;
            for (acc, &x) in row.iter_mut().zip(data.sample(i)) {
                *acc += w * x;
            }
        }
        if wsum > 0.0 {
            for v in row.iter_mut() {
                *v /= wsum;
            }
        }
    }
    Prototypes::new(c).expect("finite prototypes")
}

fn fcm_membership_row(dists: &[f64], gamma: f64) -> Vec<f64> {
    let k = dists.len();
    let zero_hits = dists.iter().filter(|&&d| d < ZERO_DIST_TOL).count();
    let mut row = alloc::vec![0.0; k];
    if zero_hits > 0 {
        let share = 1.0 / zero_hits as f64;
        for (r, &d) in row.iter_mut().zip(dists) {
            if d < ZERO_DIST_TOL {
                *r = share;
            }
        }
        return row;
    }
    let expo = 1.0 / (gamma - 1.0);
    for j in 0..k {
        let mut denom = 0.0;
        for &dl in dists {
            denom += libm::pow(dists[j] / dl, expo);
        }
        row[j] = 1.0 / denom;
    }
    row
}

fn fcm_objective(u: &MembershipMatrix, dist: &Matrix, gamma: f64) -> f64 {
    let mut f = 0.0;
    for i in 0..u.len() {
        for (&uij, &d) in u.row(i).iter().zip(dist.row(i)) {
            f += libm::pow(uij, gamma) * d;
        }
    }
    f
}

/// Alternating fuzzy c-means fit with the standard closed-form updates.
/// The initialization matches the constrained model's for a given seed,
/// so the two can be compared from identical starts.
pub fn fcm_fit(
    data: &Dataset,
    k: usize,
    gamma: f64,
    tol: f64,
    max_iters: usize,
    seed: u64,
) -> Result<FcmModel, FdcError> {
    if k == 0 {
        return Err(FdcError::BadParameter {
            field: "k",
            reason: "must be >= 1".into(),
        });
    }
    if gamma.is_nan() || gamma <= 1.0 {
        return Err(FdcError::BadParameter {
            field: "gamma",
            reason: alloc::format!("{gamma} must be > 1"),
        });
    }
    let m = data.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = init_memberships(m, k, &mut rng);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut prototypes = fcm_prototypes(&u, data, gamma);

    for t in 1..=max_iters {
        iterations = t;
        let u_before = u.clone();

        prototypes = fcm_prototypes(&u, data, gamma);
        let mut dist = Matrix::zeros(m, k);
        for i in 0..m {
            for j in 0..k {
                dist.set(i, j, squared_distance(data.sample(i), prototypes.center(j)));
            }
        }
        trace.push(fcm_objective(&u, &dist, gamma));

        for i in 0..m {
            let row = fcm_membership_row(dist.row(i), gamma);
            u.set_row(i, &row);
        }
        trace.push(fcm_objective(&u, &dist, gamma));

        if u.max_abs_diff(&u_before) < tol {
            converged = true;
            break;
        }
    }

    Ok(FcmModel {
        memberships: u,
        prototypes,
        objective_trace: trace,
        iterations,
        converged,
    })
}
