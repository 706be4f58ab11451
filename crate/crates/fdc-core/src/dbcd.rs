//! Component subproblem solver: dispatch on the definiteness of the
//! block Hessian, then either solve the convex program globally (in the
//! full or null-space-reduced space) or run cyclic exact block
//! coordinate descent over the per-sample simplices.

use alloc::vec;
use alloc::vec::Vec;

use crate::block_qp::{expand, reduce, restrict, BlockQp};
use crate::error::FdcError;
use crate::simplex_qp::{is_psd, solve_diag_simplex, solve_psd_polytope, SimplexQp};
use crate::types::renormalize_row;

/// Which guarantee backs a component solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveRoute {
    /// Hessian PSD: global solution of the full convex program.
    PsdFull,
    /// Reduced Hessian PSD: global solution through the reduction.
    PsdReduced,
    /// Two blocks of two clusters, indefinite: exhaustive vertex starts
    /// make the best descent run a global solution.
    VertexExhaustive,
    /// General indefinite case: stationary point from the warm start.
    LocalDescent,
}

/// Solution of one component subproblem.
#[derive(Debug, Clone)]
pub struct DbcdResult {
    /// Concatenated per-sample membership blocks, each summing to one.
    pub u: Vec<f64>,
    pub route: SolveRoute,
    /// `0.5 * u' D u` at the returned point.
    pub objective: f64,
    /// Sweeps for the descent routes; warm-start sweeps plus gradient
    /// iterations for the PSD routes.
    pub iterations: usize,
    pub converged: bool,
    /// Definiteness record for auditing: the full Hessian, and the
    /// reduced one when it was examined.
    pub d_psd: bool,
    pub hred_psd: Option<bool>,
}

/// One cyclic sweep of exact block minimizations, ascending block index.
/// Each block solves its diagonal simplex QP given the others fixed, so
/// the objective cannot increase.
pub fn bcd_sweep(qp: &BlockQp, u: &mut [f64]) {
    let k = qp.k();
    let mut g = vec![0.0; k];
    for i in 0..qp.r() {
        qp.coupling_gradient(u, i, &mut g);
        let block = SimplexQp::new(qp.block_diag(i).to_vec(), g.clone());
        let sol = solve_diag_simplex(&block);
        u[i * k..(i + 1) * k].copy_from_slice(&sol);
    }
}

/// Vertices of the feasible set for the two-blocks-of-two case: every
/// block puts mass one on a single cluster.
pub fn vertex_starts(k: usize, r: usize) -> Result<Vec<Vec<f64>>, FdcError> {
    if k != 2 || r != 2 {
        return Err(FdcError::ShapeUnsupported { k, r });
    }
    Ok(vec![
        vec![1.0, 0.0, 1.0, 0.0],
        vec![1.0, 0.0, 0.0, 1.0],
        vec![0.0, 1.0, 1.0, 0.0],
        vec![0.0, 1.0, 0.0, 1.0],
    ])
}

pub const MAX_SWEEPS: usize = 500;

/// Runs sweeps until the concatenated point moves less than `tol` in
/// Euclidean norm. Returns (point, sweeps, converged).
fn descend(qp: &BlockQp, start: &[f64], tol: f64) -> (Vec<f64>, usize, bool) {
    let mut u = start.to_vec();
    let mut prev = vec![0.0; u.len()];
    for sweep in 1..=MAX_SWEEPS {
        prev.copy_from_slice(&u);
        bcd_sweep(qp, &mut u);
        let moved = crate::linalg::squared_distance(&u, &prev);
        if libm::sqrt(moved) < tol {
            return (u, sweep, true);
        }
    }
    (u, MAX_SWEEPS, false)
}

const FISTA_TOL: f64 = 1e-10;

/// Solves one component subproblem per the definiteness dispatch. The
/// warm start `u_init` (feasible, blocks on the simplex) is used as the
/// solver start in every route, so the result never has a worse
/// objective than the start.
pub fn solve_component(
    qp: &BlockQp,
    u_init: &[f64],
    tol: f64,
    psd_tol: f64,
) -> Result<DbcdResult, FdcError> {
    debug_assert_eq!(u_init.len(), qp.dim());
    let dense = qp.to_dense();
    let d_psd = is_psd(&dense, psd_tol)?;

    // The reduced Hessian is examined whenever the dispatch needs it,
    // and also recorded alongside a PSD full Hessian so callers can
    // audit that a PSD full Hessian never pairs with an indefinite
    // reduced one.
    let red = reduce(qp);
    let hred_psd = if red.dim() == 0 { d_psd } else { is_psd(&red.h, psd_tol)? };
    debug_assert!(
        !d_psd || hred_psd,
        "PSD full Hessian paired with an indefinite reduced Hessian"
    );

    if d_psd {
        // The problem is convex and every block subproblem is strictly
        // convex, so exact cyclic sweeps head for the same global
        // solution and cost almost nothing; the accelerated projected
        // gradient then certifies (or finishes) the KKT conditions.
        // Near-singular block diagonals make the gradient path alone
        // painfully slow, which is why the sweeps go first.
        let (warm, pre_sweeps, _) = descend(qp, u_init, 1e-12);
        let full = qp.full_polytope_qp();
        let sol = solve_psd_polytope(&full, &warm, FISTA_TOL)?;
        let mut u = sol.x;
        normalize_blocks(&mut u, qp.k());
        let objective = qp.quad_form(&u);
        return Ok(DbcdResult {
            u,
            route: SolveRoute::PsdFull,
            objective,
            iterations: pre_sweeps + sol.iterations,
            converged: sol.converged,
            d_psd,
            hred_psd: Some(hred_psd),
        });
    }

    if hred_psd {
        // A PSD reduced Hessian means the objective is convex on the
        // feasible manifold, so the same cheap sweep pre-pass applies
        // before the reduced-space certification.
        let (warm, pre_sweeps, _) = descend(qp, u_init, 1e-12);
        let poly = red.polytope_qp();
        let v0 = restrict(&warm, qp.r(), qp.k());
        let sol = solve_psd_polytope(&poly, &v0, FISTA_TOL)?;
        let mut u = expand(&sol.x, qp.r(), qp.k())?;
        normalize_blocks(&mut u, qp.k());
        let objective = qp.quad_form(&u);
        return Ok(DbcdResult {
            u,
            route: SolveRoute::PsdReduced,
            objective,
            iterations: pre_sweeps + sol.iterations,
            converged: sol.converged,
            d_psd,
            hred_psd: Some(hred_psd),
        });
    }

    if qp.k() == 2 && qp.r() == 2 {
        let mut best: Option<(Vec<f64>, f64, usize, bool)> = None;
        let mut total_sweeps = 0;
        let mut all_converged = true;
        for start in vertex_starts(2, 2)? {
            let (u, sweeps, converged) = descend(qp, &start, tol);
            total_sweeps += sweeps;
            all_converged &= converged;
            let f = qp.quad_form(&u);
            if best.as_ref().is_none_or(|(_, bf, _, _)| f < *bf) {
                best = Some((u, f, sweeps, converged));
            }
        }
        let (mut u, mut objective, _, _) = best.expect("four vertex starts");
        // The global minimum cannot exceed the warm start's value; keep
        // the start if descent tolerance left us marginally above it.
        let f_init = qp.quad_form(u_init);
        if objective > f_init {
            u = u_init.to_vec();
            objective = f_init;
        }
        normalize_blocks(&mut u, qp.k());
        return Ok(DbcdResult {
            u,
            route: SolveRoute::VertexExhaustive,
            objective,
            iterations: total_sweeps,
            converged: all_converged,
            d_psd,
            hred_psd: Some(hred_psd),
        });
    }

    let (mut u, sweeps, converged) = descend(qp, u_init, tol);
    normalize_blocks(&mut u, qp.k());
    let objective = qp.quad_form(&u);
    Ok(DbcdResult {
        u,
        route: SolveRoute::LocalDescent,
        objective,
        iterations: sweeps,
        converged,
        d_psd,
        hred_psd: Some(hred_psd),
    })
}

/// Snaps each block back onto the simplex (clip + rescale); solver
/// output is already there to ~1e-12.
fn normalize_blocks(u: &mut [f64], k: usize) {
    for block in u.chunks_mut(k) {
        renormalize_row(block);
    }
}
