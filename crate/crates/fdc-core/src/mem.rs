//! Alternating driver for the constrained fuzzy clustering model: fix
//! memberships and update prototypes (deleting clusters whose weight
//! sum makes the prototype subproblem unbounded), then fix prototypes
//! and update memberships (closed form for unconstrained samples, one
//! structured QP per constraint component). The objective is logged
//! after each half-step; once the cluster count stabilizes the trace is
//! non-increasing whatever stationary points the component solver finds.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::block_qp::build_block_qp;
use crate::dbcd::{solve_component, SolveRoute};
use crate::error::FdcError;
use crate::linalg::{squared_distance, Matrix};
use crate::types::{
    connected_components, validate_inputs, Component, ConstraintSet, Dataset, FdcConfig,
    MembershipMatrix, Prototypes,
};

/// Distances below this are treated as exact prototype hits.
pub const ZERO_DIST_TOL: f64 = 1e-12;

/// How many component solves took each dispatch route during a fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RouteCounts {
    pub psd_full: usize,
    pub psd_reduced: usize,
    pub vertex_exhaustive: usize,
    pub local_descent: usize,
}

impl RouteCounts {
    pub fn bump(&mut self, route: SolveRoute) {
        match route {
            SolveRoute::PsdFull => self.psd_full += 1,
            SolveRoute::PsdReduced => self.psd_reduced += 1,
            SolveRoute::VertexExhaustive => self.vertex_exhaustive += 1,
            SolveRoute::LocalDescent => self.local_descent += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.psd_full + self.psd_reduced + self.vertex_exhaustive + self.local_descent
    }
}

/// Fitted model state.
#[derive(Debug, Clone)]
pub struct FdcModel {
    pub memberships: MembershipMatrix,
    /// Explicit centers; absent in kernel mode.
    pub prototypes: Option<Prototypes>,
    pub k_effective: usize,
    /// Objective value after every half-step (two entries per outer
    /// iteration: post-expectation, post-maximization).
    pub objective_trace: Vec<f64>,
    /// (outer iteration, column index at deletion time) per deletion.
    pub deleted_clusters: Vec<(usize, usize)>,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the cluster count collapsed all the way to one.
    pub degenerate_collapse: bool,
    pub route_counts: RouteCounts,
}

impl FdcModel {
    /// Trace suffix starting at the half-step after the last cluster
    /// deletion; this is the regime with the monotonicity guarantee.
    pub fn stable_trace(&self) -> &[f64] {
        let from = self
            .deleted_clusters
            .last()
            .map_or(0, |&(iter, _)| 2 * (iter - 1));
        &self.objective_trace[from.min(self.objective_trace.len())..]
    }
}

/// Prototype state and distance oracle for one metric space. Refresh is
/// called once per expectation step, after cluster deletion, with every
/// surviving cluster's weight sum strictly positive.
pub trait MetricSpace {
    fn refresh(&mut self, u: &MembershipMatrix, alpha: f64) -> Result<(), FdcError>;
    /// Squared distances, one row per sample, one column per cluster.
    fn distances(&self) -> &Matrix;
    /// Explicit centers, when the space has them.
    fn prototypes(&self) -> Option<Prototypes>;
}

/// Plain Euclidean feature space with explicit prototypes.
pub struct EuclideanSpace<'a> {
    data: &'a Dataset,
    prototypes: Option<Prototypes>,
    dist: Matrix,
}

impl<'a> EuclideanSpace<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        EuclideanSpace {
            data,
            prototypes: None,
            dist: Matrix::zeros(0, 0),
        }
    }
}

impl MetricSpace for EuclideanSpace<'_> {
    fn refresh(&mut self, u: &MembershipMatrix, alpha: f64) -> Result<(), FdcError> {
        let protos = compute_prototypes(u, self.data, alpha)?;
        let m = self.data.len();
        let k = u.k();
        let mut dist = Matrix::zeros(m, k);
        for i in 0..m {
            let x = self.data.sample(i);
            for j in 0..k {
                dist.set(i, j, squared_distance(x, protos.center(j)));
            }
        }
        self.prototypes = Some(protos);
        self.dist = dist;
        Ok(())
    }

    fn distances(&self) -> &Matrix {
        &self.dist
    }

    fn prototypes(&self) -> Option<Prototypes> {
        self.prototypes.clone()
    }
}

/// Weighted prototype update: `c_j = sum_i (u_ij^2 - alpha) x_i / sum_i
/// (u_ij^2 - alpha)`. Individual weights may be negative; the deletion
/// test guarantees each cluster's weight sum is positive here.
pub fn compute_prototypes(
    u: &MembershipMatrix,
    data: &Dataset,
    alpha: f64,
) -> Result<Prototypes, FdcError> {
    let m = data.len();
    let n = data.dim();
    let k = u.k();
    let mut c = Matrix::zeros(k, n);
    for j in 0..k {
        let mut wsum = 0.0;
        let row = c.row_mut(j);
        for i in 0..m {
            let uij = u.row(i)[j];
            let w = uij * uij - alpha;
            wsum += w;
            for (acc, &x) in row.iter_mut().zip(data.sample(i)) {
                *acc += w * x;
            }
        }
        if wsum <= 0.0 {
            return Err(FdcError::DeletedCluster { cluster: j });
        }
        for v in row.iter_mut() {
            *v /= wsum;
        }
    }
    Prototypes::new(c)
}

/// Applies the cluster-existence test: any cluster whose weight sum
/// `sum_i (u_ij^2 - alpha)` is non-positive has no finite prototype and
/// is removed (column dropped, rows renormalized). At least one cluster
/// always survives. Returns the dropped column indices in the order the
/// drops happened (indices refer to the matrix at drop time).
pub fn delete_failing_clusters(u: &mut MembershipMatrix, alpha: f64) -> Vec<usize> {
    let mut removed = Vec::new();
    loop {
        let k = u.k();
        if k == 1 {
            break;
        }
        let m = u.len();
        let mut weights = vec![0.0; k];
        for i in 0..m {
            for (w, &v) in weights.iter_mut().zip(u.row(i)) {
                *w += v * v - alpha;
            }
        }
        let mut failing: Vec<usize> = (0..k).filter(|&j| weights[j] <= 0.0).collect();
        if failing.is_empty() {
            break;
        }
        if failing.len() == k {
            // Everything failed at once; keep the least-bad cluster
            // (ties to the lowest index) so the model stays defined.
            let mut best = 0;
            for j in 1..k {
                if weights[j] > weights[best] {
                    best = j;
                }
            }
            failing.retain(|&j| j != best);
        }
        for &j in failing.iter().rev() {
            u.drop_column(j);
            removed.push(j);
        }
        // Renormalization only grows surviving entries, so survivors
        // keep passing; one more pass confirms and exits.
    }
    removed
}

/// Expectation step in the Euclidean space: delete failing clusters,
/// then recompute the surviving prototypes.
pub fn expectation_step(
    u: &mut MembershipMatrix,
    data: &Dataset,
    alpha: f64,
) -> Result<(Prototypes, usize), FdcError> {
    delete_failing_clusters(u, alpha);
    let protos = compute_prototypes(u, data, alpha)?;
    Ok((protos, u.k()))
}

/// Closed-form membership row for an unconstrained sample: mass is
/// proportional to inverse squared distance. Exact prototype hits get
/// the limit value: mass one split over the coincident clusters.
pub fn closed_form_row(dists: &[f64]) -> Vec<f64> {
    let k = dists.len();
    let zero_hits = dists.iter().filter(|&&d| d < ZERO_DIST_TOL).count();
    let mut row = vec![0.0; k];
    if zero_hits > 0 {
        let share = 1.0 / zero_hits as f64;
        for (r, &d) in row.iter_mut().zip(dists) {
            if d < ZERO_DIST_TOL {
                *r = share;
            }
        }
        return row;
    }
    let z: f64 = dists.iter().map(|&d| 1.0 / d).sum();
    for (r, &d) in row.iter_mut().zip(dists) {
        *r = (1.0 / d) / z;
    }
    row
}

/// Maximization step: unconstrained rows get the closed form; each
/// constraint component is assembled into its block QP and solved with
/// the previous memberships as warm start.
pub fn maximization_step(
    dist: &Matrix,
    u_prev: &MembershipMatrix,
    components: &[Component],
    cons: &ConstraintSet,
    cfg: &FdcConfig,
) -> Result<(MembershipMatrix, RouteCounts), FdcError> {
    let m = u_prev.len();
    let k = u_prev.k();
    debug_assert_eq!(dist.rows(), m);
    debug_assert_eq!(dist.cols(), k);
    let mut next = u_prev.clone();
    let mut constrained = vec![false; m];
    for comp in components {
        for &s in &comp.samples {
            constrained[s] = true;
        }
    }
    for i in 0..m {
        if !constrained[i] {
            let row = closed_form_row(dist.row(i));
            next.set_row(i, &row);
        }
    }
    let mut counts = RouteCounts::default();
    for comp in components {
        let r = comp.samples.len();
        let mut sub = Matrix::zeros(r, k);
        for (bi, &s) in comp.samples.iter().enumerate() {
            for j in 0..k {
                // Floor keeps the block diagonals strictly positive even
                // on an exact prototype hit.
                sub.set(bi, j, dist.get(s, j).max(ZERO_DIST_TOL));
            }
        }
        let qp = build_block_qp(comp, cons, &sub, cfg.beta);
        let mut warm = Vec::with_capacity(r * k);
        for &s in &comp.samples {
            warm.extend_from_slice(u_prev.row(s));
        }
        let res = solve_component(&qp, &warm, cfg.dbcd_tol, cfg.psd_tol)?;
        counts.bump(res.route);
        for (bi, &s) in comp.samples.iter().enumerate() {
            next.set_row(s, &res.u[bi * k..(bi + 1) * k]);
        }
    }
    Ok((next, counts))
}

/// Constraint cost: `0.5 * s * ||u_p - u_q||^2` for similarity,
/// `-s * u_p . u_q` for dissimilarity.
pub fn constraint_cost(up: &[f64], uq: &[f64], s: f64) -> f64 {
    if s >= 0.0 {
        0.5 * s * squared_distance(up, uq)
    } else {
        -s * crate::linalg::dot(up, uq)
    }
}

/// Full model objective for the given memberships and distances.
pub fn objective(
    u: &MembershipMatrix,
    dist: &Matrix,
    cons: &ConstraintSet,
    alpha: f64,
    beta: f64,
) -> f64 {
    let mut f = 0.0;
    for i in 0..u.len() {
        let row = u.row(i);
        let drow = dist.row(i);
        for (&uij, &d) in row.iter().zip(drow) {
            f += (uij * uij - alpha) * d;
        }
    }
    for c in cons.constraints() {
        f += beta * constraint_cost(u.row(c.p), u.row(c.q), c.s);
    }
    f
}

/// Memberships drawn uniformly at random on the simplex, row by row.
pub fn init_memberships(m: usize, k: usize, rng: &mut impl Rng) -> MembershipMatrix {
    let mut rows = Vec::with_capacity(m);
    for _ in 0..m {
        let mut row: Vec<f64> = (0..k)
            .map(|_| {
                let v: f64 = rng.random_range(0.0..1.0);
                -libm::log(1.0 - v)
            })
            .collect();
        crate::types::renormalize_row(&mut row);
        rows.push(row);
    }
    MembershipMatrix::from_rows(&rows).expect("simplex sampling is row-stochastic")
}

/// Runs the alternating loop in an arbitrary metric space.
pub fn fit_in_space<S: MetricSpace>(
    space: &mut S,
    m: usize,
    cons: &ConstraintSet,
    cfg: &FdcConfig,
) -> Result<FdcModel, FdcError> {
    cfg.validate()?;
    let components = connected_components(cons, m);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut u = init_memberships(m, cfg.k_max, &mut rng);
    let mut trace = Vec::new();
    let mut deleted = Vec::new();
    let mut route_counts = RouteCounts::default();
    let mut converged = false;
    let mut iterations = 0;

    for t in 1..=cfg.max_outer_iters {
        iterations = t;
        let u_before = u.clone();
        let k_before = u.k();

        for col in delete_failing_clusters(&mut u, cfg.alpha) {
            deleted.push((t, col));
        }
        space.refresh(&u, cfg.alpha)?;
        trace.push(objective(&u, space.distances(), cons, cfg.alpha, cfg.beta));

        let (u_next, counts) =
            maximization_step(space.distances(), &u, &components, cons, cfg)?;
        u = u_next;
        route_counts.psd_full += counts.psd_full;
        route_counts.psd_reduced += counts.psd_reduced;
        route_counts.vertex_exhaustive += counts.vertex_exhaustive;
        route_counts.local_descent += counts.local_descent;
        trace.push(objective(&u, space.distances(), cons, cfg.alpha, cfg.beta));

        if u.k() == k_before && u.max_abs_diff(&u_before) < cfg.outer_tol {
            converged = true;
            break;
        }
    }

    let k_effective = u.k();
    Ok(FdcModel {
        prototypes: space.prototypes(),
        k_effective,
        objective_trace: trace,
        deleted_clusters: deleted,
        iterations,
        converged,
        degenerate_collapse: k_effective == 1 && cfg.k_max > 1,
        route_counts,
        memberships: u,
    })
}

/// Fits the model in the Euclidean space.
pub fn fit(data: &Dataset, cons: &ConstraintSet, cfg: &FdcConfig) -> Result<FdcModel, FdcError> {
    validate_inputs(data, cons, cfg)?;
    let mut space = EuclideanSpace::new(data);
    fit_in_space(&mut space, data.len(), cons, cfg)
}
