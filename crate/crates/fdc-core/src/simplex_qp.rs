//! Convex QP solvers for the two feasible regions that arise in the
//! membership updates: a single probability simplex (per-block
//! subproblem) and a product of simplices or its null-space-reduced
//! polytope (whole-component subproblem when the Hessian is PSD).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::FdcError;
use crate::linalg::{symmetric_eigenvalues, Matrix};

/// Strictly convex diagonal QP over one probability simplex:
/// minimize `0.5 * sum d_j u_j^2 + sum g_j u_j` s.t. `sum u = 1`, `u >= 0`.
#[derive(Debug, Clone)]
pub struct SimplexQp {
    pub d: Vec<f64>,
    pub g: Vec<f64>,
}

impl SimplexQp {
    pub fn new(d: Vec<f64>, g: Vec<f64>) -> Self {
        debug_assert_eq!(d.len(), g.len());
        debug_assert!(d.iter().all(|&v| v > 0.0), "diagonal must be positive");
        SimplexQp { d, g }
    }

    pub fn objective(&self, u: &[f64]) -> f64 {
        u.iter()
            .zip(self.d.iter().zip(&self.g))
            .map(|(&u, (&d, &g))| 0.5 * d * u * u + g * u)
            .sum()
    }
}

/// Exact active-set solution by scanning the breakpoints of the
/// water-filling condition `u_j = max(0, (lambda - g_j) / d_j)` for the
/// multiplier `lambda` at which the masses sum to one.
pub fn solve_diag_simplex(qp: &SimplexQp) -> Vec<f64> {
    let k = qp.d.len();
    debug_assert!(k >= 1);
    if k == 1 {
        return vec![1.0];
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| qp.g[a].total_cmp(&qp.g[b]));

    // Activating indices in ascending g: with t actives,
    // lambda_t = (1 + sum g_j/d_j) / (sum 1/d_j) over the active set.
    // The first t whose lambda_t does not exceed the next breakpoint is
    // the true active count (the mass function is monotone in lambda).
    let mut inv_sum = 0.0;
    let mut ratio_sum = 0.0;
    let mut lambda = f64::INFINITY;
    let mut active = k;
    for t in 0..k {
        let j = order[t];
        inv_sum += 1.0 / qp.d[j];
        ratio_sum += qp.g[j] / qp.d[j];
        let cand = (1.0 + ratio_sum) / inv_sum;
        let upper = if t + 1 < k { qp.g[order[t + 1]] } else { f64::INFINITY };
        if cand <= upper {
            lambda = cand;
            active = t + 1;
            break;
        }
    }
    let mut u = vec![0.0; k];
    for &j in &order[..active] {
        u[j] = ((lambda - qp.g[j]) / qp.d[j]).max(0.0);
    }
    let sum: f64 = u.iter().sum();
    if (sum - 1.0).abs() > 1e-12 && sum > 0.0 {
        for v in &mut u {
            *v /= sum;
        }
    }
    u
}

/// Relative positive-semidefiniteness test: true iff the smallest
/// eigenvalue is >= -tol * (1 + |largest eigenvalue|).
pub fn is_psd(h: &Matrix, tol: f64) -> Result<bool, FdcError> {
    debug_assert!(h.is_symmetric(1e-10), "is_psd expects a symmetric matrix");
    let eig = symmetric_eigenvalues(h, 60)?;
    if eig.is_empty() {
        return Ok(true);
    }
    let min = eig[0];
    let max = eig[eig.len() - 1];
    Ok(min >= -tol * (1.0 + max.abs()))
}

/// Feasible-region tag for [`PolytopeQp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolytopeStructure {
    /// `r` blocks of length `k`, each on the probability simplex.
    FullSimplexProduct { r: usize, k: usize },
    /// `r` blocks of length `k - 1`, each in `{v >= 0, sum v <= 1}`.
    Reduced { r: usize, k: usize },
}

impl PolytopeStructure {
    pub fn block_len(&self) -> usize {
        match *self {
            PolytopeStructure::FullSimplexProduct { k, .. } => k,
            PolytopeStructure::Reduced { k, .. } => k - 1,
        }
    }

    pub fn blocks(&self) -> usize {
        match *self {
            PolytopeStructure::FullSimplexProduct { r, .. } | PolytopeStructure::Reduced { r, .. } => r,
        }
    }

    pub fn dim(&self) -> usize {
        self.blocks() * self.block_len()
    }
}

/// Convex QP `0.5 x'Hx + g'x` over a block-separable polytope.
#[derive(Debug, Clone)]
pub struct PolytopeQp {
    pub h: Matrix,
    pub g: Vec<f64>,
    pub structure: PolytopeStructure,
}

impl PolytopeQp {
    pub fn new(h: Matrix, g: Vec<f64>, structure: PolytopeStructure) -> Self {
        debug_assert_eq!(h.rows(), structure.dim());
        debug_assert_eq!(g.len(), structure.dim());
        debug_assert!(h.is_symmetric(1e-10));
        PolytopeQp { h, g, structure }
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut hx = vec![0.0; x.len()];
        self.h.matvec(x, &mut hx);
        0.5 * crate::linalg::dot(x, &hx) + crate::linalg::dot(&self.g, x)
    }

    /// Euclidean projection onto the feasible set, block by block.
    pub fn project(&self, x: &mut [f64]) {
        let bl = self.structure.block_len();
        for block in x.chunks_mut(bl) {
            match self.structure {
                PolytopeStructure::FullSimplexProduct { .. } => project_simplex(block),
                PolytopeStructure::Reduced { .. } => project_capped_simplex(block),
            }
        }
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        let bl = self.structure.block_len();
        x.chunks(bl).all(|b| {
            let sum: f64 = b.iter().sum();
            let nonneg = b.iter().all(|&v| v >= -tol);
            match self.structure {
                PolytopeStructure::FullSimplexProduct { .. } => nonneg && (sum - 1.0).abs() <= tol,
                PolytopeStructure::Reduced { .. } => nonneg && sum <= 1.0 + tol,
            }
        })
    }
}

/// In-place Euclidean projection onto `{u >= 0, sum u = 1}`.
pub fn project_simplex(x: &mut [f64]) {
    let k = x.len();
    if k == 1 {
        x[0] = 1.0;
        return;
    }
    let mut sorted: Vec<f64> = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        cum += v;
        let t = (cum - 1.0) / (i as f64 + 1.0);
        if i + 1 == k || sorted[i + 1] <= t {
            tau = t;
            break;
        }
    }
    for v in x.iter_mut() {
        *v = (*v - tau).max(0.0);
    }
}

/// In-place Euclidean projection onto `{v >= 0, sum v <= 1}`.
pub fn project_capped_simplex(x: &mut [f64]) {
    let mut clipped_sum = 0.0;
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
        clipped_sum += *v;
    }
    if clipped_sum > 1.0 {
        project_simplex(x);
    }
}

/// Outcome of the accelerated projected-gradient solve.
#[derive(Debug, Clone)]
pub struct PolytopeSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit; `x` is the best iterate.
    pub converged: bool,
}

pub const CQPP_MAX_ITERS: usize = 20_000;

/// Monotone Nesterov-accelerated projected gradient for a PSD Hessian.
/// Terminates when the projected-gradient residual at step `1/L` falls
/// below `tol`; the objective never rises above the start's.
pub fn solve_psd_polytope(qp: &PolytopeQp, x0: &[f64], tol: f64) -> Result<PolytopeSolution, FdcError> {
    let n = qp.structure.dim();
    if x0.len() != n {
        return Err(FdcError::DimensionMismatch {
            field: "x0",
            detail: format!("expected {n}, got {}", x0.len()),
        });
    }
    let eig = symmetric_eigenvalues(&qp.h, 60)?;
    let lmax = eig.last().copied().unwrap_or(0.0);
    let step = 1.0 / lmax.max(1e-12);

    let mut x = x0.to_vec();
    qp.project(&mut x);
    let mut fx = qp.objective(&x);
    let mut x_prev = x.clone();
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut grad = vec![0.0; n];
    let mut z = vec![0.0; n];

    // Movement of one projected-gradient step: zero exactly at KKT
    // points and in the iterate's own units, so the test is scale-free.
    let residual_at = |point: &[f64], grad: &[f64]| -> f64 {
        let mut moved: Vec<f64> = point
            .iter()
            .zip(grad)
            .map(|(p, g)| p - step * g)
            .collect();
        qp.project(&mut moved);
        moved
            .iter()
            .zip(point)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };

    // Warm starts are often already optimal.
    qp.h.matvec(&x, &mut grad);
    for (g, &lin) in grad.iter_mut().zip(&qp.g) {
        *g += lin;
    }
    if residual_at(&x, &grad) <= tol {
        return Ok(PolytopeSolution {
            kkt_residual: residual_at(&x, &grad),
            x,
            objective: fx,
            iterations: 0,
            converged: true,
        });
    }

    let mut stall = 0usize;
    for iter in 1..=CQPP_MAX_ITERS {
        qp.h.matvec(&y, &mut grad);
        for (g, &lin) in grad.iter_mut().zip(&qp.g) {
            *g += lin;
        }
        for ((zi, &yi), &gi) in z.iter_mut().zip(&y).zip(&grad) {
            *zi = yi - step * gi;
        }
        qp.project(&mut z);
        let fz = qp.objective(&z);

        // Monotone variant: the tracked iterate never worsens, while the
        // momentum sequence still uses the raw step.
        let (x_new, fx_new) = if fz <= fx { (z.clone(), fz) } else { (x.clone(), fx) };

        let t_new = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t));
        for i in 0..n {
            y[i] = x_new[i] + (t / t_new) * (z[i] - x_new[i]) + ((t - 1.0) / t_new) * (x_new[i] - x_prev[i]);
        }

        qp.h.matvec(&x_new, &mut grad);
        for (g, &lin) in grad.iter_mut().zip(&qp.g) {
            *g += lin;
        }
        let res = residual_at(&x_new, &grad);

        let improved = fx - fx_new > 1e-16 * (1.0 + fx.abs());
        stall = if improved { 0 } else { stall + 1 };

        x_prev = x;
        x = x_new;
        fx = fx_new;
        t = t_new;

        if res <= tol || stall > 200 {
            return Ok(PolytopeSolution {
                x,
                objective: fx,
                kkt_residual: res,
                iterations: iter,
                converged: res <= tol,
            });
        }
    }
    qp.h.matvec(&x, &mut grad);
    for (g, &lin) in grad.iter_mut().zip(&qp.g) {
        *g += lin;
    }
    let res = residual_at(&x, &grad);
    Ok(PolytopeSolution {
        x,
        objective: fx,
        kkt_residual: res,
        iterations: CQPP_MAX_ITERS,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid_min_simplex(qp: &SimplexQp, step: f64) -> f64 {
        // Dense grid over the 2-simplex; only used for k = 2 oracles.
        assert_eq!(qp.d.len(), 2);
        let mut best = f64::INFINITY;
        let n = (1.0 / step) as usize;
        for i in 0..=n {
            let u0 = i as f64 * step;
            let u = [u0, 1.0 - u0];
            best = best.min(qp.objective(&u));
        }
        best
    }

    #[test]
    fn symmetric_case_splits_evenly() {
        let u = solve_diag_simplex(&SimplexQp::new(vec![2.0, 2.0], vec![0.0, 0.0]));
        assert!((u[0] - 0.5).abs() < 1e-12 && (u[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn strong_linear_pull_activates_bound() {
        let u = solve_diag_simplex(&SimplexQp::new(vec![1.0, 1.0], vec![0.0, -10.0]));
        assert!(u[0].abs() < 1e-12);
        assert!((u[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unequal_curvatures_follow_stationarity() {
        let qp = SimplexQp::new(vec![2.0, 4.0], vec![0.0, 0.0]);
        let u = solve_diag_simplex(&qp);
        assert!((u[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((u[1] - 1.0 / 3.0).abs() < 1e-12);
        // Brute-force grid agrees.
        let grid = grid_min_simplex(&qp, 1e-3);
        assert!(qp.objective(&u) <= grid + 1e-9);
    }

    proptest! {
        #[test]
        fn kkt_multipliers_match_on_active_set(
            d in proptest::collection::vec(0.05f64..20.0, 2..6),
            g in proptest::collection::vec(-5.0f64..5.0, 2..6),
        ) {
            let k = d.len().min(g.len());
            let qp = SimplexQp::new(d[..k].to_vec(), g[..k].to_vec());
            let u = solve_diag_simplex(&qp);
            let sum: f64 = u.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(u.iter().all(|&v| v >= 0.0));
            // Equal multipliers d_j u_j + g_j on the active set.
            let mults: Vec<f64> = (0..k)
                .filter(|&j| u[j] > 0.0)
                .map(|j| qp.d[j] * u[j] + qp.g[j])
                .collect();
            for w in mults.windows(2) {
                prop_assert!((w[0] - w[1]).abs() < 1e-8);
            }
            // Inactive coordinates must not want mass: g_j >= lambda.
            let lambda = mults[0];
            for j in 0..k {
                if u[j] == 0.0 {
                    prop_assert!(qp.g[j] >= lambda - 1e-8);
                }
            }
        }
    }

    #[test]
    fn psd_detects_the_reference_matrices() {
        let pd = Matrix::from_rows(&[vec![6.0, 4.0], vec![4.0, 6.0]]);
        assert!(is_psd(&pd, 1e-9).unwrap());
        let indef = Matrix::from_rows(&[
            vec![1.0, 0.0, 2.0, 0.0],
            vec![0.0, 5.0, 0.0, 2.0],
            vec![2.0, 0.0, 1.0, 0.0],
            vec![0.0, 2.0, 0.0, 5.0],
        ]);
        assert!(!is_psd(&indef, 1e-9).unwrap());
        let eye = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(is_psd(&eye, 1e-9).unwrap());
    }

    /// Characteristic-polynomial eigenvalue oracle for 2x2 symmetric.
    fn min_eig_2x2(a: f64, b: f64, c: f64) -> f64 {
        // matrix [a b; b c]
        let tr = a + c;
        let det = a * c - b * b;
        let disc = libm::sqrt((tr * tr - 4.0 * det).max(0.0));
        0.5 * (tr - disc)
    }

    proptest! {
        #[test]
        fn psd_agrees_with_char_poly_2x2(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0) {
            let m = Matrix::from_rows(&[vec![a, b], vec![b, c]]);
            let min = min_eig_2x2(a, b, c);
            let eig = symmetric_eigenvalues(&m, 60).unwrap();
            prop_assert!((eig[0] - min).abs() < 1e-9 * (1.0 + min.abs()));
        }
    }

    #[test]
    fn psd_agrees_with_char_poly_3x3() {
        // Trigonometric solution of the characteristic cubic as an
        // independent route for a handful of fixed matrices.
        let cases = [
            [[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]],
            [[1.0, 2.0, 3.0], [2.0, 1.0, 2.0], [3.0, 2.0, 1.0]],
            [[4.0, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, -0.1]],
        ];
        for c in cases {
            let m = Matrix::from_rows(&[c[0].to_vec(), c[1].to_vec(), c[2].to_vec()]);
            let eig = symmetric_eigenvalues(&m, 60).unwrap();
            let oracle = {
                // Roots of det(M - xI) via the trigonometric method.
                let p1 = c[0][1] * c[0][1] + c[0][2] * c[0][2] + c[1][2] * c[1][2];
                let q = (c[0][0] + c[1][1] + c[2][2]) / 3.0;
                let p2 = (c[0][0] - q) * (c[0][0] - q)
                    + (c[1][1] - q) * (c[1][1] - q)
                    + (c[2][2] - q) * (c[2][2] - q)
                    + 2.0 * p1;
                let p = libm::sqrt(p2 / 6.0);
                let det_b = |b: [[f64; 3]; 3]| -> f64 {
                    b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
                        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
                        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0])
                };
                let mut b = c;
                for i in 0..3 {
                    for j in 0..3 {
                        b[i][j] = (c[i][j] - if i == j { q } else { 0.0 }) / p;
                    }
                }
                let r = (det_b(b) / 2.0).clamp(-1.0, 1.0);
                let phi = libm::acos(r) / 3.0;
                let e1 = q + 2.0 * p * libm::cos(phi);
                let e3 = q + 2.0 * p * libm::cos(phi + 2.0 * core::f64::consts::PI / 3.0);
                let e2 = 3.0 * q - e1 - e3;
                let mut v = [e1, e2, e3];
                v.sort_by(|a, b| a.total_cmp(b));
                v
            };
            for (got, want) in eig.iter().zip(oracle) {
                assert!((got - want).abs() < 1e-8, "got {got}, want {want}");
            }
        }
    }

    #[test]
    fn identity_hessian_splits_blocks_evenly() {
        let h = {
            let mut m = Matrix::zeros(4, 4);
            for i in 0..4 {
                m.set(i, i, 1.0);
            }
            m
        };
        let qp = PolytopeQp::new(h, vec![0.0; 4], PolytopeStructure::FullSimplexProduct { r: 2, k: 2 });
        let sol = solve_psd_polytope(&qp, &[1.0, 0.0, 0.0, 1.0], 1e-10).unwrap();
        assert!(sol.converged);
        for &v in &sol.x {
            assert!((v - 0.5).abs() < 1e-8);
        }
    }

    #[test]
    fn single_block_matches_diag_solver() {
        let d = vec![1.5, 0.7, 3.0];
        let g = vec![0.2, -0.4, 0.9];
        let mut h = Matrix::zeros(3, 3);
        for i in 0..3 {
            h.set(i, i, d[i]);
        }
        let qp = PolytopeQp::new(h, g.clone(), PolytopeStructure::FullSimplexProduct { r: 1, k: 3 });
        let sol = solve_psd_polytope(&qp, &[1.0, 0.0, 0.0], 1e-11).unwrap();
        let exact = solve_diag_simplex(&SimplexQp::new(d, g));
        for (a, b) in sol.x.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn random_psd_matches_grid_oracle() {
        // Fixed PSD Hessian (A'A) on two 2-blocks against a coarse grid.
        let a = Matrix::from_rows(&[
            vec![1.0, 0.3, -0.2, 0.5],
            vec![0.0, 0.8, 0.4, -0.3],
            vec![0.2, -0.1, 1.2, 0.6],
            vec![0.4, 0.2, 0.0, 0.9],
        ]);
        let mut h = Matrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = 0.0;
                for l in 0..4 {
                    acc += a.get(l, i) * a.get(l, j);
                }
                h.set(i, j, acc);
            }
        }
        let g = vec![0.1, -0.2, 0.05, 0.3];
        let qp = PolytopeQp::new(h, g, PolytopeStructure::FullSimplexProduct { r: 2, k: 2 });
        let sol = solve_psd_polytope(&qp, &[0.5, 0.5, 0.5, 0.5], 1e-10).unwrap();
        let mut best = f64::INFINITY;
        let n = 100;
        for i in 0..=n {
            for j in 0..=n {
                let x = [
                    i as f64 / n as f64,
                    1.0 - i as f64 / n as f64,
                    j as f64 / n as f64,
                    1.0 - j as f64 / n as f64,
                ];
                best = best.min(qp.objective(&x));
            }
        }
        assert!(sol.objective <= best + 1e-4);
    }

    #[test]
    fn descent_from_start_never_increases() {
        let h = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let qp = PolytopeQp::new(h, vec![-1.0, 0.5], PolytopeStructure::Reduced { r: 1, k: 3 });
        let x0 = [0.9, 0.05];
        let f0 = qp.objective(&x0);
        let sol = solve_psd_polytope(&qp, &x0, 1e-10).unwrap();
        assert!(sol.objective <= f0 + 1e-15);
        assert!(qp.is_feasible(&sol.x, 1e-12));
    }

    #[test]
    fn capped_projection_clips_or_projects() {
        let mut inside = [0.2, -0.1, 0.3];
        project_capped_simplex(&mut inside);
        assert_eq!(inside, [0.2, 0.0, 0.3]);
        let mut outside = [0.9, 0.8, 0.0];
        project_capped_simplex(&mut outside);
        let sum: f64 = outside.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(outside.iter().all(|&v| v >= 0.0));
    }
}
