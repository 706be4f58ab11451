//! Assembly of the structured quadratic program for one constraint
//! component, and its null-space reduction onto the inequality polytope.
//!
//! For a component of `r` samples and `k` clusters the Hessian is an
//! `rk x rk` symmetric matrix whose diagonal blocks are diagonal
//! (squared distances plus the positive-constraint ridge) and whose
//! off-diagonal blocks are scalar multiples of the identity (the
//! constraint coupling). Both facts are exploited: blocks are stored as
//! a diagonal vector per sample plus one coupling scalar per pair.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::FdcError;
use crate::linalg::Matrix;
use crate::simplex_qp::{PolytopeQp, PolytopeStructure};
use crate::types::{Component, ConstraintSet};

/// Structured component Hessian: minimize `0.5 u' D u` over `r` blocks
/// of length `k`, each constrained to the probability simplex.
#[derive(Debug, Clone)]
pub struct BlockQp {
    /// Per-sample diagonal of the diagonal block, length k each.
    diag: Vec<Vec<f64>>,
    /// Symmetric coupling scalars; `coupling[i][j] * I` is block (i,j).
    coupling: Vec<Vec<f64>>,
    /// Maps block index to the sample's global index.
    sample_order: Vec<usize>,
    k: usize,
}

impl BlockQp {
    pub fn r(&self) -> usize {
        self.sample_order.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.r() * self.k
    }

    pub fn sample_order(&self) -> &[usize] {
        &self.sample_order
    }

    pub fn block_diag(&self, i: usize) -> &[f64] {
        &self.diag[i]
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.coupling[i][j]
        }
    }

    /// `0.5 * u' D u`.
    pub fn quad_form(&self, u: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.dim());
        let k = self.k;
        let r = self.r();
        let mut acc = 0.0;
        for i in 0..r {
            let ui = &u[i * k..(i + 1) * k];
            for (a, d) in ui.iter().zip(&self.diag[i]) {
                acc += d * a * a;
            }
            for j in (i + 1)..r {
                let c = self.coupling[i][j];
                if c != 0.0 {
                    let uj = &u[j * k..(j + 1) * k];
                    acc += 2.0 * c * crate::linalg::dot(ui, uj);
                }
            }
        }
        0.5 * acc
    }

    /// Linear term seen by block `i` when all other blocks are fixed:
    /// `g_i = sum_{j != i} D_ij u_j`.
    pub fn coupling_gradient(&self, u: &[f64], i: usize, out: &mut [f64]) {
        let k = self.k;
        out.fill(0.0);
        for j in 0..self.r() {
            if j == i {
                continue;
            }
            let c = self.coupling[i][j];
            if c != 0.0 {
                for (o, &v) in out.iter_mut().zip(&u[j * k..(j + 1) * k]) {
                    *o += c * v;
                }
            }
        }
    }

    /// Dense materialization, used by the definiteness checks.
    pub fn to_dense(&self) -> Matrix {
        let n = self.dim();
        let k = self.k;
        let mut m = Matrix::zeros(n, n);
        for i in 0..self.r() {
            for a in 0..k {
                m.set(i * k + a, i * k + a, self.diag[i][a]);
            }
            for j in 0..self.r() {
                if i != j {
                    let c = self.coupling[i][j];
                    if c != 0.0 {
                        for a in 0..k {
                            m.set(i * k + a, j * k + a, c);
                        }
                    }
                }
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().flatten().sum()
    }

    /// Full-space convex formulation over the product of simplices.
    pub fn full_polytope_qp(&self) -> PolytopeQp {
        PolytopeQp::new(
            self.to_dense(),
            vec![0.0; self.dim()],
            PolytopeStructure::FullSimplexProduct { r: self.r(), k: self.k },
        )
    }
}

/// Builds the component Hessian from squared distances and constraints.
/// `dist` row `i` holds the k squared distances of `component.samples[i]`.
/// The solver requires strictly positive block diagonals, so callers
/// feeding exact prototype hits floor their distances first (the
/// alternating driver floors at its zero-distance threshold).
pub fn build_block_qp(
    component: &Component,
    cons: &ConstraintSet,
    dist: &Matrix,
    beta: f64,
) -> BlockQp {
    let r = component.samples.len();
    let k = dist.cols();
    debug_assert_eq!(dist.rows(), r);
    debug_assert!(r >= 1 && k >= 1);
    let block_of = |sample: usize| -> usize {
        component
            .samples
            .binary_search(&sample)
            .expect("constraint endpoint outside component")
    };

    let mut diag: Vec<Vec<f64>> = (0..r).map(|i| dist.row(i).to_vec()).collect();
    let mut coupling = vec![vec![0.0; r]; r];
    for &ci in &component.constraint_indices {
        let c = cons.constraints()[ci];
        let (bi, bj) = (block_of(c.p), block_of(c.q));
        // Positive strengths add a ridge on both endpoint blocks.
        if c.s > 0.0 {
            let ridge = 0.5 * beta * c.s;
            for v in diag[bi].iter_mut() {
                *v += ridge;
            }
            for v in diag[bj].iter_mut() {
                *v += ridge;
            }
        }
        // Every constraint couples its endpoints by -beta*s/2, whatever
        // the sign of s.
        let off = -0.5 * beta * c.s;
        coupling[bi][bj] += off;
        coupling[bj][bi] += off;
    }
    BlockQp {
        diag,
        coupling,
        sample_order: component.samples.clone(),
        k,
    }
}

/// Null-space-reduced form: minimize `0.5 v' Hred v + gred' v` over
/// `r` blocks of length `k-1` with `v >= 0` and per-block sums <= 1.
/// A reduced point `v` maps back through [`expand`].
#[derive(Debug, Clone)]
pub struct ReducedQp {
    pub h: Matrix,
    pub g: Vec<f64>,
    /// Objective offset: full objective = reduced objective + constant.
    pub constant: f64,
    pub r: usize,
    pub k: usize,
}

impl ReducedQp {
    pub fn dim(&self) -> usize {
        self.r * (self.k - 1)
    }

    pub fn objective(&self, v: &[f64]) -> f64 {
        let mut hv = vec![0.0; v.len()];
        self.h.matvec(v, &mut hv);
        0.5 * crate::linalg::dot(v, &hv) + crate::linalg::dot(&self.g, v)
    }

    pub fn polytope_qp(&self) -> PolytopeQp {
        PolytopeQp::new(
            self.h.clone(),
            self.g.clone(),
            PolytopeStructure::Reduced { r: self.r, k: self.k },
        )
    }
}

/// Eliminates the per-block equality constraints through the particular
/// point `(1, 0, ..., 0)` per block and the null-space basis whose
/// columns are `e_{c+1} - e_1`. Block algebra of the reduced Hessian:
/// diagonal blocks become `diag(d_2..d_k) + d_1 * ones`, couplings
/// become `c * (I + ones)`.
pub fn reduce(qp: &BlockQp) -> ReducedQp {
    let r = qp.r();
    let k = qp.k();
    let n = r * k.saturating_sub(1);
    let mut h = Matrix::zeros(n, n);
    let mut g = vec![0.0; n];
    let mut constant = 0.0;
    if k >= 2 {
        for i in 0..r {
            let di = qp.block_diag(i);
            let base = i * (k - 1);
            for a in 0..(k - 1) {
                for b in 0..(k - 1) {
                    let v = if a == b { di[a + 1] + di[0] } else { di[0] };
                    h.set(base + a, base + b, v);
                }
            }
            for j in 0..r {
                if i == j {
                    continue;
                }
                let c = qp.coupling(i, j);
                if c != 0.0 {
                    let jbase = j * (k - 1);
                    for a in 0..(k - 1) {
                        for b in 0..(k - 1) {
                            let v = if a == b { 2.0 * c } else { c };
                            h.set(base + a, jbase + b, v);
                        }
                    }
                }
            }
        }
    }
    for i in 0..r {
        let mut w = qp.block_diag(i)[0];
        for j in 0..r {
            w += qp.coupling(i, j);
        }
        constant += 0.5 * w;
        if k >= 2 {
            for a in 0..(k - 1) {
                g[i * (k - 1) + a] = -w;
            }
        }
    }
    ReducedQp { h, g, constant, r, k }
}

/// Maps a reduced point back to the full membership vector:
/// block `i` becomes `(1 - sum v_i, v_i(1), ..., v_i(k-1))`.
pub fn expand(v: &[f64], r: usize, k: usize) -> Result<Vec<f64>, FdcError> {
    if k == 1 {
        return Ok(vec![1.0; r]);
    }
    debug_assert_eq!(v.len(), r * (k - 1));
    let mut u = Vec::with_capacity(r * k);
    for (bi, block) in v.chunks(k - 1).enumerate() {
        let mut sum = 0.0;
        for &val in block {
            if val < -1e-12 {
                return Err(FdcError::InfeasibleReducedPoint {
                    detail: format!("block {bi} has negative coordinate {val}"),
                });
            }
            sum += val;
        }
        if sum > 1.0 + 1e-9 {
            return Err(FdcError::InfeasibleReducedPoint {
                detail: format!("block {bi} sums to {sum} > 1"),
            });
        }
        u.push((1.0 - sum).max(0.0));
        for &val in block {
            u.push(val.max(0.0));
        }
    }
    Ok(u)
}

/// Restriction of current memberships to the component's reduced space.
pub fn restrict(u_full: &[f64], r: usize, k: usize) -> Vec<f64> {
    debug_assert_eq!(u_full.len(), r * k);
    if k == 1 {
        return Vec::new();
    }
    let mut v = Vec::with_capacity(r * (k - 1));
    for block in u_full.chunks(k) {
        v.extend_from_slice(&block[1..]);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{connected_components, ConstraintSet};

    fn pair_component(s: f64) -> (Component, ConstraintSet) {
        let cons = ConstraintSet::new([(0, 1, s)]).unwrap();
        let comps = connected_components(&cons, 2);
        (comps[0].clone(), cons)
    }

    /// Component objective in its source form, evaluated from the
    /// constraint costs directly; the quadratic form must equal half.
    fn source_objective(
        u: &[f64],
        dist: &Matrix,
        comp: &Component,
        cons: &ConstraintSet,
        beta: f64,
    ) -> f64 {
        let k = dist.cols();
        let mut f = 0.0;
        for (bi, _) in comp.samples.iter().enumerate() {
            for a in 0..k {
                let x = u[bi * k + a];
                f += x * x * dist.get(bi, a);
            }
        }
        for &ci in &comp.constraint_indices {
            let c = cons.constraints()[ci];
            let bp = comp.samples.binary_search(&c.p).unwrap();
            let bq = comp.samples.binary_search(&c.q).unwrap();
            let up = &u[bp * k..(bp + 1) * k];
            let uq = &u[bq * k..(bq + 1) * k];
            if c.s >= 0.0 {
                f += beta * 0.5 * c.s * crate::linalg::squared_distance(up, uq);
            } else {
                f += beta * (-c.s) * crate::linalg::dot(up, uq);
            }
        }
        f
    }

    #[test]
    fn single_sample_without_constraints_is_the_distance_diagonal() {
        let comp = Component {
            samples: alloc::vec![0],
            constraint_indices: alloc::vec![],
        };
        let cons = ConstraintSet::empty();
        let dist = Matrix::from_rows(&[alloc::vec![1.0, 4.0]]);
        let qp = build_block_qp(&comp, &cons, &dist, 2.0);
        assert_eq!(qp.block_diag(0), &[1.0, 4.0]);
        assert_eq!(qp.r(), 1);
    }

    #[test]
    fn positive_pair_adds_ridge_and_negative_coupling() {
        let (comp, cons) = pair_component(1.0);
        let dist = Matrix::zeros(2, 2);
        let qp = build_block_qp(&comp, &cons, &dist, 2.0);
        assert_eq!(qp.block_diag(0), &[1.0, 1.0]);
        assert_eq!(qp.block_diag(1), &[1.0, 1.0]);
        assert_eq!(qp.coupling(0, 1), -1.0);
        // Quadratic form equals half the similarity cost on a grid.
        let beta = 2.0;
        for i in 0..=10 {
            for j in 0..=10 {
                let u = [
                    i as f64 / 10.0,
                    1.0 - i as f64 / 10.0,
                    j as f64 / 10.0,
                    1.0 - j as f64 / 10.0,
                ];
                let src = source_objective(&u, &dist, &comp, &cons, beta);
                assert!((qp.quad_form(&u) - 0.5 * src).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn negative_pair_flips_the_coupling_sign() {
        let (comp, cons) = pair_component(-1.0);
        let dist = Matrix::zeros(2, 2);
        let qp = build_block_qp(&comp, &cons, &dist, 2.0);
        assert_eq!(qp.block_diag(0), &[0.0, 0.0]);
        assert_eq!(qp.coupling(0, 1), 1.0);
        let beta = 2.0;
        for i in 0..=10 {
            for j in 0..=10 {
                let u = [
                    i as f64 / 10.0,
                    1.0 - i as f64 / 10.0,
                    j as f64 / 10.0,
                    1.0 - j as f64 / 10.0,
                ];
                let src = source_objective(&u, &dist, &comp, &cons, beta);
                assert!((qp.quad_form(&u) - 0.5 * src).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trace_is_positive_for_real_distances() {
        let (comp, cons) = pair_component(-0.7);
        let dist = Matrix::from_rows(&[alloc::vec![0.5, 1.0], alloc::vec![2.0, 0.25]]);
        let qp = build_block_qp(&comp, &cons, &dist, 1.3);
        assert!(qp.trace() > 0.0);
    }

    #[test]
    fn reduction_reproduces_the_reference_matrix() {
        // dists (1,5) per sample and coupling +2 come from one pair with
        // beta*s = -4; the reduced Hessian must be [[6,4],[4,6]].
        let (comp, cons) = pair_component(-1.0);
        let dist = Matrix::from_rows(&[alloc::vec![1.0, 5.0], alloc::vec![1.0, 5.0]]);
        let qp = build_block_qp(&comp, &cons, &dist, 4.0);
        assert_eq!(qp.coupling(0, 1), 2.0);
        let red = reduce(&qp);
        assert_eq!(red.h.rows(), 2);
        assert!((red.h.get(0, 0) - 6.0).abs() < 1e-15);
        assert!((red.h.get(0, 1) - 4.0).abs() < 1e-15);
        assert!((red.h.get(1, 0) - 4.0).abs() < 1e-15);
        assert!((red.h.get(1, 1) - 6.0).abs() < 1e-15);
    }

    #[test]
    fn identity_single_block_reduces_to_scalar_two() {
        let comp = Component {
            samples: alloc::vec![0],
            constraint_indices: alloc::vec![],
        };
        let cons = ConstraintSet::empty();
        let dist = Matrix::from_rows(&[alloc::vec![1.0, 1.0]]);
        let qp = build_block_qp(&comp, &cons, &dist, 1.0);
        let red = reduce(&qp);
        assert_eq!(red.h.rows(), 1);
        assert!((red.h.get(0, 0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn objective_agreement_under_expansion() {
        let cons = ConstraintSet::new([(0, 1, -0.6), (1, 2, 0.8)]).unwrap();
        let comps = connected_components(&cons, 3);
        let dist = Matrix::from_rows(&[
            alloc::vec![0.3, 1.2, 0.7],
            alloc::vec![1.1, 0.2, 0.9],
            alloc::vec![0.6, 0.8, 0.1],
        ]);
        let qp = build_block_qp(&comps[0], &cons, &dist, 1.7);
        let red = reduce(&qp);
        // A handful of feasible reduced points.
        let points = [
            alloc::vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            alloc::vec![0.2, 0.3, 0.1, 0.4, 0.5, 0.5],
            alloc::vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            alloc::vec![0.25, 0.25, 0.3, 0.3, 0.2, 0.6],
        ];
        for v in points {
            let u = expand(&v, qp.r(), qp.k()).unwrap();
            let full = qp.quad_form(&u);
            let reduced = red.objective(&v) + red.constant;
            assert!(
                (full - reduced).abs() < 1e-10,
                "full {full} vs reduced-plus-constant {reduced}"
            );
        }
    }

    #[test]
    fn expand_trivial_and_full_transfer() {
        assert_eq!(expand(&[0.0], 1, 2).unwrap(), alloc::vec![1.0, 0.0]);
        assert_eq!(expand(&[1.0], 1, 2).unwrap(), alloc::vec![0.0, 1.0]);
        assert_eq!(
            expand(&[0.2, 0.3], 1, 3).unwrap(),
            alloc::vec![0.5, 0.2, 0.3]
        );
    }

    #[test]
    fn expand_rejects_infeasible_points() {
        assert!(matches!(
            expand(&[0.8, 0.8], 1, 3),
            Err(FdcError::InfeasibleReducedPoint { .. })
        ));
        assert!(matches!(
            expand(&[-0.5, 0.2], 1, 3),
            Err(FdcError::InfeasibleReducedPoint { .. })
        ));
    }
}
