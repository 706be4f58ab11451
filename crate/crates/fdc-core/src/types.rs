//! Shared domain types, input validation, and the constraint graph used
//! to decompose the membership update into independent components.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::FdcError;
use crate::linalg::Matrix;

/// Sample matrix plus caller-defined identifiers, one per row.
#[derive(Debug, Clone)]
pub struct Dataset {
    samples: Matrix,
    ids: Vec<String>,
}

impl Dataset {
    /// Wraps an m x n sample matrix; ids default to the row index.
    pub fn new(samples: Matrix) -> Result<Self, FdcError> {
        let ids = (0..samples.rows()).map(|i| i.to_string()).collect();
        Dataset::with_ids(samples, ids)
    }

    pub fn with_ids(samples: Matrix, ids: Vec<String>) -> Result<Self, FdcError> {
        if samples.rows() == 0 || samples.cols() == 0 {
            return Err(FdcError::DimensionMismatch {
                field: "samples",
                detail: format!("need m >= 1 and n >= 1, got {}x{}", samples.rows(), samples.cols()),
            });
        }
        if ids.len() != samples.rows() {
            return Err(FdcError::DimensionMismatch {
                field: "ids",
                detail: format!("{} ids for {} samples", ids.len(), samples.rows()),
            });
        }
        if samples.data().iter().any(|v| !v.is_finite()) {
            return Err(FdcError::BadParameter {
                field: "samples",
                reason: "all entries must be finite".into(),
            });
        }
        Ok(Dataset { samples, ids })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, FdcError> {
        Dataset::new(Matrix::from_rows(rows))
    }

    pub fn len(&self) -> usize {
        self.samples.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.samples.cols()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        self.samples.row(i)
    }

    pub fn samples(&self) -> &Matrix {
        &self.samples
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}

/// Row-stochastic m x k fuzzy membership matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix {
    u: Matrix,
}

/// Row sums must match 1 within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-9;

impl MembershipMatrix {
    pub fn new(u: Matrix) -> Result<Self, FdcError> {
        let m = MembershipMatrix { u };
        m.validate()?;
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, FdcError> {
        MembershipMatrix::new(Matrix::from_rows(rows))
    }

    pub fn validate(&self) -> Result<(), FdcError> {
        if self.u.rows() == 0 || self.u.cols() == 0 {
            return Err(FdcError::DimensionMismatch {
                field: "memberships",
                detail: "need m >= 1 and k >= 1".into(),
            });
        }
        for i in 0..self.u.rows() {
            let row = self.u.row(i);
            let mut sum = 0.0;
            for &v in row {
                if !(0.0..=1.0).contains(&v) {
                    return Err(FdcError::BadParameter {
                        field: "memberships",
                        reason: format!("entry ({i}) = {v} outside [0,1]"),
                    });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(FdcError::BadParameter {
                    field: "memberships",
                    reason: format!("row {i} sums to {sum}"),
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.u.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.u.rows() == 0
    }

    pub fn k(&self) -> usize {
        self.u.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.u.row(i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.u
    }

    /// Overwrites row `i`, clipping tiny negatives and renormalizing.
    pub fn set_row(&mut self, i: usize, row: &[f64]) {
        debug_assert_eq!(row.len(), self.k());
        let dst = self.u.row_mut(i);
        dst.copy_from_slice(row);
        renormalize_row(dst);
        debug_assert!((dst.iter().sum::<f64>() - 1.0).abs() <= ROW_SUM_TOL);
    }

    /// Drops cluster column `j` and renormalizes every row; rows left
    /// with no mass are reset to uniform.
    pub fn drop_column(&mut self, j: usize) {
        self.u.drop_column(j);
        for i in 0..self.u.rows() {
            renormalize_row(self.u.row_mut(i));
        }
    }

    /// Largest absolute entrywise change; requires equal shapes.
    pub fn max_abs_diff(&self, other: &MembershipMatrix) -> f64 {
        debug_assert_eq!(self.u.rows(), other.u.rows());
        debug_assert_eq!(self.u.cols(), other.u.cols());
        self.u
            .data()
            .iter()
            .zip(other.u.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Clips negatives at zero and rescales to sum 1; a row without mass
/// becomes uniform.
pub(crate) fn renormalize_row(row: &mut [f64]) {
    let mut sum = 0.0;
    for v in row.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
        sum += *v;
    }
    if sum <= 1e-300 {
        let k = row.len() as f64;
        for v in row.iter_mut() {
            *v = 1.0 / k;
        }
    } else if (sum - 1.0).abs() > 1e-12 {
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Cluster centers, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Prototypes {
    c: Matrix,
}

impl Prototypes {
    pub fn new(c: Matrix) -> Result<Self, FdcError> {
        if c.data().iter().any(|v| !v.is_finite()) {
            return Err(FdcError::BadParameter {
                field: "prototypes",
                reason: "all entries must be finite".into(),
            });
        }
        Ok(Prototypes { c })
    }

    pub fn k(&self) -> usize {
        self.c.rows()
    }

    pub fn dim(&self) -> usize {
        self.c.cols()
    }

    pub fn center(&self, j: usize) -> &[f64] {
        self.c.row(j)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.c
    }
}

/// One fuzzy pairwise constraint: strength `s` in [-1,1]\{0} grading the
/// similarity (positive) or dissimilarity (negative) of samples `p`, `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuzzyConstraint {
    pub p: usize,
    pub q: usize,
    pub s: f64,
}

impl FuzzyConstraint {
    pub fn new(p: usize, q: usize, s: f64) -> Result<Self, FdcError> {
        if p == q {
            return Err(FdcError::BadParameter {
                field: "constraint",
                reason: format!("self-pair ({p},{p})"),
            });
        }
        if !s.is_finite() || s.abs() > 1.0 {
            return Err(FdcError::BadParameter {
                field: "constraint.s",
                reason: format!("s = {s} outside [-1,1]"),
            });
        }
        if s == 0.0 {
            // Zero means "unknown" and is rejected rather than dropped,
            // so a caller mistake cannot silently vanish.
            return Err(FdcError::BadParameter {
                field: "constraint.s",
                reason: "s = 0 denotes unknown; omit the pair instead".into(),
            });
        }
        // Normalized so p < q: (p,q) and (q,p) are the same pair.
        let (p, q) = if p < q { (p, q) } else { (q, p) };
        Ok(FuzzyConstraint { p, q, s })
    }
}

/// Deduplicated fuzzy pairwise constraints with a sample adjacency index.
#[derive(Debug, Clone, Default)]
pub struct ConstraintSet {
    constraints: Vec<FuzzyConstraint>,
    index: BTreeMap<usize, Vec<usize>>,
}

impl ConstraintSet {
    pub fn empty() -> Self {
        ConstraintSet::default()
    }

    /// Ingests raw (p, q, s) triples. Exact duplicates of an unordered
    /// pair merge; differing strengths on one pair are an error.
    pub fn new(raw: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self, FdcError> {
        let mut by_pair: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (p, q, s) in raw {
            let c = FuzzyConstraint::new(p, q, s)?;
            if let Some(&prev) = by_pair.get(&(c.p, c.q)) {
                if prev != c.s {
                    return Err(FdcError::ConflictingConstraint {
                        p: c.p,
                        q: c.q,
                        a: prev,
                        b: c.s,
                    });
                }
            } else {
                by_pair.insert((c.p, c.q), c.s);
            }
        }
        let constraints: Vec<FuzzyConstraint> = by_pair
            .into_iter()
            .map(|((p, q), s)| FuzzyConstraint { p, q, s })
            .collect();
        let mut index: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (ci, c) in constraints.iter().enumerate() {
            index.entry(c.p).or_default().push(ci);
            index.entry(c.q).or_default().push(ci);
        }
        Ok(ConstraintSet { constraints, index })
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn constraints(&self) -> &[FuzzyConstraint] {
        &self.constraints
    }

    /// Indices (into `constraints`) of the constraints touching `sample`.
    pub fn incident(&self, sample: usize) -> &[usize] {
        self.index.get(&sample).map_or(&[], Vec::as_slice)
    }

    /// Sample indices that appear in at least one constraint, ascending.
    pub fn constrained_samples(&self) -> Vec<usize> {
        self.index.keys().copied().collect()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.index.keys().next_back().copied()
    }
}

/// Configuration for a discriminant-clustering fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FdcConfig {
    /// Upper bound on the cluster count; the fit may delete clusters.
    pub k_max: usize,
    /// Prototype-effect threshold, in [0,1).
    pub alpha: f64,
    /// Constraint trade-off weight, >= 0.
    pub beta: f64,
    /// Fuzzy exponent; the solver supports exactly 2.
    pub gamma: f64,
    pub max_outer_iters: usize,
    /// Outer termination: max-norm membership change below this.
    pub outer_tol: f64,
    /// Block-coordinate-descent termination tolerance.
    pub dbcd_tol: f64,
    pub seed: u64,
    /// Relative tolerance for positive-semidefiniteness tests.
    pub psd_tol: f64,
}

impl FdcConfig {
    pub fn new(k_max: usize) -> Self {
        FdcConfig {
            k_max,
            alpha: 0.0,
            beta: 0.1,
            gamma: 2.0,
            max_outer_iters: 300,
            outer_tol: 1e-6,
            dbcd_tol: 1e-3,
            seed: 0,
            psd_tol: 1e-9,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), FdcError> {
        fn bad(field: &'static str, reason: String) -> FdcError {
            FdcError::BadParameter { field, reason }
        }
        if self.k_max == 0 {
            return Err(bad("k_max", "must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(bad("alpha", format!("{} outside [0,1)", self.alpha)));
        }
        // The model statement asks for beta > 0; beta = 0 is accepted so
        // the constraint-free degeneration stays expressible.
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(bad("beta", format!("{} must be >= 0", self.beta)));
        }
        if self.gamma != 2.0 {
            return Err(bad("gamma", "only gamma = 2 is supported".into()));
        }
        if self.max_outer_iters == 0 {
            return Err(bad("max_outer_iters", "must be >= 1".into()));
        }
        if self.outer_tol.is_nan() || self.outer_tol <= 0.0 {
            return Err(bad("outer_tol", "must be > 0".into()));
        }
        if self.dbcd_tol.is_nan() || self.dbcd_tol <= 0.0 {
            return Err(bad("dbcd_tol", "must be > 0".into()));
        }
        if self.psd_tol.is_nan() || self.psd_tol <= 0.0 {
            return Err(bad("psd_tol", "must be > 0".into()));
        }
        Ok(())
    }
}

/// Validates a dataset, constraint set, and configuration together.
pub fn validate_inputs(
    data: &Dataset,
    cons: &ConstraintSet,
    cfg: &FdcConfig,
) -> Result<(), FdcError> {
    cfg.validate()?;
    if let Some(max) = cons.max_index() {
        if max >= data.len() {
            let offending = cons
                .constraints()
                .iter()
                .find(|c| c.p >= data.len() || c.q >= data.len())
                .expect("max index implies an offending constraint");
            return Err(FdcError::ConstraintOutOfRange {
                p: offending.p,
                q: offending.q,
                m: data.len(),
            });
        }
    }
    Ok(())
}

/// One connected component of the constraint graph: the samples it
/// covers (ascending) and the indices of its constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub samples: Vec<usize>,
    pub constraint_indices: Vec<usize>,
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            core::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Partitions the constraints into connected components over the sample
/// graph. Components are ordered by their smallest member; samples and
/// constraint indices within a component ascend.
pub fn connected_components(cons: &ConstraintSet, m: usize) -> Vec<Component> {
    if cons.is_empty() {
        return Vec::new();
    }
    let mut uf = UnionFind::new(m);
    for c in cons.constraints() {
        uf.union(c.p, c.q);
    }
    // Group constrained samples by root, keyed by smallest member.
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for s in cons.constrained_samples() {
        let root = uf.find(s);
        groups.entry(root).or_default().push(s);
    }
    let mut components: Vec<Component> = groups
        .into_values()
        .map(|mut samples| {
            samples.sort_unstable();
            Component {
                samples,
                constraint_indices: Vec::new(),
            }
        })
        .collect();
    components.sort_by_key(|c| c.samples[0]);
    let mut of_sample: BTreeMap<usize, usize> = BTreeMap::new();
    for (ci, comp) in components.iter().enumerate() {
        for &s in &comp.samples {
            of_sample.insert(s, ci);
        }
    }
    for (idx, c) in cons.constraints().iter().enumerate() {
        let ci = of_sample[&c.p];
        debug_assert_eq!(ci, of_sample[&c.q]);
        components[ci].constraint_indices.push(idx);
    }
    components
}
