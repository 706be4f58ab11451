//! Error type shared across the crate.

use alloc::string::String;

/// Errors raised by validation, solvers, and metrics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FdcError {
    /// Two inputs disagree on a dimension (named field tells which).
    #[error("dimension mismatch in `{field}`: {detail}")]
    DimensionMismatch { field: &'static str, detail: String },

    /// A constraint references a sample index outside `0..m`.
    #[error("constraint ({p},{q}) references a sample index out of range (m={m})")]
    ConstraintOutOfRange { p: usize, q: usize, m: usize },

    /// A scalar parameter is outside its admissible range.
    #[error("bad parameter `{field}`: {reason}")]
    BadParameter { field: &'static str, reason: String },

    /// The same unordered pair appears with two different strengths.
    #[error("conflicting constraints on pair ({p},{q}): {a} vs {b}")]
    ConflictingConstraint { p: usize, q: usize, a: f64, b: f64 },

    /// The symmetric eigenvalue iteration did not converge.
    #[error("symmetric eigenvalue routine failed to converge (n={n})")]
    EigenFailure { n: usize },

    /// A reduced-space point violates its polytope beyond tolerance.
    #[error("reduced point infeasible: {detail}")]
    InfeasibleReducedPoint { detail: String },

    /// Kernel distance requested for a cluster whose weight sum is <= 0.
    #[error("cluster {cluster} has non-positive weight sum; it should have been deleted")]
    DeletedCluster { cluster: usize },

    /// Vertex enumeration is only defined for two blocks of two clusters.
    #[error("vertex enumeration requires k=2, r=2 (got k={k}, r={r})")]
    ShapeUnsupported { k: usize, r: usize },

    /// More constraint pairs requested than distinct pairs exist.
    #[error("requested {requested} pairs but only {available} distinct pairs exist")]
    NotEnoughPairs { requested: usize, available: usize },

    /// Permutation-based metrics are capped at 8 clusters.
    #[error("too many clusters for permutation enumeration: {k} > {max}")]
    TooManyClusters { k: usize, max: usize },
}
