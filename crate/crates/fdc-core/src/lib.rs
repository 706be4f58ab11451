//! Semi-supervised fuzzy clustering with fuzzy pairwise constraints.
//!
//! A fuzzy pairwise constraint grades the similarity (`s > 0`) or
//! dissimilarity (`s < 0`) between the fuzzy membership vectors of two
//! samples, generalizing hard must-link/cannot-link supervision. The
//! discriminant clustering model here fuses those constraints into a
//! c-means-style objective and minimizes it with an alternating driver
//! that can also shrink the cluster count on the fly. The membership
//! subproblems are structured quadratic programs over products of
//! probability simplices; depending on definiteness they are solved
//! globally by a convex solver (possibly after a null-space reduction)
//! or by cyclic exact block coordinate descent.
//!
//! The crate is `no_std` (it requires `alloc`). IO, file formats, and
//! the command-line front end live in the companion `fdc-cli` crate.

#![no_std]
// Index loops over parallel rows/columns mirror the matrix algebra and
// stay, even where an iterator chain would also work.
#![allow(clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod block_qp;
pub mod constraints_gen;
pub mod dbcd;
pub mod error;
pub mod fcm;
pub mod kernel;
pub mod linalg;
pub mod mem;
pub mod metrics;
pub mod simplex_qp;
pub mod types;

pub use error::FdcError;
pub use types::{
    connected_components, validate_inputs, Component, ConstraintSet, Dataset, FdcConfig,
    FuzzyConstraint, MembershipMatrix, Prototypes,
};
