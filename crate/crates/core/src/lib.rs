//! Direct solution of full rank underdetermined systems and overdetermined
//! least-squares problems by matrix augmentation.
//!
//! The idea: cut the matrix into row blocks (underdetermined) or column
//! blocks (overdetermined), append an augmentation block Γ that makes the
//! blocks mutually orthogonal, and solve the augmented system in one shot as
//! a sum of independent per-block pseudoinverse applications plus a small
//! `q x q` correction. The original solution is recovered from the augmented
//! minimal-norm solution by closed-form block-parallel formulas.
//!
//! Pipeline: [`partition`] (optionally after an RCM reordering) →
//! [`augment`] → [`underdetermined::UnderSolver`] /
//! [`overdetermined::OverSolver`]. The [`oracle`] module is an independent
//! dense reference used to cross-check everything at desk scale.

#![allow(clippy::needless_range_loop)]

pub mod augment;
pub mod error;
pub mod factor;
pub mod fixtures;
pub mod matrix;
pub mod oracle;
pub mod overdetermined;
pub mod partition;
pub mod underdetermined;

pub use augment::{
    augment_cols, augment_rows, block_orthogonality, AugmentStrategy, AugmentedSystem,
    OrthogonalityReport,
};
pub use error::{Result, SolveError};
pub use factor::{factorize_block, BlockFactorization, Cholesky, HouseholderQr, Orientation};
pub use matrix::{dot, norm2, Matrix, Storage};
pub use overdetermined::{OverSolution, OverSolver, ResidualIdentityReport};
pub use partition::{
    make_partition, overlap_pairs, rcm_permutation, Axis, BlockPartition, PartitionSpec, Perm,
};
pub use underdetermined::{ProjectorBlocks, SchurS, UnderSolution, UnderSolver};

/// Default relative tolerance for rank detection in block factorizations.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Default normalized tolerance on off-diagonal block products.
pub const DEFAULT_ORTHO_TOL: f64 = 1e-12;
/// Default relative tolerance on solution certificates.
pub const DEFAULT_SOL_TOL: f64 = 1e-8;

/// Whether per-block work runs on the current thread or a rayon pool.
///
/// Block applications are independent; the reduction over blocks always
/// accumulates in block order, so both modes agree to well within rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threading {
    #[default]
    Sequential,
    Parallel,
}
