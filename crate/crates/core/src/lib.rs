//! Canonicalization of eigenvectors and graphs under sign, basis and
//! permutation symmetries, with frame and canonical averaging and a
//! randomized verification battery.

pub mod averaging;
pub mod eig;
pub mod error;
pub mod graph;
pub mod lap;
pub mod linalg;
pub mod perm;
pub mod verify;

pub use eig::{CanonKind, CanonOutcome, Method};
pub use error::{CanonError, Result};
pub use lap::{KeyConfig, KeyVariant, PeConfig};
pub use linalg::{EigSpace, Matrix, Tolerances, Vector};
pub use num_bigint::BigUint;
pub use perm::Permutation;
