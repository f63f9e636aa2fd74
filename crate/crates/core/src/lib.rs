//! Numerical verification of entropic limits on approximate quantum cloning
//! and broadcasting.
//!
//! The crate builds the relevant channels (universal cloners, symmetrized
//! partial traces, their subspace generalizations, rotated and averaged Petz
//! recovery maps) as dense superoperators and evaluates each inequality's
//! slack on deterministic fixtures and seeded random ensembles.

pub mod error;
pub mod matfun;
pub mod qstate;
pub mod subspace;
pub mod functional;
pub mod channel;
pub mod recovery;
pub mod verify;
pub mod cli;

pub use error::{Error, Result};
