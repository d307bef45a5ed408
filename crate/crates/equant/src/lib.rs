//! Numerical laboratory for coherent-state quantization on the line and the
//! half-line: truncated Hilbert-space representations, canonical and affine
//! coherent states, weak-correspondence symbols, Fubini-Study phase-space
//! geometry, classical contact transformations, restricted quantum actions,
//! and deficiency-index diagnostics for Hermitian-but-not-self-adjoint
//! operators.

// `!(x > 0.0)`-style guards reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affine;
pub mod canonical;
pub mod checks;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod geometry;
pub mod op;
pub mod rep;
pub mod selfadjoint;
pub mod special;
pub mod spectral;
pub mod state;
pub mod textfmt;

pub use error::{Error, Result};
pub use op::OperatorMatrix;
pub use rep::{GridSpacing, RepKind, Representation};
pub use state::StateVector;
