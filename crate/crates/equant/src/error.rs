//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),

    #[error("representation mismatch between `{left}` and `{right}`")]
    RepMismatch { left: String, right: String },

    #[error(
        "operator `{label}` is not hermitian: defect {defect:.3e} exceeds tolerance {tol:.3e}"
    )]
    NonHermitian {
        label: String,
        defect: f64,
        tol: f64,
    },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    #[error("expectation value has imaginary residue {residue:.3e} above tolerance {tol:.3e}")]
    ImaginaryResidue { residue: f64, tol: f64 },

    #[error(
        "truncation warning at (p, q) = ({p}, {q}): estimated representation error {estimate:.3e} \
         exceeds {tol:.3e}; enlarge the representation or stay closer to the origin"
    )]
    Truncation {
        p: f64,
        q: f64,
        estimate: f64,
        tol: f64,
    },

    #[error("grid resolution too coarse: {context}; suggest at least {suggested} points")]
    Resolution { context: String, suggested: usize },

    #[error("grid window too small: tail mass {tail_mass:.3e} exceeds {tol:.3e}")]
    Window { tail_mass: f64, tol: f64 },

    #[error("finite differencing did not converge in {context}: estimate {estimate:.3e} exceeds {tol:.3e}")]
    StepSize {
        context: String,
        estimate: f64,
        tol: f64,
    },

    #[error("stencil at (p, q) = ({p}, {q}) with step {step} leaves the trusted region")]
    Region { p: f64, q: f64, step: f64 },

    #[error("contact transform `{label}` is degenerate near (p, q) = ({p}, {q})")]
    DegenerateTransform { label: String, p: f64, q: f64 },

    #[error("contact transform `{label}` carries no generator, required for this operation")]
    GeneratorRequired { label: String },

    #[error("trajectory blew up: last finite state at t = {last_time}")]
    BlowUp { last_time: f64 },
}
