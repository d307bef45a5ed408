//! Position and momentum operators in the truncated Fock basis, and
//! polynomial composition with explicit or Weyl ordering.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::op::OperatorMatrix;
use crate::rep::Representation;

/// Build `Q = sqrt(hbar/2)(a + a†)` and `P = i sqrt(hbar/2)(a† - a)` with the
/// standard ladder matrices truncated to the representation's dimension.
///
/// Truncation convention: operators are truncated first, then multiplied, so
/// the commutator `[Q, P]` equals `i hbar` on the diagonal except for the
/// corner entry `i hbar (1 - N)` at the highest level. That defect is exact
/// in finite dimension and tested for rather than hidden.
pub fn build_fock_ops(rep: &Representation) -> Result<(OperatorMatrix, OperatorMatrix)> {
    if !rep.is_fock() {
        return Err(Error::InvalidRepresentation(
            "build_fock_ops needs a FockLine representation".into(),
        ));
    }
    let n = rep.dim();
    let scale = (rep.hbar() / 2.0).sqrt();
    let mut q = DMatrix::zeros(n, n);
    let mut p = DMatrix::zeros(n, n);
    for m in 0..n - 1 {
        // a|m+1> = sqrt(m+1)|m>, a†|m> = sqrt(m+1)|m+1>
        let r = ((m + 1) as f64).sqrt() * scale;
        q[(m, m + 1)] = Complex64::new(r, 0.0);
        q[(m + 1, m)] = Complex64::new(r, 0.0);
        p[(m, m + 1)] = Complex64::new(0.0, -r);
        p[(m + 1, m)] = Complex64::new(0.0, r);
    }
    Ok((
        OperatorMatrix::new(rep.clone(), "Q", q)?,
        OperatorMatrix::new(rep.clone(), "P", p)?,
    ))
}

/// The annihilation operator `a = (Q + iP)/sqrt(2 hbar)`.
pub fn lowering(rep: &Representation) -> Result<OperatorMatrix> {
    let (q, p) = build_fock_ops(rep)?;
    let sum = q.add(&p.scaled(Complex64::new(0.0, 1.0)))?;
    Ok(sum
        .scaled_re(1.0 / (2.0 * rep.hbar()).sqrt())
        .with_label("a"))
}

/// One letter of an operator word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Letter {
    P,
    Q,
}

/// A real-coefficient polynomial in two non-commuting generators with fully
/// explicit ordering: each term is a coefficient times a product of letters,
/// applied left to right.
#[derive(Debug, Clone)]
pub struct OperatorPoly {
    pub terms: Vec<(f64, Vec<Letter>)>,
}

impl OperatorPoly {
    pub fn new(terms: Vec<(f64, Vec<Letter>)>) -> Self {
        Self { terms }
    }

    /// Evaluate the word product with `P -> p_op`, `Q -> q_op`.
    pub fn build(&self, p_op: &OperatorMatrix, q_op: &OperatorMatrix) -> Result<OperatorMatrix> {
        p_op.rep().ensure_same(q_op.rep())?;
        let rep = p_op.rep().clone();
        let n = rep.dim();
        let mut acc = DMatrix::<Complex64>::zeros(n, n);
        for (coeff, word) in &self.terms {
            let mut term = DMatrix::<Complex64>::identity(n, n);
            for letter in word {
                let factor = match letter {
                    Letter::P => p_op.entries(),
                    Letter::Q => q_op.entries(),
                };
                term = crate::op::sparse_aware_mul(&term, factor);
            }
            acc += term * Complex64::new(*coeff, 0.0);
        }
        OperatorMatrix::new(rep, "poly", acc)
    }

    /// Evaluate with the generators shifted by scalars, `P -> P + dp`,
    /// `Q -> Q + dq`. Used for the operator-shift route of the
    /// weak-correspondence checks.
    pub fn build_shifted(
        &self,
        p_op: &OperatorMatrix,
        q_op: &OperatorMatrix,
        dp: f64,
        dq: f64,
    ) -> Result<OperatorMatrix> {
        self.build(&p_op.shifted(dp), &q_op.shifted(dq))
    }
}

/// Weyl (fully symmetrized) ordering of the classical monomial `p^m q^n`,
/// via the McCoy identity `2^{-m} Σ_k C(m,k) P^k Q^n P^{m-k}`.
pub fn weyl_monomial(m: usize, n: usize) -> OperatorPoly {
    let mut terms = Vec::with_capacity(m + 1);
    let norm = 0.5_f64.powi(m as i32);
    for k in 0..=m {
        let mut word = Vec::with_capacity(m + n);
        word.extend(std::iter::repeat_n(Letter::P, k));
        word.extend(std::iter::repeat_n(Letter::Q, n));
        word.extend(std::iter::repeat_n(Letter::P, m - k));
        terms.push((norm * binomial(m, k), word));
    }
    OperatorPoly::new(terms)
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}
