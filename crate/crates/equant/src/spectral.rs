//! Spectral decomposition of hermitian operators and the matrix exponential
//! built on it.
//!
//! The exponential path is eigendecomposition: for hermitian `A` with
//! `A = U Λ U†` (in the weight-symmetrized picture on grids),
//! `exp(sA) v = U e^{sΛ} U† v` for any complex scalar `s`. This is exactly
//! unitary for purely imaginary `s` up to eigensolver roundoff, which the
//! unitarity tests pin below 1e-10.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::op::{scale_cols, scale_rows, OperatorMatrix, HERMITIAN_TOL};
use crate::rep::Representation;
use crate::state::StateVector;

/// Eigenvalues (ascending) and eigenvectors of a hermitian operator.
///
/// Eigenvectors are orthonormal under the representation's inner product.
#[derive(Debug, Clone)]
pub struct SpectralData {
    rep: Representation,
    label: String,
    eigenvalues: Vec<f64>,
    /// Columns are eigenvectors of the weight-symmetrized representative.
    basis: DMatrix<Complex64>,
    /// sqrt of the quadrature weights (all ones on Fock representations).
    w_sqrt: DVector<f64>,
}

/// Hermitian eigendecomposition; errors when the hermiticity defect of the
/// input exceeds `HERMITIAN_TOL`.
pub fn spectral_decompose(a: &OperatorMatrix) -> Result<SpectralData> {
    spectral_decompose_tol(a, HERMITIAN_TOL)
}

pub fn spectral_decompose_tol(a: &OperatorMatrix, rel_tol: f64) -> Result<SpectralData> {
    a.ensure_hermitian(rel_tol)?;
    let rep = a.rep().clone();
    let n = rep.dim();
    let w_sqrt = DVector::from_iterator(n, rep.weights().iter().map(|w| w.sqrt()));
    let w_sqrt_inv = DVector::from_iterator(n, rep.weights().iter().map(|w| 1.0 / w.sqrt()));

    // B = W^{1/2} A W^{-1/2} is plainly hermitian when A is hermitian under
    // the weighted inner product.
    let mut b = a.entries().clone();
    if rep.is_grid() {
        scale_rows(&mut b, &w_sqrt);
        scale_cols(&mut b, &w_sqrt_inv);
    }
    // Enforce exact hermiticity before the eigensolve so roundoff in the
    // input cannot leak into complex eigenvalues.
    let b = (&b + b.adjoint()) * Complex64::new(0.5, 0.0);

    let eig = b.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut basis = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        basis.set_column(k, &eig.eigenvectors.column(i));
    }

    Ok(SpectralData {
        rep,
        label: a.label().to_string(),
        eigenvalues,
        basis,
        w_sqrt,
    })
}

impl SpectralData {
    pub fn rep(&self) -> &Representation {
        &self.rep
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// k-th eigenvector, orthonormal under the representation's inner
    /// product (for grids this is `W^{-1/2}` times the symmetrized one).
    pub fn eigenvector(&self, k: usize) -> StateVector {
        let n = self.rep.dim();
        let mut coeffs = DVector::zeros(n);
        for i in 0..n {
            coeffs[i] = self.basis[(i, k)] / Complex64::new(self.w_sqrt[i], 0.0);
        }
        StateVector::new(self.rep.clone(), coeffs).expect("eigenvector dims match")
    }

    /// Apply `f(A)` to a vector through the eigenbasis.
    pub fn apply_fn(&self, f: impl Fn(f64) -> Complex64, v: &StateVector) -> Result<StateVector> {
        self.rep.ensure_same(v.rep())?;
        let n = self.rep.dim();
        // y = W^{1/2} v
        let mut y = v.coeffs().clone();
        for i in 0..n {
            y[i] *= Complex64::new(self.w_sqrt[i], 0.0);
        }
        let mut c = self.basis.adjoint() * y;
        for k in 0..n {
            c[k] *= f(self.eigenvalues[k]);
        }
        let mut out = &self.basis * c;
        for i in 0..n {
            out[i] /= Complex64::new(self.w_sqrt[i], 0.0);
        }
        StateVector::new(self.rep.clone(), out)
    }

    /// `exp(sA) v`
    pub fn apply_exp(&self, s: Complex64, v: &StateVector) -> Result<StateVector> {
        self.apply_fn(|lambda| (s * lambda).exp(), v)
    }

    /// Rebuild the operator as `Σ_k λ_k |k⟩⟨k|`.
    pub fn reconstruct(&self) -> OperatorMatrix {
        let n = self.rep.dim();
        let mut lambda_basis = self.basis.clone();
        for k in 0..n {
            let l = Complex64::new(self.eigenvalues[k], 0.0);
            for i in 0..n {
                lambda_basis[(i, k)] *= l;
            }
        }
        let mut m = lambda_basis * self.basis.adjoint();
        if self.rep.is_grid() {
            let w_sqrt_inv = DVector::from_iterator(n, self.w_sqrt.iter().map(|w| 1.0 / w));
            scale_rows(&mut m, &w_sqrt_inv);
            scale_cols(&mut m, &self.w_sqrt);
        }
        OperatorMatrix::from_entries_unchecked(self.rep.clone(), self.label.clone(), m)
    }

    /// Max deviation of `Σ_k |k⟩⟨k|` from the identity.
    pub fn completeness_defect(&self) -> f64 {
        let n = self.rep.dim();
        let p = &self.basis * self.basis.adjoint();
        let mut max = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                max = max.max((p[(i, j)] - expect).norm());
            }
        }
        max
    }
}

/// `exp(sA) v` for hermitian `A` and complex scalar `s`.
///
/// One-shot convenience over [`spectral_decompose`]; callers that
/// exponentiate the same operator repeatedly should hold a `SpectralData`.
pub fn expm_apply(a: &OperatorMatrix, s: Complex64, v: &StateVector) -> Result<StateVector> {
    if !s.re.is_finite() || !s.im.is_finite() {
        return Err(Error::NonFinite {
            context: "matrix exponential scalar".into(),
        });
    }
    spectral_decompose(a)?.apply_exp(s, v)
}
