//! State vectors and the representation-aware inner product.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rep::Representation;

/// A complex coefficient vector in a chosen representation.
///
/// For `FockLine` the coefficients are amplitudes in the number basis and the
/// inner product is the plain conjugated sum. For `HalfLineGrid` the
/// coefficients are wavefunction samples at the grid nodes and the inner
/// product carries the quadrature weights, so `⟨ψ|ψ⟩` approximates
/// `∫_0^∞ |ψ(x)|² dx`.
#[derive(Debug, Clone)]
pub struct StateVector {
    rep: Representation,
    coeffs: DVector<Complex64>,
}

impl StateVector {
    pub fn new(rep: Representation, coeffs: DVector<Complex64>) -> Result<Self> {
        if coeffs.len() != rep.dim() {
            return Err(Error::InvalidRepresentation(format!(
                "coefficient length {} does not match representation dimension {}",
                coeffs.len(),
                rep.dim()
            )));
        }
        if coeffs
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::NonFinite {
                context: "state coefficients".into(),
            });
        }
        Ok(Self { rep, coeffs })
    }

    /// Basis vector e_k.
    pub fn basis(rep: Representation, k: usize) -> Result<Self> {
        let n = rep.dim();
        if k >= n {
            return Err(Error::InvalidRepresentation(format!(
                "basis index {k} out of range for dimension {n}"
            )));
        }
        let mut coeffs = DVector::zeros(n);
        coeffs[k] = Complex64::new(1.0, 0.0);
        Self::new(rep, coeffs)
    }

    /// Sample a complex-valued function on the grid nodes.
    pub fn from_fn(rep: Representation, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        if !rep.is_grid() {
            return Err(Error::InvalidRepresentation(
                "from_fn needs a grid representation".into(),
            ));
        }
        let coeffs = DVector::from_iterator(rep.dim(), rep.nodes().iter().map(|&x| f(x)));
        Self::new(rep, coeffs)
    }

    pub fn rep(&self) -> &Representation {
        &self.rep
    }

    pub fn coeffs(&self) -> &DVector<Complex64> {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// Inner product, conjugate-linear in `self`, linear in `other`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.rep.ensure_same(&other.rep)?;
        let w = self.rep.weights();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.coeffs.len() {
            acc += self.coeffs[i].conj() * other.coeffs[i] * w[i];
        }
        Ok(acc)
    }

    pub fn norm_sq(&self) -> f64 {
        let w = self.rep.weights();
        self.coeffs
            .iter()
            .zip(w)
            .map(|(c, w)| w * c.norm_sqr())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Rescaled to unit norm under the representation's inner product.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NonFinite {
                context: "normalization of a zero or non-finite state".into(),
            });
        }
        let mut out = self.clone();
        out.coeffs /= Complex64::new(n, 0.0);
        Ok(out)
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs *= s;
        out
    }

    /// self + s * other
    pub fn axpy(&self, s: Complex64, other: &Self) -> Result<Self> {
        self.rep.ensure_same(&other.rep)?;
        let mut out = self.clone();
        out.coeffs += &other.coeffs * s;
        Ok(out)
    }

    /// Norm of the difference, in the representation's inner product.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.axpy(Complex64::new(-1.0, 0.0), other)?.norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fock(dim: usize) -> Representation {
        Representation::fock(dim, 1.0).unwrap()
    }

    #[test]
    fn basis_vectors_are_orthonormal() {
        let rep = fock(8);
        let e0 = StateVector::basis(rep.clone(), 0).unwrap();
        let e1 = StateVector::basis(rep, 1).unwrap();
        assert_eq!(e0.inner(&e0).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(e0.inner(&e1).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn inner_is_conjugate_linear_in_bra() {
        let rep = fock(4);
        let a = StateVector::basis(rep.clone(), 0)
            .unwrap()
            .scaled(Complex64::new(0.0, 2.0));
        let b = StateVector::basis(rep, 0).unwrap();
        // <2i e0, e0> = conj(2i) = -2i
        assert_eq!(a.inner(&b).unwrap(), Complex64::new(0.0, -2.0));
    }

    #[test]
    fn mismatched_reps_error() {
        let a = StateVector::basis(fock(4), 0).unwrap();
        let b = StateVector::basis(fock(5), 0).unwrap();
        assert!(a.inner(&b).is_err());
    }

    #[test]
    fn grid_norm_uses_quadrature() {
        let rep = crate::rep::Representation::half_line(
            2000,
            1e-12,
            20.0,
            crate::rep::GridSpacing::Logarithmic,
            1.0,
        )
        .unwrap();
        // psi = sqrt(2) e^{-x} has unit L2 norm on (0, inf)
        let psi = StateVector::from_fn(rep, |x| Complex64::new(2.0_f64.sqrt() * (-x).exp(), 0.0))
            .unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-10, "norm = {}", psi.norm());
    }
}
