//! Canonical coherent states and the weak-correspondence symbol.
//!
//! States are built by the group action
//! `|p,q⟩ = exp(-i q P / hbar) exp(i p Q / hbar) |fiducial⟩`,
//! with the rightmost factor applied first. The ordering is deliberate and
//! every phase-sensitive check in this crate follows it.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{build_fock_ops, OperatorPoly};
use crate::op::OperatorMatrix;
use crate::rep::Representation;
use crate::spectral::{spectral_decompose, SpectralData};
use crate::state::StateVector;

/// Imaginary residue allowed when a symbol is reported as a real number.
pub const SYMBOL_IMAG_TOL: f64 = 1e-10;
/// Representation error above which coherent-state construction refuses.
pub const TRUNCATION_TOL: f64 = 1e-6;

/// A classical phase-space point on the full line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub p: f64,
    pub q: f64,
}

impl PhasePoint {
    pub fn new(p: f64, q: f64) -> Self {
        Self { p, q }
    }
}

/// Choice of the fiducial vector the group elements act on.
#[derive(Debug, Clone)]
pub enum FiducialSpec {
    /// The Fock vacuum, annihilated by `(Q + iP)/sqrt(2 hbar)`.
    Vacuum,
    /// Any normalized state in the working representation.
    Custom(StateVector),
}

/// The Fock vacuum `e_0`, which satisfies `(Q + iP)|0⟩ = 0` exactly even in
/// the truncated basis.
pub fn make_vacuum(rep: &Representation) -> Result<StateVector> {
    if !rep.is_fock() {
        return Err(Error::InvalidRepresentation(
            "the vacuum fiducial lives in a FockLine representation".into(),
        ));
    }
    StateVector::basis(rep.clone(), 0)
}

/// A family of canonical coherent states over phase space.
///
/// Holds the truncated `P`, `Q` and their spectral decompositions, so that
/// repeated displacements cost two dense matrix-vector products each.
/// Immutable after construction; evaluations are pure and safe to run
/// concurrently over phase-space grids.
pub struct CoherentFamily {
    rep: Representation,
    q_op: OperatorMatrix,
    p_op: OperatorMatrix,
    q_spec: SpectralData,
    p_spec: SpectralData,
    fiducial: StateVector,
    fiducial_is_vacuum: bool,
    trusted_radius: f64,
    /// Doubled-dimension copy for truncation cross-checks, built on demand.
    doubled: OnceLock<Option<Box<CoherentFamily>>>,
}

impl CoherentFamily {
    pub fn new(rep: Representation, fiducial: FiducialSpec) -> Result<Self> {
        let (q_op, p_op) = build_fock_ops(&rep)?;
        let q_spec = spectral_decompose(&q_op)?;
        let p_spec = spectral_decompose(&p_op)?;
        let (fid, is_vac) = match fiducial {
            FiducialSpec::Vacuum => (make_vacuum(&rep)?, true),
            FiducialSpec::Custom(v) => {
                rep.ensure_same(v.rep())?;
                if (v.norm() - 1.0).abs() > 1e-10 {
                    return Err(Error::InvalidRepresentation(format!(
                        "custom fiducial must be normalized, got norm {}",
                        v.norm()
                    )));
                }
                (v, false)
            }
        };
        // Fock occupation of a displaced state is Poisson around
        // (p^2 + q^2) / (2 hbar); a quarter of sqrt(hbar N) keeps the mean
        // well below the truncation edge.
        let trusted_radius = 0.25 * (rep.hbar() * rep.dim() as f64).sqrt();
        Ok(Self {
            rep,
            q_op,
            p_op,
            q_spec,
            p_spec,
            fiducial: fid,
            fiducial_is_vacuum: is_vac,
            trusted_radius,
            doubled: OnceLock::new(),
        })
    }

    pub fn vacuum(rep: Representation) -> Result<Self> {
        Self::new(rep, FiducialSpec::Vacuum)
    }

    pub fn rep(&self) -> &Representation {
        &self.rep
    }

    pub fn hbar(&self) -> f64 {
        self.rep.hbar()
    }

    pub fn q_op(&self) -> &OperatorMatrix {
        &self.q_op
    }

    pub fn p_op(&self) -> &OperatorMatrix {
        &self.p_op
    }

    pub fn fiducial(&self) -> &StateVector {
        &self.fiducial
    }

    pub fn trusted_radius(&self) -> f64 {
        self.trusted_radius
    }

    pub fn with_trusted_radius(mut self, r: f64) -> Self {
        self.trusted_radius = r;
        self
    }

    pub fn in_trusted_region(&self, pt: PhasePoint) -> bool {
        pt.p.abs() <= self.trusted_radius && pt.q.abs() <= self.trusted_radius
    }

    /// `|p,q⟩ = exp(-iqP/hbar) exp(ipQ/hbar) |fiducial⟩`.
    ///
    /// Outside the trusted phase-space region the state is cross-checked
    /// against a doubled-dimension construction and a truncation error is
    /// returned when the two disagree by more than `TRUNCATION_TOL`.
    pub fn coherent_state(&self, pt: PhasePoint) -> Result<StateVector> {
        if !pt.p.is_finite() || !pt.q.is_finite() {
            return Err(Error::NonFinite {
                context: "phase-space point".into(),
            });
        }
        let state = self.displace(&self.fiducial, pt)?;
        if !self.in_trusted_region(pt) {
            let estimate = self.truncation_error(pt)?;
            if estimate > TRUNCATION_TOL {
                return Err(Error::Truncation {
                    p: pt.p,
                    q: pt.q,
                    estimate,
                    tol: TRUNCATION_TOL,
                });
            }
        }
        Ok(state)
    }

    fn displace(&self, fiducial: &StateVector, pt: PhasePoint) -> Result<StateVector> {
        let hbar = self.rep.hbar();
        let after_q = self
            .q_spec
            .apply_exp(Complex64::new(0.0, pt.p / hbar), fiducial)?;
        self.p_spec
            .apply_exp(Complex64::new(0.0, -pt.q / hbar), &after_q)
    }

    /// Distance between this family's state and the same construction at
    /// twice the dimension, used as the truncation-error estimate.
    pub fn truncation_error(&self, pt: PhasePoint) -> Result<f64> {
        let doubled = self
            .doubled
            .get_or_init(|| self.build_doubled().map(Box::new).ok());
        let Some(doubled) = doubled.as_ref() else {
            return Err(Error::NonFinite {
                context: "doubled-dimension cross-check construction".into(),
            });
        };
        let small = self.displace(&self.fiducial, pt)?;
        let big = doubled.displace(&doubled.fiducial, pt)?;
        // embed the small state and compare
        let mut diff = 0.0_f64;
        for i in 0..doubled.rep.dim() {
            let a = if i < small.dim() {
                small.coeffs()[i]
            } else {
                Complex64::new(0.0, 0.0)
            };
            diff += (a - big.coeffs()[i]).norm_sqr();
        }
        Ok(diff.sqrt())
    }

    fn build_doubled(&self) -> Result<CoherentFamily> {
        let rep2 = Representation::fock(self.rep.dim() * 2, self.rep.hbar())?;
        let fid2 = if self.fiducial_is_vacuum {
            FiducialSpec::Vacuum
        } else {
            let mut coeffs = nalgebra::DVector::zeros(rep2.dim());
            for i in 0..self.fiducial.dim() {
                coeffs[i] = self.fiducial.coeffs()[i];
            }
            FiducialSpec::Custom(StateVector::new(rep2.clone(), coeffs)?)
        };
        CoherentFamily::new(rep2, fid2)
    }

    /// The weak-correspondence symbol `H(p,q) = ⟨p,q| H_op |p,q⟩`.
    ///
    /// The imaginary residue must stay below `SYMBOL_IMAG_TOL`; it is
    /// checked and discarded.
    pub fn weak_symbol(&self, h_op: &OperatorMatrix, pt: PhasePoint) -> Result<f64> {
        h_op.ensure_hermitian(1e-10)?;
        let state = self.coherent_state(pt)?;
        h_op.real_expectation(&state, SYMBOL_IMAG_TOL)
    }

    /// `weak_symbol - classical_H`, the hbar-dependent remainder of the
    /// symbol over the classical function.
    pub fn hbar_correction(
        &self,
        h_op: &OperatorMatrix,
        classical_h: impl Fn(f64, f64) -> f64,
        pt: PhasePoint,
    ) -> Result<f64> {
        let sym = self.weak_symbol(h_op, pt)?;
        let cls = classical_h(pt.p, pt.q);
        if !cls.is_finite() {
            return Err(Error::NonFinite {
                context: "classical Hamiltonian value".into(),
            });
        }
        Ok(sym - cls)
    }

    /// Expectation of a polynomial in the shifted generators,
    /// `⟨fid| poly(P + p, Q + q) |fid⟩`: the operator-shift route of the
    /// weak-correspondence identity, independent of the group action.
    pub fn shifted_symbol(&self, poly: &OperatorPoly, pt: PhasePoint) -> Result<f64> {
        let shifted = poly.build_shifted(&self.p_op, &self.q_op, pt.p, pt.q)?;
        shifted.real_expectation(&self.fiducial, 1e-9)
    }

    /// Residual of the vacuum condition `(Q + iP)|fid⟩ = 0`; zero for the
    /// Fock vacuum even after truncation.
    pub fn vacuum_defect(&self) -> Result<f64> {
        let q_fid = self.q_op.apply(&self.fiducial)?;
        let ip_fid = self
            .p_op
            .apply(&self.fiducial)?
            .scaled(Complex64::new(0.0, 1.0));
        Ok(q_fid.axpy(Complex64::new(1.0, 0.0), &ip_fid)?.norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{weyl_monomial, Letter};

    fn family(n: usize, hbar: f64) -> CoherentFamily {
        CoherentFamily::vacuum(Representation::fock(n, hbar).unwrap()).unwrap()
    }

    #[test]
    fn vacuum_is_first_basis_vector() {
        let rep = Representation::fock(32, 1.0).unwrap();
        let v = make_vacuum(&rep).unwrap();
        assert_eq!(v.coeffs()[0], Complex64::new(1.0, 0.0));
        for i in 1..32 {
            assert_eq!(v.coeffs()[i], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn vacuum_annihilation_defect_is_zero() {
        for n in [8usize, 32, 100] {
            let fam = family(n, 1.0);
            assert!(fam.vacuum_defect().unwrap() < 1e-12, "N = {n}");
        }
    }

    #[test]
    fn vacuum_centered_at_origin() {
        let fam = family(32, 1.0);
        let q = fam.q_op().real_expectation(fam.fiducial(), 1e-12).unwrap();
        let p = fam.p_op().real_expectation(fam.fiducial(), 1e-12).unwrap();
        assert!(q.abs() < 1e-14 && p.abs() < 1e-14);
    }

    #[test]
    fn zero_displacement_returns_fiducial() {
        let fam = family(48, 1.0);
        let s = fam.coherent_state(PhasePoint::new(0.0, 0.0)).unwrap();
        assert!(s.distance(fam.fiducial()).unwrap() < 1e-12);
    }

    #[test]
    fn coherent_states_are_normalized() {
        let fam = family(128, 1.0);
        for &(p, q) in &[(0.3, -0.4), (1.5, 1.2), (-2.0, 0.7)] {
            let s = fam.coherent_state(PhasePoint::new(p, q)).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-9, "({p},{q}) norm {}", s.norm());
        }
    }

    #[test]
    fn overlap_matches_gaussian_formula() {
        // |<p,q|p',q'>| = exp(-[(q-q')^2 + (p-p')^2] / (4 hbar)) for the
        // vacuum fiducial; the modulus is ordering-independent.
        let hbar = 1.0;
        let fam = family(128, hbar);
        let pts = [
            ((0.0, 0.0), (1.0, 0.5)),
            ((0.3, -0.4), (-0.2, 0.5)),
            ((2.0, 1.0), (1.0, 2.0)),
        ];
        for ((p1, q1), (p2, q2)) in pts {
            let a = fam.coherent_state(PhasePoint::new(p1, q1)).unwrap();
            let b = fam.coherent_state(PhasePoint::new(p2, q2)).unwrap();
            let got = a.inner(&b).unwrap().norm();
            let want = (-((q1 - q2).powi(2) + (p1 - p2).powi(2)) / (4.0 * hbar)).exp();
            assert!(
                (got - want).abs() < 1e-7,
                "({p1},{q1})x({p2},{q2}): {got} vs {want}"
            );
        }
    }

    #[test]
    fn displacement_moves_centroids() {
        let fam = family(128, 1.0);
        for &(p, q) in &[(0.7, -1.1), (1.9, 0.3)] {
            let s = fam.coherent_state(PhasePoint::new(p, q)).unwrap();
            let q_mean = fam.q_op().real_expectation(&s, 1e-10).unwrap();
            let p_mean = fam.p_op().real_expectation(&s, 1e-10).unwrap();
            assert!((q_mean - q).abs() < 1e-8, "q: {q_mean} vs {q}");
            assert!((p_mean - p).abs() < 1e-8, "p: {p_mean} vs {p}");
        }
    }

    #[test]
    fn oscillator_symbol_and_correction() {
        let hbar = 1.0;
        let fam = family(128, hbar);
        let h = fam
            .q_op()
            .pow(2)
            .add(&fam.p_op().pow(2))
            .unwrap()
            .scaled_re(0.5);
        for &(p, q) in &[(0.0, 0.0), (1.0, -1.0), (2.0, 2.0), (-1.5, 0.5)] {
            let sym = fam.weak_symbol(&h, PhasePoint::new(p, q)).unwrap();
            let want = 0.5 * (p * p + q * q) + 0.5 * hbar;
            assert!((sym - want).abs() < 1e-8, "({p},{q}): {sym} vs {want}");
            let corr = fam
                .hbar_correction(&h, |p, q| 0.5 * (p * p + q * q), PhasePoint::new(p, q))
                .unwrap();
            assert!((corr - 0.5 * hbar).abs() < 1e-8);
        }
    }

    #[test]
    fn linear_symbols_have_no_correction() {
        let fam = family(128, 1.0);
        let pt = PhasePoint::new(0.8, -0.6);
        let sym_q = fam.weak_symbol(fam.q_op(), pt).unwrap();
        assert!((sym_q - pt.q).abs() < 1e-10);
        let corr_p = fam.hbar_correction(fam.p_op(), |p, _| p, pt).unwrap();
        assert!(corr_p.abs() < 1e-10);
    }

    #[test]
    fn q_squared_symbol() {
        let hbar = 2.0;
        let fam = family(128, hbar);
        let h = fam.q_op().pow(2);
        let pt = PhasePoint::new(0.4, 1.3);
        let sym = fam.weak_symbol(&h, pt).unwrap();
        assert!((sym - (pt.q * pt.q + 0.5 * hbar)).abs() < 1e-8);
    }

    #[test]
    fn quartic_correction_matches_gaussian_moments() {
        // <0|(Q+q)^4|0> = q^4 + 3 hbar q^2 + 3 hbar^2 / 4
        let hbar = 1.0;
        let fam = family(128, hbar);
        let h = fam.q_op().pow(4);
        for &q in &[0.0, 0.7, 2.0] {
            let corr = fam
                .hbar_correction(&h, |_, q| q.powi(4), PhasePoint::new(0.0, q))
                .unwrap();
            let want = 3.0 * hbar * q * q + 0.75 * hbar * hbar;
            assert!((corr - want).abs() < 1e-7, "q = {q}: {corr} vs {want}");
        }
    }

    #[test]
    fn custom_fiducial_must_be_normalized() {
        let rep = Representation::fock(16, 1.0).unwrap();
        let unnormalized = StateVector::basis(rep.clone(), 0)
            .unwrap()
            .scaled(Complex64::new(2.0, 0.0));
        assert!(CoherentFamily::new(rep, FiducialSpec::Custom(unnormalized)).is_err());
    }

    #[test]
    fn far_point_raises_truncation_error() {
        let fam = family(24, 1.0);
        // radius is 0.25 sqrt(24) ~ 1.22; far beyond it the doubled
        // cross-check must flag the state.
        let err = fam.coherent_state(PhasePoint::new(4.0, 4.0));
        assert!(matches!(err, Err(Error::Truncation { .. })), "{err:?}");
    }

    #[test]
    fn shifted_symbol_agrees_with_group_action() {
        // displacement covariance through two independent routes
        let fam = family(128, 1.0);
        let pt = PhasePoint::new(0.9, -1.2);
        let poly = weyl_monomial(2, 2);
        let via_shift = fam.shifted_symbol(&poly, pt).unwrap();
        let op = poly.build(fam.p_op(), fam.q_op()).unwrap();
        let via_states = fam.weak_symbol(&op, pt).unwrap();
        assert!(
            (via_shift - via_states).abs() < 1e-8,
            "{via_shift} vs {via_states}"
        );
    }

    #[test]
    fn custom_fiducial_offsets_centroid() {
        // first excited state as fiducial: <1|Q|1> = 0 so centroid stays,
        // but a superposition shifts it.
        let rep = Representation::fock(128, 1.0).unwrap();
        let e0 = StateVector::basis(rep.clone(), 0).unwrap();
        let e1 = StateVector::basis(rep.clone(), 1).unwrap();
        let eta = e0
            .axpy(Complex64::new(1.0, 0.0), &e1)
            .unwrap()
            .normalized()
            .unwrap();
        let fam = CoherentFamily::new(rep, FiducialSpec::Custom(eta.clone())).unwrap();
        let eta_q = fam.q_op().real_expectation(&eta, 1e-10).unwrap();
        assert!(eta_q.abs() > 0.5); // the offset is real
        let pt = PhasePoint::new(0.4, 0.9);
        let s = fam.coherent_state(pt).unwrap();
        let q_mean = fam.q_op().real_expectation(&s, 1e-9).unwrap();
        assert!(
            (q_mean - (pt.q + eta_q)).abs() < 1e-8,
            "{q_mean} vs {} + {eta_q}",
            pt.q
        );
    }

    #[test]
    fn explicit_ordering_is_callers_choice() {
        // PQ vs QP differ by [P,Q]; the poly builder must not symmetrize.
        let fam = family(64, 1.0);
        let pq = OperatorPoly::new(vec![(1.0, vec![Letter::P, Letter::Q])])
            .build(fam.p_op(), fam.q_op())
            .unwrap();
        let qp = OperatorPoly::new(vec![(1.0, vec![Letter::Q, Letter::P])])
            .build(fam.p_op(), fam.q_op())
            .unwrap();
        let diff = pq.add(&qp.scaled_re(-1.0)).unwrap();
        // [P,Q] = -i hbar away from the truncation corner
        assert!((diff.entries()[(0, 0)] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
    }
}
