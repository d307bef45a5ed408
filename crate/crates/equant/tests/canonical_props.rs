//! Property tests for the canonical coherent-state family: normalization
//! over the trusted region, displacement covariance through two independent
//! routes, the hbar structure of the oscillator correction, and the
//! constant centroid offset of general fiducial vectors.

use std::sync::LazyLock;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use equant::canonical::{CoherentFamily, FiducialSpec, PhasePoint};
use equant::fock::weyl_monomial;
use equant::rep::Representation;
use equant::state::StateVector;

static FAMILY: LazyLock<CoherentFamily> =
    LazyLock::new(|| CoherentFamily::vacuum(Representation::fock(128, 1.0).unwrap()).unwrap());

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coherent_states_are_normalized_in_trusted_region(
        p in -2.0f64..2.0,
        q in -2.0f64..2.0,
    ) {
        let s = FAMILY.coherent_state(PhasePoint::new(p, q)).unwrap();
        prop_assert!((s.norm() - 1.0).abs() < 1e-9, "norm {}", s.norm());
    }

    #[test]
    fn displacement_covariance_for_low_degree_polynomials(
        m in 0usize..3,
        n in 0usize..3,
        p in -1.5f64..1.5,
        q in -1.5f64..1.5,
    ) {
        // both sides computed independently: group action on states vs the
        // operator shift H(P + p, Q + q) in the fiducial
        prop_assume!(m + n <= 4 && m + n > 0);
        let poly = weyl_monomial(m, n);
        let op = poly.build(FAMILY.p_op(), FAMILY.q_op()).unwrap();
        let via_states = FAMILY.weak_symbol(&op, PhasePoint::new(p, q)).unwrap();
        let via_shift = FAMILY.shifted_symbol(&poly, PhasePoint::new(p, q)).unwrap();
        prop_assert!(
            (via_states - via_shift).abs() < 1e-8,
            "p^{m} q^{n} at ({p}, {q}): {via_states} vs {via_shift}"
        );
    }
}

#[test]
fn oscillator_correction_tracks_hbar() {
    for hbar in [0.5, 1.0, 2.0] {
        let fam = CoherentFamily::vacuum(Representation::fock(128, hbar).unwrap()).unwrap();
        let h = fam
            .q_op()
            .pow(2)
            .add(&fam.p_op().pow(2))
            .unwrap()
            .scaled_re(0.5);
        for (p, q) in [(0.0, 0.0), (0.8, -0.3), (1.2, 1.0)] {
            let corr = fam
                .hbar_correction(&h, |p, q| 0.5 * (p * p + q * q), PhasePoint::new(p, q))
                .unwrap();
            assert!(
                (corr - 0.5 * hbar).abs() < 1e-7,
                "hbar {hbar} at ({p},{q}): correction {corr}"
            );
        }
    }
}

#[test]
fn general_fiducial_shifts_centroid_by_constant() {
    // <p,q|Q|p,q> = q + <η|Q|η> for any normalized fiducial
    let rep = Representation::fock(128, 1.0).unwrap();
    let mut rng = StdRng::seed_from_u64(23);
    for _ in 0..3 {
        let coeffs = nalgebra::DVector::from_iterator(
            rep.dim(),
            (0..rep.dim()).map(|k| {
                let damp = (-(k as f64) / 6.0).exp();
                Complex64::new(
                    damp * rng.random_range(-1.0..1.0),
                    damp * rng.random_range(-1.0..1.0),
                )
            }),
        );
        let eta = StateVector::new(rep.clone(), coeffs)
            .unwrap()
            .normalized()
            .unwrap();
        let offset_q = FAMILY.q_op().real_expectation(&eta, 1e-9).unwrap();
        let fam = CoherentFamily::new(rep.clone(), FiducialSpec::Custom(eta)).unwrap();
        for (p, q) in [(0.0, 0.4), (-0.6, 0.2)] {
            let s = fam.coherent_state(PhasePoint::new(p, q)).unwrap();
            let mean = fam.q_op().real_expectation(&s, 1e-8).unwrap();
            assert!(
                (mean - (q + offset_q)).abs() < 1e-8,
                "offset {offset_q}: <Q> = {mean} at q = {q}"
            );
        }
    }
}
