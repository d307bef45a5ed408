//! Property tests for the Hilbert-space layer: unitarity of the
//! exponential map, adjoint duality, and spectral completeness on
//! randomized operators and states.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

use equant::op::OperatorMatrix;
use equant::rep::{GridSpacing, Representation};
use equant::spectral::{expm_apply, spectral_decompose};
use equant::state::StateVector;

fn hermitian_strategy(dim: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim).prop_map(move |vals| {
        let m = DMatrix::from_iterator(
            dim,
            dim,
            vals.into_iter().map(|(re, im)| Complex64::new(re, im)),
        );
        (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
    })
}

fn state_strategy(dim: usize) -> impl Strategy<Value = DVector<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
        .prop_map(|vals| {
            DVector::from_iterator(
                vals.len(),
                vals.into_iter().map(|(re, im)| Complex64::new(re, im)),
            )
        })
        .prop_filter("nonzero", |v| v.norm() > 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exp_of_i_t_hermitian_preserves_norms(
        dim in 2usize..13,
        t in -3.0f64..3.0,
        seed_m in hermitian_strategy(12),
        seed_v in state_strategy(12),
    ) {
        // strategies are sized for the max dim; slice down to `dim`
        let rep = Representation::fock(dim, 1.0).unwrap();
        let m = seed_m.view((0, 0), (dim, dim)).into_owned();
        let a = OperatorMatrix::new(rep.clone(), "A", m).unwrap();
        let v = StateVector::new(rep, seed_v.rows(0, dim).into_owned())
            .unwrap()
            .normalized()
            .unwrap();
        let out = expm_apply(&a, Complex64::new(0.0, t), &v).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-10, "norm {}", out.norm());
    }

    #[test]
    fn adjoint_duality_on_random_operators(
        dim in 2usize..12,
        raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 144),
        sv in state_strategy(12),
        sw in state_strategy(12),
    ) {
        let rep = Representation::fock(dim, 1.0).unwrap();
        let m = DMatrix::from_iterator(
            dim,
            dim,
            raw.into_iter().take(dim * dim).map(|(re, im)| Complex64::new(re, im)),
        );
        let a = OperatorMatrix::new(rep.clone(), "A", m).unwrap();
        let psi = StateVector::new(rep.clone(), sv.rows(0, dim).into_owned()).unwrap();
        let phi = StateVector::new(rep, sw.rows(0, dim).into_owned()).unwrap();
        // <psi|A†|phi> = conj(<phi|A|psi>)
        let lhs = psi.inner(&a.adjoint().apply(&phi).unwrap()).unwrap();
        let rhs = phi.inner(&a.apply(&psi).unwrap()).unwrap().conj();
        let scale = 1.0 + lhs.norm().max(rhs.norm());
        prop_assert!((lhs - rhs).norm() < 1e-12 * scale, "{lhs} vs {rhs}");
    }

    #[test]
    fn spectral_completeness_and_reconstruction(
        dim in 2usize..16,
        seed_m in hermitian_strategy(16),
    ) {
        let rep = Representation::fock(dim, 1.0).unwrap();
        let m = seed_m.view((0, 0), (dim, dim)).into_owned();
        let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let a = OperatorMatrix::new(rep, "A", m).unwrap();
        let spec = spectral_decompose(&a).unwrap();
        prop_assert!(spec.completeness_defect() < 1e-10);
        prop_assert!(spec.reconstruct().rel_frobenius_distance(&a).unwrap() < 1e-10);
        // eigenvalues ascend
        prop_assert!(spec.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn grid_multiplication_operator_decomposes() {
    // dense-grid eigenbasis stands in for the continuum part of a spectral
    // realization: a multiplication operator resolves into grid deltas
    let rep = Representation::half_line(64, 0.5, 4.0, GridSpacing::Logarithmic, 1.0).unwrap();
    let q = OperatorMatrix::diag_from_fn(rep, "Q", |x| x).unwrap();
    let spec = spectral_decompose(&q).unwrap();
    assert!(spec.completeness_defect() < 1e-10);
    assert!(spec.reconstruct().rel_frobenius_distance(&q).unwrap() < 1e-10);
    // eigenvalues are the grid nodes, ascending
    let nodes = {
        let mut n = q.rep().nodes().to_vec();
        n.sort_by(|a, b| a.partial_cmp(b).unwrap());
        n
    };
    for (have, want) in spec.eigenvalues().iter().zip(&nodes) {
        assert!((have - want).abs() < 1e-12);
    }
}

#[test]
fn unitarity_holds_at_scale() {
    // the documented accuracy of the eigendecomposition-backed exponential
    // at the dimensions the phase-space checks run at
    let rep = Representation::fock(128, 1.0).unwrap();
    let (q, _) = equant::fock::build_fock_ops(&rep).unwrap();
    let spec = spectral_decompose(&q).unwrap();
    let v = StateVector::basis(rep.clone(), 3)
        .unwrap()
        .axpy(
            Complex64::new(0.2, -0.4),
            &StateVector::basis(rep, 40).unwrap(),
        )
        .unwrap()
        .normalized()
        .unwrap();
    for t in [-2.0, 0.3, 1.7] {
        let out = spec.apply_exp(Complex64::new(0.0, t), &v).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-10);
    }
}
