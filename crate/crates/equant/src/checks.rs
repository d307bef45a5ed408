//! The verification suite: each check pins one headline property of the
//! crate at desk scale and reports a pass/fail against its tolerance.
//!
//! The checks are pure library calls so the CLI `verify-all` command and
//! the acceptance test target run exactly the same code.

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::affine::AffineFamily;
use crate::canonical::{CoherentFamily, FiducialSpec, PhasePoint};
use crate::dynamics::{
    check_bracket, enhanced_action, relabel_invariance, transformed_action_identity, ClassicalForm,
    ContactTransform, Trajectory,
};
use crate::error::Result;
use crate::geometry::{curvature, fs_metric, fs_metric_from_variances, DEFAULT_FD_STEP};
use crate::op::OperatorMatrix;
use crate::rep::Representation;
use crate::selfadjoint::{
    deficiency_indices, imaginary_eigenvector_demo, quantum_transform_diagnosis, Domain,
    OperatorKind, Verdict,
};
use crate::spectral::spectral_decompose;
use crate::state::StateVector;

/// Thresholds of the verification suite. Defaults are the shipped contract;
/// every field can be overridden from the command line.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Cartesian metric deviation and finite-difference/variance agreement.
    pub metric: f64,
    /// Poincaré form ratios of the affine metric.
    pub poincare: f64,
    /// Relative curvature error and constancy spread.
    pub curvature: f64,
    /// Absolute curvature bound for flat (canonical) families.
    pub curvature_flat: f64,
    /// Oscillator weak-symbol absolute error.
    pub symbol: f64,
    /// Relative error of the hbar/2 correction across hbar.
    pub symbol_fit: f64,
    /// Quantum/classical action agreement.
    pub action: f64,
    /// Lower bound on the stationarity scaling exponent.
    pub stationarity_exponent: f64,
    /// Poisson-bracket deviation for the transform catalog.
    pub bracket: f64,
    /// Relabeling distance.
    pub relabel: f64,
    /// Relative error of the half-line witness norm.
    pub witness_norm: f64,
    /// Oscillator eigenvalue error.
    pub spectrum: f64,
    /// Spectral reconstruction error.
    pub reconstruction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            metric: 1e-5,
            poincare: 1e-3,
            curvature: 0.01,
            curvature_flat: 1e-3,
            symbol: 1e-8,
            symbol_fit: 1e-6,
            action: 1e-5,
            stationarity_exponent: 1.95,
            bracket: 1e-10,
            relabel: 1e-10,
            witness_norm: 1e-8,
            spectrum: 1e-8,
            reconstruction: 1e-10,
        }
    }
}

/// Outcome of one check.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    /// Worst measured deviation (meaning depends on the check).
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    fn from_max(
        id: usize,
        name: &'static str,
        measured: f64,
        threshold: f64,
        detail: String,
    ) -> Self {
        Self {
            id,
            name,
            measured,
            threshold,
            passed: measured <= threshold,
            detail,
        }
    }

    pub fn status_line(&self) -> String {
        format!(
            "[{}] {:2}. {}: measured {:.3e} vs threshold {:.3e} ({})",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.threshold,
            self.detail
        )
    }
}

fn oscillator_op(fam: &CoherentFamily) -> OperatorMatrix {
    fam.q_op()
        .pow(2)
        .add(&fam.p_op().pow(2))
        .unwrap()
        .scaled_re(0.5)
        .with_label("H_osc")
}

/// 1. The canonical vacuum family carries the flat metric `diag(1, 1)` on
///    an 11x11 grid over `|p|, |q| <= 1` at `N = 128`, `hbar = 1`.
pub fn criterion_cartesian_metric(tol: &Tolerances) -> Result<CriterionResult> {
    let fam = CoherentFamily::vacuum(Representation::fock(128, 1.0)?)?;
    let mut worst = 0.0_f64;
    for i in 0..11 {
        for j in 0..11 {
            let p = -1.0 + 0.2 * i as f64;
            let q = -1.0 + 0.2 * j as f64;
            let m = fs_metric(&fam, p, q, DEFAULT_FD_STEP)?;
            worst = worst
                .max((m.g_pp - 1.0).abs())
                .max((m.g_qq - 1.0).abs())
                .max(m.g_pq.abs());
        }
    }
    Ok(CriterionResult::from_max(
        1,
        "cartesian metric (canonical vacuum)",
        worst,
        tol.metric,
        "max |g - diag(1,1)| on the 11x11 grid".into(),
    ))
}

/// 2. The finite-difference metric matches the fiducial-moment formula for
///    the vacuum, the first excited state, and a seeded random fiducial.
pub fn criterion_metric_consistency(tol: &Tolerances) -> Result<CriterionResult> {
    let rep = Representation::fock(128, 1.0)?;
    let mut fiducials: Vec<(&str, FiducialSpec)> = vec![
        ("vacuum", FiducialSpec::Vacuum),
        (
            "first excited",
            FiducialSpec::Custom(StateVector::basis(rep.clone(), 1)?),
        ),
    ];
    fiducials.push(("random", FiducialSpec::Custom(random_fiducial(&rep, 7)?)));

    let pts = [(0.0, 0.0), (0.4, -0.3), (-0.2, 0.5)];
    let mut worst = 0.0_f64;
    for (_, fid) in fiducials {
        let fam = CoherentFamily::new(rep.clone(), fid)?;
        for &(p, q) in &pts {
            let fd = fs_metric(&fam, p, q, DEFAULT_FD_STEP)?;
            let mv = fs_metric_from_variances(&fam, p, q)?;
            worst = worst
                .max((fd.g_pp - mv.g_pp).abs())
                .max((fd.g_pq - mv.g_pq).abs())
                .max((fd.g_qq - mv.g_qq).abs());
        }
    }
    Ok(CriterionResult::from_max(
        2,
        "metric consistency (finite differences vs moments)",
        worst,
        tol.metric,
        "max component gap over three fiducials".into(),
    ))
}

/// A normalized random fiducial with decaying occupation so that displaced
/// states stay inside the truncation.
fn random_fiducial(rep: &Representation, seed: u64) -> Result<StateVector> {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rep.dim();
    let coeffs = nalgebra::DVector::from_iterator(
        n,
        (0..n).map(|k| {
            let damp = (-(k as f64) / 8.0).exp();
            Complex64::new(
                damp * rng.random_range(-1.0..1.0),
                damp * rng.random_range(-1.0..1.0),
            )
        }),
    );
    StateVector::new(rep.clone(), coeffs)?.normalized()
}

/// 3. The affine metric matches the Poincaré half-plane form
///    `q²/(β hbar) dp² + (β hbar)/q² dq²` across q and β.
pub fn criterion_affine_poincare(tol: &Tolerances) -> Result<CriterionResult> {
    let hbar = 1.0;
    let mut worst = 0.0_f64;
    for &beta in &[1.0, 2.0] {
        let fam = AffineFamily::standard(beta, hbar)?;
        for &q in &[0.5, 1.0, 2.0] {
            let m = fs_metric(&fam, 0.0, q, DEFAULT_FD_STEP)?;
            let r_pp = m.g_pp * beta * hbar / (q * q);
            let r_qq = m.g_qq * q * q / (beta * hbar);
            worst = worst.max((r_pp - 1.0).abs()).max((r_qq - 1.0).abs());
        }
    }
    Ok(CriterionResult::from_max(
        3,
        "affine Poincare metric",
        worst,
        tol.poincare,
        "max |scaled component - 1| over q in {0.5,1,2}, beta in {1,2}".into(),
    ))
}

/// 4. The affine scalar curvature equals `-2/(β hbar)` within 1% and varies
///    by less than 1% across sample points.
pub fn criterion_curvature(tol: &Tolerances) -> Result<CriterionResult> {
    let hbar = 1.0;
    let mut worst = 0.0_f64;
    let mut detail = String::new();
    for &beta in &[1.0, 2.0] {
        let fam = AffineFamily::standard(beta, hbar)?;
        let want = -2.0 / (beta * hbar);
        let mut ks = Vec::new();
        for &p in &[-0.3, 0.0, 0.3] {
            for &q in &[0.8, 1.0, 1.25] {
                let k = curvature(&fam, p, q, 0.05)?.k;
                worst = worst.max((k - want).abs() / want.abs());
                ks.push(k);
            }
        }
        let mean = ks.iter().sum::<f64>() / ks.len() as f64;
        let spread = ks.iter().map(|k| (k - mean).abs()).fold(0.0, f64::max) / mean.abs();
        worst = worst.max(spread);
        detail = format!("{detail}beta {beta}: mean K {mean:.5}; ");
    }
    Ok(CriterionResult::from_max(
        4,
        "affine curvature -2/(beta hbar)",
        worst,
        tol.curvature,
        detail,
    ))
}

/// 5. The oscillator weak symbol is `(p² + q²)/2 + hbar/2`, and the
///    correction term follows `hbar/2` across `hbar` in {0.5, 1, 2}.
pub fn criterion_weak_correspondence(tol: &Tolerances) -> Result<CriterionResult> {
    let fam = CoherentFamily::vacuum(Representation::fock(128, 1.0)?)?;
    let h = oscillator_op(&fam);
    let mut worst_abs = 0.0_f64;
    for i in 0..5 {
        for j in 0..5 {
            let p = -2.0 + i as f64;
            let q = -2.0 + j as f64;
            let sym = fam.weak_symbol(&h, PhasePoint::new(p, q))?;
            worst_abs = worst_abs.max((sym - (0.5 * (p * p + q * q) + 0.5)).abs());
        }
    }

    let mut worst_fit = 0.0_f64;
    for &hbar in &[0.5, 1.0, 2.0] {
        let fam = CoherentFamily::vacuum(Representation::fock(128, hbar)?)?;
        let h = oscillator_op(&fam);
        for &(p, q) in &[(0.0, 0.0), (1.0, -1.0), (0.5, 1.5)] {
            let corr =
                fam.hbar_correction(&h, |p, q| 0.5 * (p * p + q * q), PhasePoint::new(p, q))?;
            worst_fit = worst_fit.max((corr - 0.5 * hbar).abs() / (0.5 * hbar));
        }
    }

    let passed = worst_abs <= tol.symbol && worst_fit <= tol.symbol_fit;
    Ok(CriterionResult {
        id: 5,
        name: "weak correspondence (oscillator)",
        measured: worst_abs.max(worst_fit),
        threshold: tol.symbol.max(tol.symbol_fit),
        passed,
        detail: format!(
            "symbol abs dev {worst_abs:.3e} (tol {:.1e}); correction rel dev {worst_fit:.3e} (tol {:.1e})",
            tol.symbol, tol.symbol_fit
        ),
    })
}

/// 6. Quantum and classical restricted actions agree on the oscillator
///    circle, and the action is stationary to second order around it.
pub fn criterion_enhanced_action(tol: &Tolerances) -> Result<CriterionResult> {
    let fam = CoherentFamily::vacuum(Representation::fock(128, 1.0)?)?;
    let h = oscillator_op(&fam);
    let two_pi = 2.0 * std::f64::consts::PI;
    let n = 6283;
    let base = Trajectory::sample(0.0, two_pi, n, |t| (t.cos(), t.sin()))?;
    let report = enhanced_action(&fam, ClassicalForm::PDotQ, &h, &base)?;
    let action_gap = report.difference.abs();

    // endpoint-fixed bump in q, amplitude eps
    let perturbed = |eps: f64| -> Result<Trajectory> {
        Trajectory::sample(0.0, two_pi, n, |t| {
            let bump = (std::f64::consts::PI * t / two_pi).sin().powi(2);
            (t.cos(), t.sin() + eps * bump)
        })
    };
    let a0 = report.quantum;
    let d2 = enhanced_action(&fam, ClassicalForm::PDotQ, &h, &perturbed(1e-2)?)?.quantum - a0;
    let d3 = enhanced_action(&fam, ClassicalForm::PDotQ, &h, &perturbed(1e-3)?)?.quantum - a0;
    let exponent = (d2.abs() / d3.abs()).log10();

    let passed = action_gap <= tol.action && exponent >= tol.stationarity_exponent;
    Ok(CriterionResult {
        id: 6,
        name: "enhanced action (oscillator circle)",
        measured: action_gap,
        threshold: tol.action,
        passed,
        detail: format!(
            "quantum-classical gap {action_gap:.3e}; stationarity exponent {exponent:.3} (needs >= {})",
            tol.stationarity_exponent
        ),
    })
}

/// 7. The transform catalog preserves the bracket, relabeling is exact,
///    and the transformed action identity holds including the generator term.
pub fn criterion_contact_transforms(tol: &Tolerances) -> Result<CriterionResult> {
    let pts: Vec<(f64, f64)> = vec![
        (0.0, 0.0),
        (1.0, -0.5),
        (-2.0, 0.3),
        (0.7, 1.9),
        (-1.0, 0.5),
    ];
    let mut worst_bracket = 0.0_f64;
    for t in ContactTransform::catalog() {
        worst_bracket = worst_bracket.max(check_bracket(&t, &pts)?.max_deviation);
    }

    let fam = CoherentFamily::vacuum(Representation::fock(128, 1.0)?)?;
    let mut worst_relabel = 0.0_f64;
    let mut rng = StdRng::seed_from_u64(11);
    for t in [
        ContactTransform::identity(),
        ContactTransform::rotation(),
        ContactTransform::sqrt_two(),
    ] {
        for _ in 0..3 {
            let pt = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            worst_relabel = worst_relabel.max(relabel_invariance(&fam, &t, pt)?);
        }
    }
    worst_relabel = worst_relabel.max(relabel_invariance(
        &fam,
        &ContactTransform::rotation(),
        (-1.0, 0.5),
    )?);

    let h = oscillator_op(&fam);
    let rot = ContactTransform::rotation();
    let base = Trajectory::sample(0.0, 2.0 * std::f64::consts::PI, 3141, |t| {
        (t.cos(), t.sin())
    })?;
    let star = base.mapped(|p, q| rot.forward(p, q))?;
    let transformed = transformed_action_identity(&fam, &h, &rot, &star)?;
    let action_gap = transformed.difference.abs();

    let passed =
        worst_bracket <= tol.bracket && worst_relabel <= tol.relabel && action_gap <= tol.action;
    Ok(CriterionResult {
        id: 7,
        name: "contact transforms (bracket, relabel, action)",
        measured: worst_bracket.max(worst_relabel).max(action_gap),
        threshold: tol.bracket.max(tol.relabel).max(tol.action),
        passed,
        detail: format!(
            "bracket {worst_bracket:.3e} (tol {:.0e}); relabel {worst_relabel:.3e} (tol {:.0e}); transformed action {action_gap:.3e} (tol {:.0e})",
            tol.bracket, tol.relabel, tol.action
        ),
    })
}

/// 8. Deficiency verdicts: `P` on the half line is (1,0) NotExtendable
///    with witness norm² `hbar/(2α)`; `P` on the line and `D` on the half
///    line are self-adjoint; `Q* = P` is NotExtendable; all invariant under
///    hbar and γ shifts.
pub fn criterion_selfadjointness(tol: &Tolerances) -> Result<CriterionResult> {
    let mut failures = Vec::new();

    let p_half = deficiency_indices(OperatorKind::MomentumP, Domain::half_line(), 1.0)?;
    if (p_half.n_plus, p_half.n_minus) != (1, 0) || p_half.verdict != Verdict::NotExtendable {
        failures.push(format!(
            "P half-line: ({}, {}) {:?}",
            p_half.n_plus, p_half.n_minus, p_half.verdict
        ));
    }

    let rep =
        Representation::half_line(4001, 1e-9, 14.0, crate::rep::GridSpacing::Logarithmic, 1.0)?;
    let demo = imaginary_eigenvector_demo(1.0, 1.0, &rep)?;
    let norm_dev = (demo.norm_sq - 0.5).abs() / 0.5;
    if norm_dev > tol.witness_norm {
        failures.push(format!("witness norm² {} vs 0.5", demo.norm_sq));
    }

    let p_full = deficiency_indices(OperatorKind::MomentumP, Domain::FullLine, 1.0)?;
    if p_full.verdict != Verdict::SelfAdjoint {
        failures.push(format!("P full-line: {:?}", p_full.verdict));
    }

    let d_half = deficiency_indices(OperatorKind::DilationD, Domain::half_line(), 1.0)?;
    if d_half.verdict != Verdict::SelfAdjoint {
        failures.push(format!("D half-line: {:?}", d_half.verdict));
    }

    for case in quantum_transform_diagnosis(1.0)? {
        let want = if case.label == "Pstar=-Q" {
            Verdict::SelfAdjoint
        } else {
            Verdict::NotExtendable
        };
        if case.report.verdict != want {
            failures.push(format!("{}: {:?}", case.label, case.report.verdict));
        }
    }

    for hbar in [0.5, 2.0] {
        let r = deficiency_indices(OperatorKind::MomentumP, Domain::half_line(), hbar)?;
        if (r.n_plus, r.n_minus) != (1, 0) {
            failures.push(format!("P half-line at hbar {hbar}"));
        }
    }
    for gamma in [1.0, 1e3] {
        let r = deficiency_indices(
            OperatorKind::MomentumP,
            Domain::HalfLine { origin: -gamma },
            1.0,
        )?;
        if (r.n_plus, r.n_minus) != (1, 0) {
            failures.push(format!("P on (-{gamma}, inf)"));
        }
    }

    let passed = failures.is_empty();
    Ok(CriterionResult {
        id: 8,
        name: "self-adjointness diagnostics",
        measured: if passed { norm_dev } else { f64::INFINITY },
        threshold: tol.witness_norm,
        passed,
        detail: if passed {
            format!("all verdicts as expected; witness norm rel dev {norm_dev:.3e}")
        } else {
            failures.join("; ")
        },
    })
}

/// 9. The truncated oscillator reproduces `(n + 1/2) hbar` for `n <= 4`
///    and the spectral decomposition reconstructs the operator.
pub fn criterion_spectral(tol: &Tolerances) -> Result<CriterionResult> {
    let fam = CoherentFamily::vacuum(Representation::fock(128, 1.0)?)?;
    let h = oscillator_op(&fam);
    let spec = spectral_decompose(&h)?;
    let mut worst_eig = 0.0_f64;
    for n in 0..5 {
        worst_eig = worst_eig.max((spec.eigenvalues()[n] - (n as f64 + 0.5)).abs());
    }
    let recon = spec.reconstruct().rel_frobenius_distance(&h)?;
    let passed = worst_eig <= tol.spectrum && recon <= tol.reconstruction;
    Ok(CriterionResult {
        id: 9,
        name: "spectral realization (oscillator)",
        measured: worst_eig.max(recon),
        threshold: tol.spectrum.max(tol.reconstruction),
        passed,
        detail: format!(
            "eigenvalue dev {worst_eig:.3e} (tol {:.0e}); reconstruction {recon:.3e} (tol {:.0e})",
            tol.spectrum, tol.reconstruction
        ),
    })
}

/// Run checks 1 through 9 in order.
pub fn run_all(tol: &Tolerances) -> Result<Vec<CriterionResult>> {
    Ok(vec![
        criterion_cartesian_metric(tol)?,
        criterion_metric_consistency(tol)?,
        criterion_affine_poincare(tol)?,
        criterion_curvature(tol)?,
        criterion_weak_correspondence(tol)?,
        criterion_enhanced_action(tol)?,
        criterion_contact_transforms(tol)?,
        criterion_selfadjointness(tol)?,
        criterion_spectral(tol)?,
    ])
}
