//! Numerically distinguishing Hermitian from self-adjoint operators.
//!
//! The deficiency indices `(n₊, n₋)` count the square-integrable solutions
//! of `A† ψ = ± i ψ`. The operators treated here are first order, so the
//! solutions come in closed form; only the square-integrability test is
//! numerical (adaptive windowed quadrature with explicit convergence and
//! divergence thresholds). Grid eigenproblems are deliberately avoided:
//! they are misleading exactly in the non-self-adjoint boundary situations
//! this module is for.
//!
//! Closed forms, with `y` the distance to the domain's inner edge:
//! `P = -i hbar d/dx` has `ψ± = e^{∓ y/hbar}`; the dilation generator
//! `D = -i hbar (x d/dx + 1/2)` has `ψ± = x^{-1/2 ∓ 1/hbar}`;
//! `√2 P + Q` has `|ψ±| = e^{∓ y/(√2 hbar)}` (times a quadratic phase);
//! `√2 Q + P` has `|ψ±| = e^{∓ y/hbar}`. Real multiplication operators
//! such as `-Q` admit no nonzero solutions at all.

use num_complex::Complex64;

use crate::affine::derivative_matrix;
use crate::error::{Error, Result};
use crate::rep::{GridSpacing, RepKind, Representation};
use crate::state::StateVector;

/// Relative change under window growth below which a norm has converged.
pub const CONVERGENCE_TOL: f64 = 1e-8;
/// Growth factor per window doubling above which divergence is declared.
pub const DIVERGENCE_FACTOR: f64 = 10.0;
/// Window doublings before slow growth is classified as divergent.
pub const MAX_DOUBLINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// `P = -i hbar d/dx`
    MomentumP,
    /// `D = -i hbar (x d/dx + 1/2)`
    DilationD,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    FullLine,
    /// `(origin, ∞)`; `origin = -γ` probes the shifted half line.
    HalfLine {
        origin: f64,
    },
}

impl Domain {
    pub fn half_line() -> Self {
        Domain::HalfLine { origin: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    SelfAdjoint,
    HasSelfAdjointExtensions,
    NotExtendable,
}

impl Verdict {
    pub fn from_indices(n_plus: usize, n_minus: usize) -> Self {
        if n_plus == 0 && n_minus == 0 {
            Verdict::SelfAdjoint
        } else if n_plus == n_minus {
            Verdict::HasSelfAdjointExtensions
        } else {
            Verdict::NotExtendable
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::SelfAdjoint => "SelfAdjoint",
            Verdict::HasSelfAdjointExtensions => "HasSelfAdjointExtensions",
            Verdict::NotExtendable => "NotExtendable",
        }
    }
}

#[derive(Debug, Clone)]
pub struct DeficiencyReport {
    pub n_plus: usize,
    pub n_minus: usize,
    pub verdict: Verdict,
    /// Normalized square-integrable solutions, sampled on a reporting grid
    /// in the distance-to-edge coordinate.
    pub witnesses: Vec<StateVector>,
    /// Norms of the witnesses as found by the adaptive quadrature.
    pub witness_norms_sq: Vec<f64>,
}

/// The closed-form solution of `A†ψ = ±iψ` for one sign, evaluated through
/// the log of `|ψ|²` in the distance-to-edge coordinate so that shifted
/// domains cannot overflow.
struct AdjointSolution {
    /// `ln |ψ(y)|²`; `None` when the eigenproblem has no nonzero solution.
    log_mag_sq: Option<Box<dyn Fn(f64) -> f64>>,
}

fn momentum_solution(sign: f64, hbar: f64) -> AdjointSolution {
    AdjointSolution {
        log_mag_sq: Some(Box::new(move |y| -2.0 * sign * y / hbar)),
    }
}

fn dilation_solution(sign: f64, hbar: f64) -> AdjointSolution {
    // x^{-1/2 - sign/hbar}
    let power = -1.0 - 2.0 * sign / hbar;
    AdjointSolution {
        log_mag_sq: Some(Box::new(move |y| power * y.ln())),
    }
}

fn sqrt2_p_plus_q_solution(sign: f64, hbar: f64) -> AdjointSolution {
    // -i hbar sqrt2 ψ' + x ψ = ± i ψ  =>  |ψ| = e^{∓ x/(√2 hbar)}
    let r = 2.0_f64.sqrt();
    AdjointSolution {
        log_mag_sq: Some(Box::new(move |y| -2.0 * sign * y / (r * hbar))),
    }
}

fn sqrt2_q_plus_p_solution(sign: f64, hbar: f64) -> AdjointSolution {
    // sqrt2 x ψ - i hbar ψ' = ± i ψ  =>  |ψ| = e^{∓ x/hbar}
    AdjointSolution {
        log_mag_sq: Some(Box::new(move |y| -2.0 * sign * y / hbar)),
    }
}

fn multiplication_solution() -> AdjointSolution {
    // (f(x) ∓ i) ψ(x) = 0 with real f forces ψ = 0 almost everywhere.
    AdjointSolution { log_mag_sq: None }
}

enum Integrability {
    Convergent(f64),
    Divergent,
}

/// Windowed quadrature of `exp(log_mag_sq)` over the domain: the outer edge
/// doubles and the inner edge halves until the value settles (relative
/// change < `CONVERGENCE_TOL`) or divergence is declared (growth beyond
/// `DIVERGENCE_FACTOR` per doubling, overflow, or `MAX_DOUBLINGS` without
/// settling).
fn integrability(solution: &AdjointSolution, domain: Domain) -> Integrability {
    let Some(log_mag_sq) = solution.log_mag_sq.as_ref() else {
        return Integrability::Divergent; // no solution to normalize
    };
    let mut previous: Option<f64> = None;
    for k in 0..MAX_DOUBLINGS {
        let grow = 2.0_f64.powi(k as i32);
        let value = match domain {
            Domain::HalfLine { .. } => {
                // integrate in u = ln y; handles both the power-law edge
                // and the long exponential tail
                let a: f64 = 1e-3 / grow;
                let b: f64 = 8.0 * grow;
                simpson(a.ln(), b.ln(), 4000, |u| {
                    let y = u.exp();
                    guarded_exp(log_mag_sq(y) + u)
                })
            }
            Domain::FullLine => {
                let b = 8.0 * grow;
                simpson(-b, b, 4000, |y| guarded_exp(log_mag_sq(y)))
            }
        };
        if !value.is_finite() || value > 1e200 {
            return Integrability::Divergent;
        }
        if let Some(prev) = previous {
            if value > DIVERGENCE_FACTOR * prev {
                return Integrability::Divergent;
            }
            if (value - prev).abs() <= CONVERGENCE_TOL * value {
                return Integrability::Convergent(value);
            }
        }
        previous = Some(value);
    }
    Integrability::Divergent
}

fn guarded_exp(e: f64) -> f64 {
    if e > 600.0 {
        f64::INFINITY
    } else {
        e.exp()
    }
}

fn simpson(a: f64, b: f64, n_even: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = n_even + n_even % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

fn check_pair(kind: OperatorKind, domain: Domain, hbar: f64) -> Result<()> {
    if !(hbar > 0.0) || !hbar.is_finite() {
        return Err(Error::InvalidRepresentation(format!(
            "hbar must be positive, got {hbar}"
        )));
    }
    match (kind, domain) {
        (OperatorKind::DilationD, Domain::FullLine) => Err(Error::InvalidRepresentation(
            "the dilation generator is resolved on the half line; the full-line case is out of scope"
                .into(),
        )),
        (OperatorKind::DilationD, Domain::HalfLine { origin }) if origin != 0.0 => {
            Err(Error::InvalidRepresentation(
                "the dilation generator needs the half line anchored at zero".into(),
            ))
        }
        _ => Ok(()),
    }
}

/// Deficiency indices of `P` or `D` on the line or half line: closed-form
/// adjoint eigensolutions, numerically tested for square integrability.
pub fn deficiency_indices(
    kind: OperatorKind,
    domain: Domain,
    hbar: f64,
) -> Result<DeficiencyReport> {
    check_pair(kind, domain, hbar)?;
    let solve = |sign: f64| match kind {
        OperatorKind::MomentumP => momentum_solution(sign, hbar),
        OperatorKind::DilationD => dilation_solution(sign, hbar),
    };
    build_report([solve(1.0), solve(-1.0)], domain, hbar)
}

fn build_report(
    solutions: [AdjointSolution; 2],
    domain: Domain,
    hbar: f64,
) -> Result<DeficiencyReport> {
    let mut counts = [0usize; 2];
    let mut witnesses = Vec::new();
    let mut witness_norms_sq = Vec::new();
    for (slot, solution) in solutions.iter().enumerate() {
        if let Integrability::Convergent(norm_sq) = integrability(solution, domain) {
            counts[slot] = 1;
            witness_norms_sq.push(norm_sq);
            if let Some(w) = sample_witness(solution, domain, hbar, norm_sq)? {
                witnesses.push(w);
            }
        }
    }
    Ok(DeficiencyReport {
        n_plus: counts[0],
        n_minus: counts[1],
        verdict: Verdict::from_indices(counts[0], counts[1]),
        witnesses,
        witness_norms_sq,
    })
}

/// Sample a normalizable solution on a reporting grid (in the
/// distance-to-edge coordinate for shifted half lines).
fn sample_witness(
    solution: &AdjointSolution,
    domain: Domain,
    hbar: f64,
    norm_sq: f64,
) -> Result<Option<StateVector>> {
    let Domain::HalfLine { .. } = domain else {
        return Ok(None); // full-line cases here never have witnesses
    };
    let Some(log_mag_sq) = solution.log_mag_sq.as_ref() else {
        return Ok(None);
    };
    let rep = Representation::half_line(
        512,
        1e-6 * hbar,
        30.0 * hbar,
        GridSpacing::Logarithmic,
        hbar,
    )?;
    let scale = 1.0 / norm_sq.sqrt();
    let v = StateVector::from_fn(rep, |y| {
        Complex64::new(scale * guarded_exp(0.5 * log_mag_sq(y)), 0.0)
    })?;
    Ok(Some(v))
}

/// Report of the explicit imaginary-eigenvalue construction
/// `P ψ = i α ψ` with `ψ(x) = e^{-α x / hbar}` on a half-line grid.
#[derive(Debug, Clone)]
pub struct ImaginaryEigenvectorReport {
    /// Quadrature norm² of the (unnormalized) eigenfunction.
    pub norm_sq: f64,
    /// Closed form `hbar / (2α)`.
    pub expected_norm_sq: f64,
    /// `‖Pψ - iαψ‖ / ‖ψ‖` away from the boundary stencils.
    pub residual: f64,
    /// `⟨ψ|P|ψ⟩ / ⟨ψ|ψ⟩`; the imaginary part is the boundary contribution
    /// `≈ α` and is what disqualifies `P` as an observable here.
    pub p_expectation: Complex64,
    pub flagged_nonreal: bool,
}

/// Demonstrate the normalizable imaginary-eigenvalue solution of the
/// momentum operator on the half line.
pub fn imaginary_eigenvector_demo(
    alpha: f64,
    hbar: f64,
    rep: &Representation,
) -> Result<ImaginaryEigenvectorReport> {
    if !(alpha > 0.0) || !(hbar > 0.0) {
        return Err(Error::InvalidRepresentation(format!(
            "alpha and hbar must be positive, got {alpha}, {hbar}"
        )));
    }
    let RepKind::HalfLineGrid { x_min, x_max, .. } = *rep.kind() else {
        return Err(Error::InvalidRepresentation(
            "the demo needs a half-line grid".into(),
        ));
    };
    let expected_norm_sq = hbar / (2.0 * alpha);
    // tail [x_max, ∞) must be captured to 1e-10 relative
    let tail_rel = (-2.0 * alpha * x_max / hbar).exp();
    if tail_rel > 1e-10 {
        return Err(Error::Window {
            tail_mass: tail_rel,
            tol: 1e-10,
        });
    }
    // head [0, x_min] (the integrand is ~1 there) eats into the 1e-8 norm
    // tolerance and needs its own, looser gate
    let head_rel = x_min / expected_norm_sq;
    if head_rel > 5e-9 {
        return Err(Error::Window {
            tail_mass: head_rel,
            tol: 5e-9,
        });
    }

    let psi = StateVector::from_fn(rep.clone(), |x| {
        Complex64::new((-alpha * x / hbar).exp(), 0.0)
    })?;
    let norm_sq = psi.norm_sq();

    let p_psi = apply_momentum(rep, &psi)?;
    // residual away from the one-sided boundary stencils
    let n = rep.dim();
    let skip = 3;
    let w = rep.weights();
    let mut num = 0.0;
    for i in skip..n - skip {
        let want = Complex64::new(0.0, alpha) * psi.coeffs()[i];
        num += w[i] * (p_psi.coeffs()[i] - want).norm_sqr();
    }
    let residual = num.sqrt() / norm_sq.sqrt();

    let p_expectation = psi.inner(&p_psi)? / Complex64::new(norm_sq, 0.0);
    let flagged_nonreal = p_expectation.im.abs() > 1e-6 * alpha;

    Ok(ImaginaryEigenvectorReport {
        norm_sq,
        expected_norm_sq,
        residual,
        p_expectation,
        flagged_nonreal,
    })
}

/// `P = -i hbar d/dx` applied on the grid (log grids use the chain rule
/// through `u = ln x`; fourth-order interior stencils, one-sided rows at
/// the window edges).
pub fn apply_momentum(rep: &Representation, psi: &StateVector) -> Result<StateVector> {
    rep.ensure_same(psi.rep())?;
    let n = rep.dim();
    let hbar = rep.hbar();
    let coeffs = match *rep.kind() {
        RepKind::HalfLineGrid {
            spacing: GridSpacing::Logarithmic,
            ..
        } => {
            let du = rep.log_step().expect("log grid");
            let d = derivative_matrix(n, du);
            let mut out = nalgebra::DVector::zeros(n);
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in i.saturating_sub(3)..(i + 4).min(n) {
                    let c = d[(i, j)];
                    if c != 0.0 {
                        acc += Complex64::new(c, 0.0) * psi.coeffs()[j];
                    }
                }
                out[i] = Complex64::new(0.0, -hbar / rep.nodes()[i]) * acc;
            }
            out
        }
        RepKind::HalfLineGrid {
            spacing: GridSpacing::Uniform,
            ..
        } => {
            let h = rep.uniform_step().expect("uniform grid");
            let d = derivative_matrix(n, h);
            let mut out = nalgebra::DVector::zeros(n);
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in i.saturating_sub(3)..(i + 4).min(n) {
                    let c = d[(i, j)];
                    if c != 0.0 {
                        acc += Complex64::new(c, 0.0) * psi.coeffs()[j];
                    }
                }
                out[i] = Complex64::new(0.0, -hbar) * acc;
            }
            out
        }
        RepKind::FockLine { .. } => {
            return Err(Error::InvalidRepresentation(
                "apply_momentum differentiates grid samples".into(),
            ))
        }
    };
    StateVector::new(rep.clone(), coeffs)
}

/// One entry of the transformed-operator diagnosis.
#[derive(Debug, Clone)]
pub struct TransformCase {
    pub label: &'static str,
    pub report: DeficiencyReport,
}

/// Deficiency diagnosis of the operators produced by promoting the
/// contact-transformed variables on the half line: `Q* = P`, `P* = -Q`,
/// `P* = √2 P + Q`, `Q* = √2 Q + P`.
pub fn quantum_transform_diagnosis(hbar: f64) -> Result<Vec<TransformCase>> {
    let domain = Domain::half_line();
    Ok(vec![
        TransformCase {
            label: "Qstar=P",
            report: deficiency_indices(OperatorKind::MomentumP, domain, hbar)?,
        },
        // P* = -Q: real multiplication operator, no adjoint eigensolutions
        TransformCase {
            label: "Pstar=-Q",
            report: build_report(
                [multiplication_solution(), multiplication_solution()],
                domain,
                hbar,
            )?,
        },
        TransformCase {
            label: "Pstar=sqrt2P+Q",
            report: build_report(
                [
                    sqrt2_p_plus_q_solution(1.0, hbar),
                    sqrt2_p_plus_q_solution(-1.0, hbar),
                ],
                domain,
                hbar,
            )?,
        },
        TransformCase {
            label: "Qstar=sqrt2Q+P",
            report: build_report(
                [
                    sqrt2_q_plus_p_solution(1.0, hbar),
                    sqrt2_q_plus_p_solution(-1.0, hbar),
                ],
                domain,
                hbar,
            )?,
        },
    ])
}
