//! Fubini-Study geometry of coherent-state families.
//!
//! The line element is `ds² = (2 hbar) [ ‖d|s⟩‖² - |⟨s|d|s⟩|² ]`, pulled
//! back along the phase-space map `(p, q) ↦ |s(p,q)⟩` by central finite
//! differences with Richardson step-halving. The same `2 hbar` scale
//! reproduces the flat metric of the canonical vacuum family and the
//! Poincaré half-plane form `q²dp²/(β hbar) + (β hbar) dq²/q²` of the
//! affine family, so one scale convention serves both (recorded in
//! [`MetricSample::scale_convention`]).
//!
//! Curvature is reported as the scalar curvature, twice the Gaussian
//! curvature computed from the Brioschi formula; under that convention the
//! affine half plane sits at `-2/(β hbar)` and flat families at zero.

use num_complex::Complex64;

use crate::affine::{AffineFamily, AffinePhasePoint};
use crate::canonical::{CoherentFamily, PhasePoint};
use crate::error::{Error, Result};
use crate::op::OperatorMatrix;
use crate::state::StateVector;

/// Default finite-difference step for the state map.
pub const DEFAULT_FD_STEP: f64 = 1e-3;
/// Relative accuracy the Richardson pair must certify.
pub const METRIC_FD_TOL: f64 = 1e-5;

/// Anything that maps phase-space points to normalized states.
///
/// Evaluations must be pure; scans over grids of points may run
/// concurrently.
pub trait PhaseFamily: Sync {
    fn state_at(&self, p: f64, q: f64) -> Result<StateVector>;
    fn hbar(&self) -> f64;
    /// Expectation of a hermitian operator in the state at `(p, q)`.
    fn symbol_at(&self, h_op: &OperatorMatrix, p: f64, q: f64) -> Result<f64>;
    /// Same symbol from an already-built state (avoids rebuilding it on
    /// hot paths like action integrals).
    fn symbol_of(&self, h_op: &OperatorMatrix, state: &StateVector) -> Result<f64> {
        h_op.real_expectation(state, 1e-8)
    }
    /// Natural finite-difference steps at a point (the affine `q` step
    /// scales with `q` so stencils respect `q > 0`).
    fn steps(&self, p: f64, q: f64, base: f64) -> (f64, f64) {
        let _ = (p, q);
        (base, base)
    }
}

impl PhaseFamily for CoherentFamily {
    fn state_at(&self, p: f64, q: f64) -> Result<StateVector> {
        self.coherent_state(PhasePoint::new(p, q))
    }

    fn hbar(&self) -> f64 {
        self.rep().hbar()
    }

    fn symbol_at(&self, h_op: &OperatorMatrix, p: f64, q: f64) -> Result<f64> {
        self.weak_symbol(h_op, PhasePoint::new(p, q))
    }

    fn symbol_of(&self, h_op: &OperatorMatrix, state: &StateVector) -> Result<f64> {
        h_op.real_expectation(state, crate::canonical::SYMBOL_IMAG_TOL)
    }
}

impl PhaseFamily for AffineFamily {
    fn state_at(&self, p: f64, q: f64) -> Result<StateVector> {
        self.coherent_state(AffinePhasePoint::new(p, q)?)
    }

    fn hbar(&self) -> f64 {
        self.rep().hbar()
    }

    fn symbol_at(&self, h_op: &OperatorMatrix, p: f64, q: f64) -> Result<f64> {
        self.weak_symbol(h_op, AffinePhasePoint::new(p, q)?)
    }

    fn steps(&self, _p: f64, q: f64, base: f64) -> (f64, f64) {
        (base, base * q)
    }
}

/// Metric components at a phase point, as the symmetric tensor of
/// `ds² = g_pp dp² + 2 g_pq dp dq + g_qq dq²`.
#[derive(Debug, Clone, Copy)]
pub struct MetricSample {
    pub p: f64,
    pub q: f64,
    pub g_pp: f64,
    pub g_pq: f64,
    pub g_qq: f64,
    /// Estimated finite-difference error left after Richardson.
    pub fd_error: f64,
    /// The overall scale convention used for `ds²`.
    pub scale_convention: &'static str,
}

impl MetricSample {
    pub fn det(&self) -> f64 {
        self.g_pp * self.g_qq - self.g_pq * self.g_pq
    }

    pub fn is_positive_definite(&self) -> bool {
        self.g_pp > 0.0 && self.g_qq > 0.0 && self.det() > 0.0
    }
}

/// Scalar curvature at a phase point.
#[derive(Debug, Clone, Copy)]
pub struct CurvatureSample {
    pub p: f64,
    pub q: f64,
    /// Scalar curvature (twice the Gaussian curvature of the surface).
    pub k: f64,
}

/// Pull back the Fubini-Study metric onto phase space at `(p, q)` by
/// central differences of the state map with steps `(h_p, h_q)` derived
/// from `step`, Richardson-extrapolated from the `h` and `h/2` evaluations.
///
/// Errors when the two evaluations have not entered the O(h²) regime
/// (step-size error) or when the result is not positive definite.
pub fn fs_metric(family: &dyn PhaseFamily, p: f64, q: f64, step: f64) -> Result<MetricSample> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::StepSize {
            context: "fs_metric step must be positive".into(),
            estimate: step,
            tol: 0.0,
        });
    }
    let center = normalized(family.state_at(p, q)?)?;
    let coarse = metric_tensor_at(family, &center, p, q, step)?;
    let fine = metric_tensor_at(family, &center, p, q, step / 2.0)?;

    // Richardson: error(h) = C h², so (4 fine - coarse)/3 cancels C.
    let extrap = |c: f64, f: f64| (4.0 * f - c) / 3.0;
    let g_pp = extrap(coarse.0, fine.0);
    let g_pq = extrap(coarse.1, fine.1);
    let g_qq = extrap(coarse.2, fine.2);

    let scale = g_pp.abs().max(g_qq.abs()).max(1e-12);
    let fd_error = ((coarse.0 - fine.0).abs())
        .max((coarse.1 - fine.1).abs())
        .max((coarse.2 - fine.2).abs())
        / 3.0;
    if fd_error > METRIC_FD_TOL * scale {
        return Err(Error::StepSize {
            context: format!("fs_metric differencing at ({p}, {q})"),
            estimate: fd_error / scale,
            tol: METRIC_FD_TOL,
        });
    }

    let sample = MetricSample {
        p,
        q,
        g_pp,
        g_pq,
        g_qq,
        fd_error,
        scale_convention: "2*hbar",
    };
    if !sample.is_positive_definite() {
        return Err(Error::NonFinite {
            context: format!(
                "metric at ({p}, {q}) is not positive definite: ({g_pp}, {g_pq}, {g_qq})"
            ),
        });
    }
    Ok(sample)
}

/// One central-difference evaluation of the (g_pp, g_pq, g_qq) tensor.
fn metric_tensor_at(
    family: &dyn PhaseFamily,
    center: &StateVector,
    p: f64,
    q: f64,
    step: f64,
) -> Result<(f64, f64, f64)> {
    let (hp, hq) = family.steps(p, q, step);
    let sp_plus = normalized(family.state_at(p + hp, q)?)?;
    let sp_minus = normalized(family.state_at(p - hp, q)?)?;
    let sq_plus = normalized(family.state_at(p, q + hq)?)?;
    let sq_minus = normalized(family.state_at(p, q - hq)?)?;

    let half = Complex64::new(0.5 / hp, 0.0);
    let dp = sp_plus
        .axpy(Complex64::new(-1.0, 0.0), &sp_minus)?
        .scaled(half);
    let half = Complex64::new(0.5 / hq, 0.0);
    let dq = sq_plus
        .axpy(Complex64::new(-1.0, 0.0), &sq_minus)?
        .scaled(half);

    let a = center.inner(&dp)?;
    let b = center.inner(&dq)?;
    let scale = 2.0 * family.hbar();
    let g_pp = scale * (dp.inner(&dp)?.re - a.norm_sqr());
    let g_qq = scale * (dq.inner(&dq)?.re - b.norm_sqr());
    let g_pq = scale * (dp.inner(&dq)?.re - (a.conj() * b).re);
    Ok((g_pp, g_pq, g_qq))
}

fn normalized(s: StateVector) -> Result<StateVector> {
    // The metric is projective; normalizing here removes the tiny norm
    // drift grid families accumulate without touching the physics.
    s.normalized()
}

/// Eq.-of-moments route to the canonical metric: with fiducial moments
/// `ΣQ = ⟨(ΔQ)²⟩`, `ΣP = ⟨(ΔP)²⟩`, `σ = ⟨ΔQ ΔP + ΔP ΔQ⟩`, the displaced
/// family carries
/// `ds² = (2/hbar)[ ΣQ dp² - σ dp dq + ΣP dq² ]`,
/// constant over phase space. The cross-term sign follows from
/// differentiating the displacement map with the ordering used here
/// (phase rotation first, then translation); it is pinned against the
/// finite-difference route by tests.
pub fn fs_metric_from_variances(family: &CoherentFamily, p: f64, q: f64) -> Result<MetricSample> {
    let eta = family.fiducial();
    let hbar = family.hbar();
    let q_op = family.q_op();
    let p_op = family.p_op();

    let mean_q = q_op.real_expectation(eta, 1e-9)?;
    let mean_p = p_op.real_expectation(eta, 1e-9)?;
    let mean_q2 = q_op.pow(2).real_expectation(eta, 1e-9)?;
    let mean_p2 = p_op.pow(2).real_expectation(eta, 1e-9)?;
    let qp = q_op.matmul(p_op)?;
    let pq = p_op.matmul(q_op)?;
    let mean_sym = qp.add(&pq)?.real_expectation(eta, 1e-9)?;

    let var_q = mean_q2 - mean_q * mean_q;
    let var_p = mean_p2 - mean_p * mean_p;
    let cross = mean_sym - 2.0 * mean_q * mean_p;

    Ok(MetricSample {
        p,
        q,
        g_pp: 2.0 / hbar * var_q,
        g_pq: -cross / hbar,
        g_qq: 2.0 / hbar * var_p,
        fd_error: 0.0,
        scale_convention: "2*hbar",
    })
}

/// Scalar curvature by the Brioschi formula on a 5x5 metric stencil, with
/// Richardson step-halving (the `±2h` ring doubles as the coarse pass).
pub fn curvature(family: &dyn PhaseFamily, p: f64, q: f64, step: f64) -> Result<CurvatureSample> {
    let (hp, hq) = family.steps(p, q, step);
    if q != 0.0 && q - 2.0 * hq <= 0.0 {
        return Err(Error::Region { p, q, step });
    }
    let fd_step = DEFAULT_FD_STEP;
    // metric samples on the 5x5 stencil
    let mut g = [[(0.0_f64, 0.0_f64, 0.0_f64); 5]; 5];
    for (i, di) in (-2..=2).enumerate() {
        for (j, dj) in (-2..=2).enumerate() {
            let sample = fs_metric(family, p + di as f64 * hp, q + dj as f64 * hq, fd_step)
                .map_err(|e| match e {
                    Error::Truncation { .. } => Error::Region { p, q, step },
                    other => other,
                })?;
            g[i][j] = (sample.g_pp, sample.g_pq, sample.g_qq);
        }
    }
    let k_fine = brioschi(&g, hp, hq, 1);
    let k_coarse = brioschi(&g, hp, hq, 2);
    // Richardson in the stencil spacing
    let k_gauss = (4.0 * k_fine - k_coarse) / 3.0;
    Ok(CurvatureSample {
        p,
        q,
        k: 2.0 * k_gauss,
    })
}

/// Gaussian curvature from metric samples on the stencil with ring `r`
/// (spacing r·h in each axis).
fn brioschi(g: &[[(f64, f64, f64); 5]; 5], hp: f64, hq: f64, r: usize) -> f64 {
    let c = 2; // center index
    let at = |di: i32, dj: i32| g[(c + di * r as i32) as usize][(c + dj * r as i32) as usize];
    let hu = hp * r as f64;
    let hv = hq * r as f64;

    let (e0, f0, g0) = at(0, 0);
    let d_u = |sel: fn((f64, f64, f64)) -> f64| (sel(at(1, 0)) - sel(at(-1, 0))) / (2.0 * hu);
    let d_v = |sel: fn((f64, f64, f64)) -> f64| (sel(at(0, 1)) - sel(at(0, -1))) / (2.0 * hv);
    let d_uu = |sel: fn((f64, f64, f64)) -> f64| {
        (sel(at(1, 0)) - 2.0 * sel(at(0, 0)) + sel(at(-1, 0))) / (hu * hu)
    };
    let d_vv = |sel: fn((f64, f64, f64)) -> f64| {
        (sel(at(0, 1)) - 2.0 * sel(at(0, 0)) + sel(at(0, -1))) / (hv * hv)
    };
    let d_uv = |sel: fn((f64, f64, f64)) -> f64| {
        (sel(at(1, 1)) - sel(at(1, -1)) - sel(at(-1, 1)) + sel(at(-1, -1))) / (4.0 * hu * hv)
    };

    let se = |t: (f64, f64, f64)| t.0;
    let sf = |t: (f64, f64, f64)| t.1;
    let sg = |t: (f64, f64, f64)| t.2;

    let e_v = d_v(se);
    let e_vv = d_vv(se);
    let e_u = d_u(se);
    let g_u = d_u(sg);
    let g_uu = d_uu(sg);
    let g_v = d_v(sg);
    let f_u = d_u(sf);
    let f_v = d_v(sf);
    let f_uv = d_uv(sf);

    let m1 = [
        [-0.5 * e_vv + f_uv - 0.5 * g_uu, 0.5 * e_u, f_u - 0.5 * e_v],
        [f_v - 0.5 * g_u, e0, f0],
        [0.5 * g_v, f0, g0],
    ];
    let m2 = [
        [0.0, 0.5 * e_v, 0.5 * g_u],
        [0.5 * e_v, e0, f0],
        [0.5 * g_u, f0, g0],
    ];
    let det3 = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let denom = e0 * g0 - f0 * f0;
    (det3(&m1) - det3(&m2)) / (denom * denom)
}

/// A family wrapper that multiplies every state by a smooth phase
/// `e^{i φ(p,q)}`; the projective metric must not see it.
pub struct PhaseTwisted<'a, F: PhaseFamily> {
    pub inner: &'a F,
    pub phase: fn(f64, f64) -> f64,
}

impl<F: PhaseFamily> PhaseFamily for PhaseTwisted<'_, F> {
    fn state_at(&self, p: f64, q: f64) -> Result<StateVector> {
        let s = self.inner.state_at(p, q)?;
        Ok(s.scaled(Complex64::new(0.0, (self.phase)(p, q)).exp()))
    }

    fn hbar(&self) -> f64 {
        self.inner.hbar()
    }

    fn symbol_at(&self, h_op: &OperatorMatrix, p: f64, q: f64) -> Result<f64> {
        self.inner.symbol_at(h_op, p, q)
    }

    fn steps(&self, p: f64, q: f64, base: f64) -> (f64, f64) {
        self.inner.steps(p, q, base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::FiducialSpec;
    use crate::rep::Representation;

    fn vacuum_family(n: usize, hbar: f64) -> CoherentFamily {
        CoherentFamily::vacuum(Representation::fock(n, hbar).unwrap()).unwrap()
    }

    #[test]
    fn canonical_vacuum_metric_is_cartesian() {
        let fam = vacuum_family(128, 1.0);
        for &(p, q) in &[(0.0, 0.0), (0.7, -0.5), (-1.0, 1.0)] {
            let m = fs_metric(&fam, p, q, DEFAULT_FD_STEP).unwrap();
            assert!((m.g_pp - 1.0).abs() < 1e-5, "({p},{q}) g_pp {}", m.g_pp);
            assert!((m.g_qq - 1.0).abs() < 1e-5, "({p},{q}) g_qq {}", m.g_qq);
            assert!(m.g_pq.abs() < 1e-5, "({p},{q}) g_pq {}", m.g_pq);
        }
    }

    #[test]
    fn variance_route_vacuum_and_excited() {
        let hbar = 1.0;
        let fam = vacuum_family(128, hbar);
        let m = fs_metric_from_variances(&fam, 0.0, 0.0).unwrap();
        assert!((m.g_pp - 1.0).abs() < 1e-10);
        assert!((m.g_qq - 1.0).abs() < 1e-10);
        assert!(m.g_pq.abs() < 1e-10);

        // first excited Fock state: <(ΔQ)²> = <(ΔP)²> = 3 hbar / 2
        let rep = Representation::fock(128, hbar).unwrap();
        let e1 = StateVector::basis(rep.clone(), 1).unwrap();
        let fam1 = CoherentFamily::new(rep, FiducialSpec::Custom(e1)).unwrap();
        let m1 = fs_metric_from_variances(&fam1, 0.0, 0.0).unwrap();
        assert!((m1.g_pp - 3.0).abs() < 1e-9, "g_pp {}", m1.g_pp);
        assert!((m1.g_qq - 3.0).abs() < 1e-9, "g_qq {}", m1.g_qq);
        assert!(m1.g_pq.abs() < 1e-10);
    }

    #[test]
    fn real_fiducials_have_no_cross_term() {
        // real coefficients in the Fock basis mean a real wavefunction, and
        // <ΔQΔP + ΔPΔQ> vanishes there
        let rep = Representation::fock(96, 1.0).unwrap();
        let e0 = StateVector::basis(rep.clone(), 0).unwrap();
        let e2 = StateVector::basis(rep.clone(), 2).unwrap();
        let eta = e0
            .axpy(Complex64::new(0.6, 0.0), &e2)
            .unwrap()
            .normalized()
            .unwrap();
        let fam = CoherentFamily::new(rep, FiducialSpec::Custom(eta)).unwrap();
        let m = fs_metric_from_variances(&fam, 0.3, -0.2).unwrap();
        assert!(m.g_pq.abs() < 1e-10, "cross {}", m.g_pq);
    }

    #[test]
    fn fd_and_variance_routes_agree_for_complex_fiducial() {
        // squeezed-phase fiducial exp(i c Q²/hbar)|0> has a genuine cross
        // term; the finite-difference and moment routes must agree on it,
        // sign included.
        let hbar = 1.0;
        let rep = Representation::fock(128, hbar).unwrap();
        let fam0 = CoherentFamily::vacuum(rep.clone()).unwrap();
        let q2 = fam0.q_op().pow(2);
        let spec = crate::spectral::spectral_decompose(&q2).unwrap();
        let c = 0.3;
        let eta = spec
            .apply_exp(
                Complex64::new(0.0, c / hbar),
                &crate::canonical::make_vacuum(&rep).unwrap(),
            )
            .unwrap()
            .normalized()
            .unwrap();
        let fam = CoherentFamily::new(rep, FiducialSpec::Custom(eta)).unwrap();

        let fd = fs_metric(&fam, 0.2, 0.4, DEFAULT_FD_STEP).unwrap();
        let mv = fs_metric_from_variances(&fam, 0.2, 0.4).unwrap();
        assert!(
            fd.g_pq.abs() > 0.1,
            "expected a real cross term, {}",
            fd.g_pq
        );
        assert!(
            (fd.g_pp - mv.g_pp).abs() < 1e-5,
            "{} vs {}",
            fd.g_pp,
            mv.g_pp
        );
        assert!(
            (fd.g_pq - mv.g_pq).abs() < 1e-5,
            "{} vs {}",
            fd.g_pq,
            mv.g_pq
        );
        assert!(
            (fd.g_qq - mv.g_qq).abs() < 1e-5,
            "{} vs {}",
            fd.g_qq,
            mv.g_qq
        );
    }

    #[test]
    fn affine_metric_is_poincare_form() {
        let beta = 1.0;
        let hbar = 1.0;
        let fam = AffineFamily::standard(beta, hbar).unwrap();
        let m = fs_metric(&fam, 0.0, 1.0, DEFAULT_FD_STEP).unwrap();
        assert!((m.g_pp - 1.0).abs() < 1e-4, "g_pp {}", m.g_pp);
        assert!((m.g_qq - 1.0).abs() < 1e-4, "g_qq {}", m.g_qq);
        assert!(m.g_pq.abs() < 1e-4, "g_pq {}", m.g_pq);

        let m2 = fs_metric(&fam, 0.0, 2.0, DEFAULT_FD_STEP).unwrap();
        assert!(
            (m2.g_pp - 4.0 / (beta * hbar)).abs() < 1e-4,
            "g_pp {}",
            m2.g_pp
        );
        assert!(
            (m2.g_qq - beta * hbar / 4.0).abs() < 1e-4,
            "g_qq {}",
            m2.g_qq
        );
    }

    #[test]
    fn canonical_curvature_vanishes() {
        let fam = vacuum_family(128, 1.0);
        let k = curvature(&fam, 0.0, 0.0, 0.08).unwrap();
        assert!(k.k.abs() < 1e-3, "K = {}", k.k);
    }

    #[test]
    fn affine_curvature_matches_half_plane() {
        // scalar curvature -2/(β hbar), constant over the half plane
        let cases = [(1.0, 1.0, 0.0, 1.0), (2.0, 1.0, 0.3, 1.5)];
        for &(beta, hbar, p, q) in &cases {
            let fam = AffineFamily::standard(beta, hbar).unwrap();
            let k = curvature(&fam, p, q, 0.05).unwrap();
            let want = -2.0 / (beta * hbar);
            assert!(
                (k.k - want).abs() < 0.01 * want.abs(),
                "beta {beta} at ({p},{q}): K = {} want {want}",
                k.k
            );
        }
    }

    #[test]
    fn curvature_constant_across_sample_points() {
        let fam = AffineFamily::standard(1.0, 1.0).unwrap();
        let mut ks = Vec::new();
        for &p in &[-0.3, 0.0, 0.3] {
            for &q in &[0.8, 1.0, 1.25] {
                ks.push(curvature(&fam, p, q, 0.05).unwrap().k);
            }
        }
        let mean = ks.iter().sum::<f64>() / ks.len() as f64;
        let spread = ks.iter().map(|k| (k - mean).abs()).fold(0.0, f64::max);
        assert!(spread < 0.01 * mean.abs(), "spread {spread} around {mean}");
    }

    #[test]
    fn shift_to_cartesian_for_custom_fiducial() {
        // the moment-built linear change of coordinates must flatten the
        // metric of any fiducial to the identity
        let hbar = 1.0;
        let rep = Representation::fock(128, hbar).unwrap();
        let fam0 = CoherentFamily::vacuum(rep.clone()).unwrap();
        let q2 = fam0.q_op().pow(2);
        let spec = crate::spectral::spectral_decompose(&q2).unwrap();
        let eta = spec
            .apply_exp(
                Complex64::new(0.0, -0.4 / hbar),
                &StateVector::basis(rep.clone(), 1).unwrap(),
            )
            .unwrap()
            .normalized()
            .unwrap();
        let fam = CoherentFamily::new(rep, FiducialSpec::Custom(eta)).unwrap();

        let g = fs_metric(&fam, 0.5, -0.3, DEFAULT_FD_STEP).unwrap();
        let mv = fs_metric_from_variances(&fam, 0.5, -0.3).unwrap();
        // hatted coordinates: p^ = a p, q^ = b q + c p with
        // b = sqrt(g_qq), c = g_pq / b, a = sqrt(g_pp - c²)
        let b = mv.g_qq.sqrt();
        let c = mv.g_pq / b;
        let a = (mv.g_pp - c * c).sqrt();
        // metric transforms as J^T G J with J = d(p,q)/d(p^,q^)
        let j = [[1.0 / a, 0.0], [-c / (a * b), 1.0 / b]];
        let gm = [[g.g_pp, g.g_pq], [g.g_pq, g.g_qq]];
        let mut out = [[0.0_f64; 2]; 2];
        for r in 0..2 {
            for s in 0..2 {
                let mut acc = 0.0;
                for i in 0..2 {
                    for k in 0..2 {
                        acc += j[i][r] * gm[i][k] * j[k][s];
                    }
                }
                out[r][s] = acc;
            }
        }
        for r in 0..2 {
            for s in 0..2 {
                let want = if r == s { 1.0 } else { 0.0 };
                assert!(
                    (out[r][s] - want).abs() < 1e-5,
                    "hatted metric [{r}][{s}] = {}",
                    out[r][s]
                );
            }
        }
    }

    #[test]
    fn metric_ignores_smooth_phases() {
        let fam = vacuum_family(96, 1.0);
        let twisted = PhaseTwisted {
            inner: &fam,
            phase: |p, q| 0.3 * p + 0.7 * q + 0.2 * p * q,
        };
        let plain = fs_metric(&fam, 0.4, 0.1, DEFAULT_FD_STEP).unwrap();
        let tw = fs_metric(&twisted, 0.4, 0.1, DEFAULT_FD_STEP).unwrap();
        assert!((plain.g_pp - tw.g_pp).abs() < 1e-6);
        assert!((plain.g_pq - tw.g_pq).abs() < 1e-6);
        assert!((plain.g_qq - tw.g_qq).abs() < 1e-6);
    }

    #[test]
    fn oversized_step_is_a_step_size_error() {
        let fam = vacuum_family(64, 1.0);
        assert!(matches!(
            fs_metric(&fam, 0.0, 0.0, 0.5),
            Err(Error::StepSize { .. })
        ));
        assert!(matches!(
            fs_metric(&fam, 0.0, 0.0, -1.0),
            Err(Error::StepSize { .. })
        ));
    }

    #[test]
    fn metric_samples_are_positive_definite() {
        let fam = vacuum_family(96, 0.5);
        let m = fs_metric(&fam, 0.1, 0.2, DEFAULT_FD_STEP).unwrap();
        assert!(m.is_positive_definite());
        assert!(m.det() > 0.0);
    }

    #[test]
    fn curvature_stencil_respects_half_plane() {
        let fam = AffineFamily::standard(1.0, 1.0).unwrap();
        // q - 2 h q <= 0 can't happen for relative steps, but absurd steps
        // must be rejected rather than crossing q = 0
        assert!(matches!(
            curvature(&fam, 0.0, 1.0, 0.6),
            Err(Error::Region { .. }) | Err(Error::Truncation { .. })
        ));
    }
}
