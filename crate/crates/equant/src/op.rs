//! Dense operators tagged with their representation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rep::Representation;
use crate::state::StateVector;

/// Relative tolerance under which a matrix counts as hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A complex dense square matrix acting on coefficient vectors of `rep`.
///
/// Hermiticity is always meant with respect to the representation's inner
/// product: for grids with quadrature weights `W`, the adjoint is
/// `W^{-1} A^H W`, which reduces to the plain conjugate transpose when the
/// weights are trivial.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    rep: Representation,
    label: String,
    entries: DMatrix<Complex64>,
    /// Lazily built application plan; grid operators are mostly banded or
    /// diagonal and matvecs dominate the sweep loops.
    plan: std::sync::OnceLock<ApplyPlan>,
}

#[derive(Debug, Clone)]
enum ApplyPlan {
    Dense,
    Sparse(Vec<Vec<(usize, Complex64)>>),
}

impl OperatorMatrix {
    fn raw(rep: Representation, label: String, entries: DMatrix<Complex64>) -> Self {
        Self {
            rep,
            label,
            entries,
            plan: std::sync::OnceLock::new(),
        }
    }

    pub fn new(
        rep: Representation,
        label: impl Into<String>,
        entries: DMatrix<Complex64>,
    ) -> Result<Self> {
        if entries.nrows() != rep.dim() || entries.ncols() != rep.dim() {
            return Err(Error::InvalidRepresentation(format!(
                "operator shape {}x{} does not match representation dimension {}",
                entries.nrows(),
                entries.ncols(),
                rep.dim()
            )));
        }
        let label = label.into();
        if entries
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::NonFinite {
                context: format!("entries of operator `{label}`"),
            });
        }
        Ok(Self::raw(rep, label, entries))
    }

    pub fn identity(rep: Representation) -> Self {
        let n = rep.dim();
        Self::raw(rep, "1".into(), DMatrix::identity(n, n))
    }

    /// Real multiplication operator `diag(f(x_i))` on a grid.
    pub fn diag_from_fn(
        rep: Representation,
        label: impl Into<String>,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if !rep.is_grid() {
            return Err(Error::InvalidRepresentation(
                "diag_from_fn needs a grid representation".into(),
            ));
        }
        let n = rep.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, &x) in rep.nodes().iter().enumerate() {
            m[(i, i)] = Complex64::new(f(x), 0.0);
        }
        Self::new(rep, label, m)
    }

    pub fn rep(&self) -> &Representation {
        &self.rep
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        self.rep.ensure_same(v.rep())?;
        let plan = self.plan.get_or_init(|| {
            let rows = nonzeros_by_row(&self.entries);
            let nnz: usize = rows.iter().map(Vec::len).sum();
            // sparse walks only pay off when most entries vanish
            if nnz * 5 < self.entries.len() {
                ApplyPlan::Sparse(rows)
            } else {
                ApplyPlan::Dense
            }
        });
        let out = match plan {
            ApplyPlan::Dense => &self.entries * v.coeffs(),
            ApplyPlan::Sparse(rows) => {
                let mut out = DVector::zeros(rows.len());
                for (i, row) in rows.iter().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &(j, a) in row {
                        acc += a * v.coeffs()[j];
                    }
                    out[i] = acc;
                }
                out
            }
        };
        StateVector::new(self.rep.clone(), out)
    }

    /// Adjoint with respect to the representation's inner product:
    /// `W^{-1} A^H W` (plain conjugate transpose for trivial weights).
    pub fn adjoint(&self) -> Self {
        let n = self.dim();
        let w = self.rep.weights();
        let mut out = self.entries.adjoint();
        if self.rep.is_grid() {
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] *= Complex64::new(w[j] / w[i], 0.0);
                }
            }
        }
        Self::raw(self.rep.clone(), format!("adj({})", self.label), out)
    }

    /// Maximum deviation from hermiticity relative to the largest entry,
    /// measured in the weight-symmetrized representative
    /// `B = W^{1/2} A W^{-1/2}` (so it is the plain check for Fock
    /// representations).
    pub fn hermiticity_defect(&self) -> f64 {
        self.hermiticity_defect_interior(0)
    }

    /// Hermiticity defect with `skip` rows/columns at each grid edge
    /// excluded, for operators whose boundary rows use one-sided stencils.
    pub fn hermiticity_defect_interior(&self, skip: usize) -> f64 {
        let n = self.dim();
        if n <= 2 * skip {
            return 0.0;
        }
        let w = self.rep.weights();
        let mut max_entry = 0.0_f64;
        let mut max_defect = 0.0_f64;
        for i in skip..n - skip {
            for j in skip..n - skip {
                let scale = (w[i] / w[j]).sqrt();
                let b_ij = self.entries[(i, j)] * scale;
                let b_ji_conj = (self.entries[(j, i)] / scale).conj();
                max_entry = max_entry.max(b_ij.norm());
                max_defect = max_defect.max((b_ij - b_ji_conj).norm());
            }
        }
        if max_entry == 0.0 {
            0.0
        } else {
            max_defect / max_entry
        }
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_defect() <= rel_tol
    }

    pub fn ensure_hermitian(&self, rel_tol: f64) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect <= rel_tol {
            Ok(())
        } else {
            Err(Error::NonHermitian {
                label: self.label.clone(),
                defect,
                tol: rel_tol,
            })
        }
    }

    /// `⟨ψ|A|ψ⟩`, complex in general.
    pub fn expectation(&self, psi: &StateVector) -> Result<Complex64> {
        psi.inner(&self.apply(psi)?)
    }

    /// `⟨ψ|A|ψ⟩` for hermitian `A`: checks that the imaginary residue is
    /// below `imag_tol` (relative to the state norms) and discards it.
    pub fn real_expectation(&self, psi: &StateVector, imag_tol: f64) -> Result<f64> {
        let v = self.expectation(psi)?;
        let scale = psi.norm_sq().max(1.0);
        if v.im.abs() > imag_tol * scale {
            return Err(Error::ImaginaryResidue {
                residue: v.im.abs(),
                tol: imag_tol * scale,
            });
        }
        Ok(v.re)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.rep.ensure_same(&other.rep)?;
        Ok(Self::raw(
            self.rep.clone(),
            format!("{}*{}", self.label, other.label),
            sparse_aware_mul(&self.entries, &other.entries),
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.rep.ensure_same(&other.rep)?;
        Ok(Self::raw(
            self.rep.clone(),
            format!("{}+{}", self.label, other.label),
            &self.entries + &other.entries,
        ))
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self::raw(self.rep.clone(), self.label.clone(), &self.entries * s)
    }

    pub fn scaled_re(&self, s: f64) -> Self {
        self.scaled(Complex64::new(s, 0.0))
    }

    /// `A + s·1`
    pub fn shifted(&self, s: f64) -> Self {
        let mut entries = self.entries.clone();
        for i in 0..entries.nrows() {
            entries[(i, i)] += Complex64::new(s, 0.0);
        }
        Self::raw(self.rep.clone(), format!("{}+{s}", self.label), entries)
    }

    /// `[A, B] = AB - BA`
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.rep.ensure_same(&other.rep)?;
        Ok(Self::raw(
            self.rep.clone(),
            format!("[{},{}]", self.label, other.label),
            sparse_aware_mul(&self.entries, &other.entries)
                - sparse_aware_mul(&other.entries, &self.entries),
        ))
    }

    /// Integer power by repeated multiplication.
    pub fn pow(&self, k: usize) -> Self {
        let n = self.dim();
        let mut acc = DMatrix::identity(n, n);
        for _ in 0..k {
            acc = sparse_aware_mul(&acc, &self.entries);
        }
        Self::raw(self.rep.clone(), format!("{}^{k}", self.label), acc)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Frobenius distance to another operator, relative to `other`'s norm.
    pub fn rel_frobenius_distance(&self, other: &Self) -> Result<f64> {
        self.rep.ensure_same(&other.rep)?;
        let diff = (&self.entries - &other.entries).norm();
        let base = other.entries.norm();
        Ok(if base == 0.0 { diff } else { diff / base })
    }

    pub(crate) fn from_entries_unchecked(
        rep: Representation,
        label: String,
        entries: DMatrix<Complex64>,
    ) -> Self {
        Self::raw(rep, label, entries)
    }
}

/// Sparsity-aware matrix product. Grid operators here are banded or
/// diagonal; walking only stored nonzeros turns the n³ dense product into
/// ~(bandwidth² · n). Dense inputs degrade to the plain product cost.
pub(crate) fn sparse_aware_mul(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    let rows_a = nonzeros_by_row(a);
    let rows_b = nonzeros_by_row(b);
    let mut out = DMatrix::zeros(a.nrows(), b.ncols());
    for (i, row) in rows_a.iter().enumerate() {
        for &(k, aik) in row {
            for &(j, bkj) in &rows_b[k] {
                out[(i, j)] += aik * bkj;
            }
        }
    }
    out
}

fn nonzeros_by_row(m: &DMatrix<Complex64>) -> Vec<Vec<(usize, Complex64)>> {
    let zero = Complex64::new(0.0, 0.0);
    let mut rows = vec![Vec::new(); m.nrows()];
    // column-major walk matches the storage order
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != zero {
                rows[i].push((j, v));
            }
        }
    }
    rows
}

/// Apply a vector of weights element-wise: used to move between the plain
/// and weight-symmetrized pictures on grids.
pub(crate) fn scale_rows(m: &mut DMatrix<Complex64>, s: &DVector<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            m[(i, j)] *= Complex64::new(s[i], 0.0);
        }
    }
}

pub(crate) fn scale_cols(m: &mut DMatrix<Complex64>, s: &DVector<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            m[(i, j)] *= Complex64::new(s[j], 0.0);
        }
    }
}
