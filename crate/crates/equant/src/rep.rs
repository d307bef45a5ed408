//! Finite-dimensional representations of the Hilbert space.
//!
//! Two families are supported:
//!
//! * `FockLine` — the truncated oscillator (number) basis for systems on the
//!   full line. Coherent-state displacement is exactly unitary here, which
//!   keeps truncation artifacts out of the phase-space checks.
//! * `HalfLineGrid` — samples of wavefunctions on a grid over `(0, ∞)` with
//!   trapezoid quadrature weights, either uniformly or logarithmically
//!   spaced. Log spacing resolves the power-law behavior of affine fiducial
//!   vectors near `x = 0`.

use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSpacing {
    Uniform,
    Logarithmic,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RepKind {
    FockLine {
        dim: usize,
    },
    HalfLineGrid {
        points: usize,
        x_min: f64,
        x_max: f64,
        spacing: GridSpacing,
    },
}

/// A representation tag: basis choice plus the value of hbar.
///
/// Cheap to clone; grid nodes and quadrature weights are shared.
#[derive(Debug, Clone)]
pub struct Representation {
    kind: RepKind,
    hbar: f64,
    /// Grid nodes for `HalfLineGrid`; empty for `FockLine`.
    nodes: Arc<[f64]>,
    /// Quadrature weights; all ones for `FockLine`.
    weights: Arc<[f64]>,
}

impl PartialEq for Representation {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.hbar == other.hbar
    }
}

impl Representation {
    /// Truncated Fock (oscillator) basis with `dim` levels.
    pub fn fock(dim: usize, hbar: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidRepresentation(format!(
                "FockLine needs dim >= 2, got {dim}"
            )));
        }
        check_hbar(hbar)?;
        Ok(Self {
            kind: RepKind::FockLine { dim },
            hbar,
            nodes: Arc::from(Vec::new()),
            weights: Arc::from(vec![1.0; dim]),
        })
    }

    /// Grid over `[x_min, x_max] ⊂ (0, ∞)` with trapezoid quadrature weights.
    pub fn half_line(
        points: usize,
        x_min: f64,
        x_max: f64,
        spacing: GridSpacing,
        hbar: f64,
    ) -> Result<Self> {
        if points < 16 {
            return Err(Error::InvalidRepresentation(format!(
                "HalfLineGrid needs at least 16 points, got {points}"
            )));
        }
        if !(x_min > 0.0) || !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidRepresentation(format!(
                "HalfLineGrid needs 0 < x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        check_hbar(hbar)?;

        let n = points;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        match spacing {
            GridSpacing::Uniform => {
                let h = (x_max - x_min) / (n - 1) as f64;
                for i in 0..n {
                    nodes[i] = x_min + i as f64 * h;
                    weights[i] = if i == 0 || i == n - 1 { 0.5 * h } else { h };
                }
            }
            GridSpacing::Logarithmic => {
                // Uniform in u = ln x; the measure dx = x du folds the
                // Jacobian into the weights.
                let du = (x_max / x_min).ln() / (n - 1) as f64;
                for i in 0..n {
                    let x = x_min * (i as f64 * du).exp();
                    nodes[i] = x;
                    let trap = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                    weights[i] = trap * x * du;
                }
            }
        }

        Ok(Self {
            kind: RepKind::HalfLineGrid {
                points,
                x_min,
                x_max,
                spacing,
            },
            hbar,
            nodes: Arc::from(nodes),
            weights: Arc::from(weights),
        })
    }

    pub fn kind(&self) -> &RepKind {
        &self.kind
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            RepKind::FockLine { dim } => dim,
            RepKind::HalfLineGrid { points, .. } => points,
        }
    }

    pub fn is_fock(&self) -> bool {
        matches!(self.kind, RepKind::FockLine { .. })
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.kind, RepKind::HalfLineGrid { .. })
    }

    /// Grid nodes; empty slice for `FockLine`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weights of the inner product (all ones for `FockLine`).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Log-grid spacing in u = ln x, if this is a logarithmic grid.
    pub fn log_step(&self) -> Option<f64> {
        match self.kind {
            RepKind::HalfLineGrid {
                points,
                x_min,
                x_max,
                spacing: GridSpacing::Logarithmic,
            } => Some((x_max / x_min).ln() / (points - 1) as f64),
            _ => None,
        }
    }

    /// Uniform-grid spacing in x, if this is a uniform grid.
    pub fn uniform_step(&self) -> Option<f64> {
        match self.kind {
            RepKind::HalfLineGrid {
                points,
                x_min,
                x_max,
                spacing: GridSpacing::Uniform,
            } => Some((x_max - x_min) / (points - 1) as f64),
            _ => None,
        }
    }

    pub(crate) fn describe(&self) -> String {
        match &self.kind {
            RepKind::FockLine { dim } => format!("FockLine(dim={dim}, hbar={})", self.hbar),
            RepKind::HalfLineGrid {
                points,
                x_min,
                x_max,
                spacing,
            } => format!(
                "HalfLineGrid(points={points}, window=[{x_min}, {x_max}], {spacing:?}, hbar={})",
                self.hbar
            ),
        }
    }

    pub(crate) fn ensure_same(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::RepMismatch {
                left: self.describe(),
                right: other.describe(),
            })
        }
    }
}

fn check_hbar(hbar: f64) -> Result<()> {
    if hbar > 0.0 && hbar.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidRepresentation(format!(
            "hbar must be positive and finite, got {hbar}"
        )))
    }
}
