//! Run configuration: defaults, the flat key-value config file, and
//! command-line overrides.
//!
//! Config grammar: one `key = value` pair per line; `#` starts a comment;
//! blank lines are ignored; keys are the snake_case names listed in
//! `RunConfig::apply_kv`. No sections, no nesting.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use equant::checks::Tolerances;
use equant::rep::GridSpacing;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Canonical,
    Affine,
}

impl FamilyKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "canonical" => Ok(FamilyKind::Canonical),
            "affine" => Ok(FamilyKind::Affine),
            other => bail!("unknown family `{other}` (expected canonical|affine)"),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyKind::Canonical => "canonical",
            FamilyKind::Affine => "affine",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    // representation
    pub dim: usize,
    pub hbar: f64,
    pub beta: f64,
    pub grid_points: usize,
    pub grid_x_min: f64,
    pub grid_x_max: f64,
    pub grid_spacing: GridSpacing,
    // phase-space sweep region
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub grid_np: usize,
    pub grid_nq: usize,
    // numerics
    pub fd_step: f64,
    pub curvature_step: f64,
    pub dt: f64,
    pub t_end: f64,
    pub start_p: f64,
    pub start_q: f64,
    // orchestration
    pub threads: usize,
    pub out_dir: PathBuf,
    // subcommand-specific selections
    pub ham: String,
    pub family: FamilyKind,
    pub op: String,
    pub domain: String,
    pub alpha: f64,
    pub gamma: f64,
    pub sweep: bool,
    pub tol: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: 128,
            hbar: 1.0,
            beta: 1.0,
            grid_points: 2000,
            grid_x_min: 1e-5,
            grid_x_max: 40.0,
            grid_spacing: GridSpacing::Logarithmic,
            p_min: -1.0,
            p_max: 1.0,
            q_min: -1.0,
            q_max: 1.0,
            grid_np: 11,
            grid_nq: 11,
            fd_step: 1e-3,
            curvature_step: 0.05,
            dt: 1e-3,
            t_end: 2.0 * std::f64::consts::PI,
            start_p: 1.0,
            start_q: 0.0,
            threads: 0,
            out_dir: PathBuf::from("out"),
            ham: "oscillator".into(),
            family: FamilyKind::Canonical,
            op: "p".into(),
            domain: "halfline".into(),
            alpha: 1.0,
            gamma: 0.0,
            sweep: false,
            tol: Tolerances::default(),
        }
    }
}

impl RunConfig {
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                anyhow!("{}:{}: expected `key = value`", path.display(), lineno + 1)
            })?;
            self.apply_kv(key.trim(), value.trim())
                .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        }
        Ok(())
    }

    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        fn f(v: &str) -> Result<f64> {
            v.parse::<f64>()
                .map_err(|e| anyhow!("bad number `{v}`: {e}"))
        }
        fn u(v: &str) -> Result<usize> {
            v.parse::<usize>()
                .map_err(|e| anyhow!("bad integer `{v}`: {e}"))
        }
        match key {
            "dim" => self.dim = u(value)?,
            "hbar" => self.hbar = f(value)?,
            "beta" => self.beta = f(value)?,
            "grid_points" => self.grid_points = u(value)?,
            "grid_x_min" => self.grid_x_min = f(value)?,
            "grid_x_max" => self.grid_x_max = f(value)?,
            "grid_spacing" => {
                self.grid_spacing = match value {
                    "uniform" => GridSpacing::Uniform,
                    "log" | "logarithmic" => GridSpacing::Logarithmic,
                    other => bail!("unknown grid_spacing `{other}` (uniform|log)"),
                }
            }
            "p_min" => self.p_min = f(value)?,
            "p_max" => self.p_max = f(value)?,
            "q_min" => self.q_min = f(value)?,
            "q_max" => self.q_max = f(value)?,
            "grid_np" => self.grid_np = u(value)?,
            "grid_nq" => self.grid_nq = u(value)?,
            "fd_step" => self.fd_step = f(value)?,
            "curvature_step" => self.curvature_step = f(value)?,
            "dt" => self.dt = f(value)?,
            "t_end" => self.t_end = f(value)?,
            "start_p" => self.start_p = f(value)?,
            "start_q" => self.start_q = f(value)?,
            "threads" => self.threads = u(value)?,
            "out" => self.out_dir = PathBuf::from(value),
            "ham" => self.ham = value.to_string(),
            "family" => self.family = FamilyKind::parse(value)?,
            "op" => self.op = value.to_string(),
            "domain" => self.domain = value.to_string(),
            "alpha" => self.alpha = f(value)?,
            "gamma" => self.gamma = f(value)?,
            "sweep" => self.sweep = value.parse().map_err(|_| anyhow!("bad bool `{value}`"))?,
            "tol_metric" => self.tol.metric = f(value)?,
            "tol_poincare" => self.tol.poincare = f(value)?,
            "tol_curvature" => self.tol.curvature = f(value)?,
            "tol_curvature_flat" => self.tol.curvature_flat = f(value)?,
            "tol_symbol" => self.tol.symbol = f(value)?,
            "tol_symbol_fit" => self.tol.symbol_fit = f(value)?,
            "tol_action" => self.tol.action = f(value)?,
            "tol_stationarity" => self.tol.stationarity_exponent = f(value)?,
            "tol_bracket" => self.tol.bracket = f(value)?,
            "tol_relabel" => self.tol.relabel = f(value)?,
            "tol_witness_norm" => self.tol.witness_norm = f(value)?,
            "tol_spectrum" => self.tol.spectrum = f(value)?,
            "tol_reconstruction" => self.tol.reconstruction = f(value)?,
            other => bail!("unknown config key `{other}`"),
        }
        Ok(())
    }

    /// Validate the numeric fields against the module preconditions before
    /// any dispatch.
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            bail!("dim must be at least 2");
        }
        if !(self.hbar > 0.0) {
            bail!("hbar must be positive");
        }
        if !(self.beta > 0.0) {
            bail!("beta must be positive");
        }
        if self.grid_points < 16 {
            bail!("grid_points must be at least 16");
        }
        if !(self.grid_x_min > 0.0 && self.grid_x_max > self.grid_x_min) {
            bail!("grid window needs 0 < grid_x_min < grid_x_max");
        }
        if !(self.p_max >= self.p_min && self.q_max >= self.q_min) {
            bail!("phase region bounds are inverted");
        }
        if self.grid_np < 1 || self.grid_nq < 1 {
            bail!("sweep grid needs at least one point per axis");
        }
        if !(self.fd_step > 0.0 && self.curvature_step > 0.0 && self.dt > 0.0 && self.t_end > 0.0) {
            bail!("steps and spans must be positive");
        }
        if !(self.alpha > 0.0) {
            bail!("alpha must be positive");
        }
        if self.gamma < 0.0 {
            bail!("gamma must be non-negative");
        }
        Ok(())
    }

    /// Evenly spaced sweep values over the configured phase region.
    pub fn p_values(&self) -> Vec<f64> {
        linspace(self.p_min, self.p_max, self.grid_np)
    }

    pub fn q_values(&self) -> Vec<f64> {
        linspace(self.q_min, self.q_max, self.grid_nq)
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Parse `"11x11"` into `(np, nq)`.
pub fn parse_grid_spec(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s
        .split_once('x')
        .ok_or_else(|| anyhow!("grid spec must look like 11x11, got `{s}`"))?;
    Ok((a.parse()?, b.parse()?))
}
