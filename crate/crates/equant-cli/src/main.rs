//! Command-line runner for the coherent-state laboratory.
//!
//! Exit codes: 0 when every configured check passes, 1 on numeric or
//! tolerance failures, 2 on usage or configuration errors.

// `!(x > 0.0)`-style guards reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod catalog;
mod commands;
mod config;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_grid_spec, FamilyKind, RunConfig};

#[derive(Parser)]
#[command(
    name = "equant",
    version,
    about = "Coherent-state quantization laboratory: weak symbols, phase-space geometry, \
             restricted actions, contact transforms, and self-adjointness diagnostics"
)]
struct Cli {
    /// Flat key = value config file applied before the flag overrides.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for the CSV/JSON reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    hbar: Option<f64>,

    /// Fock-space dimension for canonical families.
    #[arg(long, global = true)]
    dim: Option<usize>,

    /// Affine fiducial parameter.
    #[arg(long, global = true)]
    beta: Option<f64>,

    /// Worker pool size (0 = all cores); EQUANT_THREADS caps it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(flatten)]
    tols: TolArgs,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct TolArgs {
    #[arg(long = "tol-metric", global = true)]
    tol_metric: Option<f64>,
    #[arg(long = "tol-poincare", global = true)]
    tol_poincare: Option<f64>,
    #[arg(long = "tol-curvature", global = true)]
    tol_curvature: Option<f64>,
    #[arg(long = "tol-curvature-flat", global = true)]
    tol_curvature_flat: Option<f64>,
    #[arg(long = "tol-symbol", global = true)]
    tol_symbol: Option<f64>,
    #[arg(long = "tol-symbol-fit", global = true)]
    tol_symbol_fit: Option<f64>,
    #[arg(long = "tol-action", global = true)]
    tol_action: Option<f64>,
    #[arg(long = "tol-stationarity", global = true)]
    tol_stationarity: Option<f64>,
    #[arg(long = "tol-bracket", global = true)]
    tol_bracket: Option<f64>,
    #[arg(long = "tol-relabel", global = true)]
    tol_relabel: Option<f64>,
    #[arg(long = "tol-witness-norm", global = true)]
    tol_witness_norm: Option<f64>,
    #[arg(long = "tol-spectrum", global = true)]
    tol_spectrum: Option<f64>,
    #[arg(long = "tol-reconstruction", global = true)]
    tol_reconstruction: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Weak-correspondence symbol of a catalog Hamiltonian over a phase grid.
    Symbol {
        /// Catalog Hamiltonian name.
        #[arg(long)]
        ham: Option<String>,
        /// Sweep resolution, e.g. 11x11.
        #[arg(long)]
        grid: Option<String>,
    },
    /// Fubini-Study metric components over a phase grid.
    Metric {
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        grid: Option<String>,
    },
    /// Scalar curvature of the coherent-state phase geometry.
    Curvature {
        #[arg(long)]
        family: Option<String>,
    },
    /// Restricted quantum action against the classical action along a flow.
    Action {
        #[arg(long)]
        ham: Option<String>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
    },
    /// Contact-transform catalog: brackets, relabeling, transformed action.
    Transform,
    /// Deficiency indices and the half-line eigenfunction demonstration.
    Deficiency {
        /// Operator: P or D.
        #[arg(long)]
        op: Option<String>,
        /// Domain: halfline or fullline.
        #[arg(long)]
        domain: Option<String>,
        /// Decay rate of the demonstration eigenfunction.
        #[arg(long)]
        alpha: Option<f64>,
        /// Shift of the half line to (-gamma, infinity).
        #[arg(long)]
        gamma: Option<f64>,
        /// Run the full verdict table instead of a single operator.
        #[arg(long)]
        sweep: bool,
    },
    /// Run the complete verification suite and all default experiments.
    VerifyAll,
}

fn build_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.load_file(path)?;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(v) = cli.hbar {
        cfg.hbar = v;
    }
    if let Some(v) = cli.dim {
        cfg.dim = v;
    }
    if let Some(v) = cli.beta {
        cfg.beta = v;
    }
    if let Some(v) = cli.threads {
        cfg.threads = v;
    }
    let t = &cli.tols;
    if let Some(v) = t.tol_metric {
        cfg.tol.metric = v;
    }
    if let Some(v) = t.tol_poincare {
        cfg.tol.poincare = v;
    }
    if let Some(v) = t.tol_curvature {
        cfg.tol.curvature = v;
    }
    if let Some(v) = t.tol_curvature_flat {
        cfg.tol.curvature_flat = v;
    }
    if let Some(v) = t.tol_symbol {
        cfg.tol.symbol = v;
    }
    if let Some(v) = t.tol_symbol_fit {
        cfg.tol.symbol_fit = v;
    }
    if let Some(v) = t.tol_action {
        cfg.tol.action = v;
    }
    if let Some(v) = t.tol_stationarity {
        cfg.tol.stationarity_exponent = v;
    }
    if let Some(v) = t.tol_bracket {
        cfg.tol.bracket = v;
    }
    if let Some(v) = t.tol_relabel {
        cfg.tol.relabel = v;
    }
    if let Some(v) = t.tol_witness_norm {
        cfg.tol.witness_norm = v;
    }
    if let Some(v) = t.tol_spectrum {
        cfg.tol.spectrum = v;
    }
    if let Some(v) = t.tol_reconstruction {
        cfg.tol.reconstruction = v;
    }

    match &cli.cmd {
        Cmd::Symbol { ham, grid } => {
            if let Some(h) = ham {
                cfg.ham = h.clone();
            }
            if let Some(g) = grid {
                let (np, nq) = parse_grid_spec(g)?;
                cfg.grid_np = np;
                cfg.grid_nq = nq;
            }
        }
        Cmd::Metric { family, grid } => {
            if let Some(f) = family {
                cfg.family = FamilyKind::parse(f)?;
            }
            if let Some(g) = grid {
                let (np, nq) = parse_grid_spec(g)?;
                cfg.grid_np = np;
                cfg.grid_nq = nq;
            }
        }
        Cmd::Curvature { family } => {
            if let Some(f) = family {
                cfg.family = FamilyKind::parse(f)?;
            }
        }
        Cmd::Action { ham, dt, t_end } => {
            if let Some(h) = ham {
                cfg.ham = h.clone();
            }
            if let Some(v) = dt {
                cfg.dt = *v;
            }
            if let Some(v) = t_end {
                cfg.t_end = *v;
            }
        }
        Cmd::Transform | Cmd::VerifyAll => {}
        Cmd::Deficiency {
            op,
            domain,
            alpha,
            gamma,
            sweep,
        } => {
            if let Some(v) = op {
                cfg.op = v.clone();
            }
            if let Some(v) = domain {
                cfg.domain = v.clone();
            }
            if let Some(v) = alpha {
                cfg.alpha = *v;
            }
            if let Some(v) = gamma {
                cfg.gamma = *v;
            }
            cfg.sweep = *sweep;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Usage-level validation that must exit 2 rather than 1.
fn validate_usage(cli: &Cli, cfg: &RunConfig) -> Result<(), String> {
    match &cli.cmd {
        Cmd::Symbol { .. } | Cmd::Action { .. } => {
            if catalog::lookup(&cfg.ham).is_none() {
                return Err(format!(
                    "unknown Hamiltonian `{}`; catalog: {}",
                    cfg.ham,
                    catalog::names().join(", ")
                ));
            }
        }
        Cmd::Deficiency { .. } if !cfg.sweep => {
            let op = cfg.op.to_ascii_lowercase();
            if op != "p" && op != "d" {
                return Err(format!("unknown operator `{}` (expected P|D)", cfg.op));
            }
            let dom = cfg.domain.to_ascii_lowercase();
            if dom != "halfline" && dom != "fullline" {
                return Err(format!(
                    "unknown domain `{}` (expected halfline|fullline)",
                    cfg.domain
                ));
            }
        }
        _ => {}
    }
    Ok(())
}

fn init_pool(cfg: &RunConfig) {
    let mut n = if cfg.threads > 0 {
        cfg.threads
    } else {
        std::thread::available_parallelism()
            .map(|v| v.get())
            .unwrap_or(1)
    };
    if let Ok(cap) = std::env::var("EQUANT_THREADS") {
        if let Ok(cap) = cap.parse::<usize>() {
            if cap > 0 {
                n = n.min(cap);
            }
        }
    }
    // pool size only affects wall time; results are reassembled in input
    // order before emission
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Err(msg) = validate_usage(&cli, &cfg) {
        eprintln!("usage error: {msg}");
        return ExitCode::from(2);
    }
    init_pool(&cfg);

    let run = match cli.cmd {
        Cmd::Symbol { .. } => commands::run_symbol(&cfg),
        Cmd::Metric { .. } => commands::run_metric(&cfg),
        Cmd::Curvature { .. } => commands::run_curvature(&cfg),
        Cmd::Action { .. } => commands::run_action(&cfg),
        Cmd::Transform => commands::run_transform(&cfg),
        Cmd::Deficiency { .. } => commands::run_deficiency(&cfg),
        Cmd::VerifyAll => commands::run_verify_all(&cfg),
    };

    match run {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
