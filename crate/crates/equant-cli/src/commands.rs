//! One experiment per subcommand: validate the config, run the sweep, emit
//! `<out>/<cmd>.csv` and `<out>/<cmd>.json`, and report pass/fail against
//! the configured tolerances.
//!
//! Sweeps fan out over the worker pool; results are collected back in index
//! order before emission, so output bytes do not depend on the pool size.

use anyhow::{anyhow, Result};
use rayon::prelude::*;
use serde::Serialize;

use equant::affine::AffineFamily;
use equant::canonical::{CoherentFamily, PhasePoint};
use equant::checks;
use equant::dynamics::{
    check_bracket, enhanced_action, integrate, relabel_invariance, transformed_action_identity,
    ClassicalForm, ClassicalHamiltonian, ContactTransform, Trajectory,
};
use equant::geometry::{curvature, fs_metric};
use equant::rep::Representation;
use equant::selfadjoint::{
    deficiency_indices, imaginary_eigenvector_demo, quantum_transform_diagnosis, Domain,
    OperatorKind,
};

use crate::catalog;
use crate::config::{linspace, FamilyKind, RunConfig};
use crate::emit::{out_path, write_json, Cell, CsvWriter};

fn canonical_family(cfg: &RunConfig) -> Result<CoherentFamily> {
    Ok(CoherentFamily::vacuum(Representation::fock(
        cfg.dim, cfg.hbar,
    )?)?)
}

fn affine_family(cfg: &RunConfig) -> Result<AffineFamily> {
    let rep = Representation::half_line(
        cfg.grid_points,
        cfg.grid_x_min,
        cfg.grid_x_max,
        cfg.grid_spacing,
        cfg.hbar,
    )?;
    Ok(AffineFamily::new(rep, cfg.beta)?)
}

/// The affine half plane needs q > 0; fall back to a sensible window when
/// the configured region (tuned for the full line) does not apply.
fn affine_q_values(cfg: &RunConfig) -> Vec<f64> {
    if cfg.q_min > 0.0 {
        cfg.q_values()
    } else {
        linspace(0.5, 2.0, cfg.grid_nq)
    }
}

#[derive(Serialize)]
struct SymbolSummary {
    command: &'static str,
    ham: String,
    dim: usize,
    hbar: f64,
    grid: String,
    max_correction_deviation: f64,
    tolerance: f64,
    pass: bool,
}

pub fn run_symbol(cfg: &RunConfig) -> Result<bool> {
    let entry =
        catalog::lookup(&cfg.ham).ok_or_else(|| anyhow!("unknown Hamiltonian `{}`", cfg.ham))?;
    let fam = canonical_family(cfg)?;
    let op = (entry.build)(&fam);

    let ps = cfg.p_values();
    let qs = cfg.q_values();
    let points: Vec<(f64, f64)> = ps
        .iter()
        .flat_map(|&p| qs.iter().map(move |&q| (p, q)))
        .collect();
    let rows: Vec<(f64, f64, f64, f64, f64)> = points
        .par_iter()
        .map(|&(p, q)| {
            let sym = fam.weak_symbol(&op, PhasePoint::new(p, q))?;
            let cls = (entry.classical)(p, q);
            Ok((p, q, sym, cls, sym - cls))
        })
        .collect::<Result<_>>()?;

    let mut csv = CsvWriter::create(
        &out_path(&cfg.out_dir, "symbol", "csv")?,
        &["p", "q", "symbol", "classical", "correction"],
    )?;
    let mut max_dev = 0.0_f64;
    for &(p, q, sym, cls, corr) in &rows {
        let predicted = (entry.predicted_correction)(p, q, cfg.hbar);
        max_dev = max_dev.max((corr - predicted).abs());
        csv.row(&[
            Cell::F(p),
            Cell::F(q),
            Cell::F(sym),
            Cell::F(cls),
            Cell::F(corr),
        ])?;
    }
    csv.finish()?;

    let pass = max_dev <= cfg.tol.symbol;
    write_json(
        &out_path(&cfg.out_dir, "symbol", "json")?,
        &SymbolSummary {
            command: "symbol",
            ham: cfg.ham.clone(),
            dim: cfg.dim,
            hbar: cfg.hbar,
            grid: format!("{}x{}", cfg.grid_np, cfg.grid_nq),
            max_correction_deviation: max_dev,
            tolerance: cfg.tol.symbol,
            pass,
        },
    )?;
    if !pass {
        eprintln!(
            "symbol: max |correction - predicted| = {max_dev:.3e} exceeds {:.3e}; failing rows:",
            cfg.tol.symbol
        );
        for &(p, q, _, _, corr) in rows.iter().filter(|r| {
            ((r.4 - (entry.predicted_correction)(r.0, r.1, cfg.hbar)).abs()) > cfg.tol.symbol
        }) {
            eprintln!("  p={p} q={q} correction={corr}");
        }
    }
    Ok(pass)
}

#[derive(Serialize)]
struct MetricSummary {
    command: &'static str,
    family: &'static str,
    dim: usize,
    hbar: f64,
    beta: f64,
    scale_convention: &'static str,
    max_deviation: f64,
    tolerance: f64,
    pass: bool,
    note: &'static str,
}

/// One metric sweep row: (p, q, g_pp, g_pq, g_qq, fd_error).
type MetricRow = (f64, f64, f64, f64, f64, f64);

pub fn run_metric(cfg: &RunConfig) -> Result<bool> {
    let ps = cfg.p_values();
    let (rows, max_dev, tol, note): (Vec<MetricRow>, f64, f64, &'static str) = match cfg.family {
        FamilyKind::Canonical => {
            let fam = canonical_family(cfg)?;
            let qs = cfg.q_values();
            let pts: Vec<(f64, f64)> = ps
                .iter()
                .flat_map(|&p| qs.iter().map(move |&q| (p, q)))
                .collect();
            let rows: Vec<_> = pts
                .par_iter()
                .map(|&(p, q)| {
                    let m = fs_metric(&fam, p, q, cfg.fd_step)?;
                    Ok((p, q, m.g_pp, m.g_pq, m.g_qq, m.fd_error))
                })
                .collect::<Result<_>>()?;
            let max_dev = rows
                .iter()
                .map(|r: &MetricRow| (r.2 - 1.0).abs().max(r.3.abs()).max((r.4 - 1.0).abs()))
                .fold(0.0, f64::max);
            (rows, max_dev, cfg.tol.metric, "deviation from diag(1,1)")
        }
        FamilyKind::Affine => {
            let fam = affine_family(cfg)?;
            let qs = affine_q_values(cfg);
            let pts: Vec<(f64, f64)> = ps
                .iter()
                .flat_map(|&p| qs.iter().map(move |&q| (p, q)))
                .collect();
            let rows: Vec<_> = pts
                .par_iter()
                .map(|&(p, q)| {
                    let m = fs_metric(&fam, p, q, cfg.fd_step)?;
                    Ok((p, q, m.g_pp, m.g_pq, m.g_qq, m.fd_error))
                })
                .collect::<Result<_>>()?;
            let bh = cfg.beta * cfg.hbar;
            let max_dev = rows
                .iter()
                .map(|r: &MetricRow| {
                    let q = r.1;
                    (r.2 * bh / (q * q) - 1.0)
                        .abs()
                        .max((r.4 * q * q / bh - 1.0).abs())
                })
                .fold(0.0, f64::max);
            (
                rows,
                max_dev,
                cfg.tol.poincare,
                "deviation of the scaled Poincare components from 1",
            )
        }
    };

    let mut csv = CsvWriter::create(
        &out_path(&cfg.out_dir, "metric", "csv")?,
        &["p", "q", "g_pp", "g_pq", "g_qq", "fd_error"],
    )?;
    for &(p, q, gpp, gpq, gqq, err) in &rows {
        csv.row(&[
            Cell::F(p),
            Cell::F(q),
            Cell::F(gpp),
            Cell::F(gpq),
            Cell::F(gqq),
            Cell::F(err),
        ])?;
    }
    csv.finish()?;

    let pass = max_dev <= tol;
    write_json(
        &out_path(&cfg.out_dir, "metric", "json")?,
        &MetricSummary {
            command: "metric",
            family: cfg.family.as_str(),
            dim: cfg.dim,
            hbar: cfg.hbar,
            beta: cfg.beta,
            scale_convention: "2*hbar",
            max_deviation: max_dev,
            tolerance: tol,
            pass,
            note,
        },
    )?;
    if !pass {
        eprintln!("metric: max deviation {max_dev:.3e} exceeds {tol:.3e}; failing rows:");
        let bh = cfg.beta * cfg.hbar;
        for r in &rows {
            let dev = match cfg.family {
                FamilyKind::Canonical => (r.2 - 1.0).abs().max(r.3.abs()).max((r.4 - 1.0).abs()),
                FamilyKind::Affine => (r.2 * bh / (r.1 * r.1) - 1.0)
                    .abs()
                    .max((r.4 * r.1 * r.1 / bh - 1.0).abs()),
            };
            if dev > tol {
                eprintln!(
                    "  p={} q={} g_pp={} g_pq={} g_qq={}",
                    r.0, r.1, r.2, r.3, r.4
                );
            }
        }
    }
    Ok(pass)
}

#[derive(Serialize)]
struct CurvatureSummary {
    command: &'static str,
    family: &'static str,
    hbar: f64,
    beta: f64,
    expected: f64,
    max_deviation: f64,
    spread: f64,
    tolerance: f64,
    pass: bool,
}

pub fn run_curvature(cfg: &RunConfig) -> Result<bool> {
    let ps = linspace(cfg.p_min.max(-0.5), cfg.p_max.min(0.5), 3);
    let (points, ks, expected, tol): (Vec<(f64, f64)>, Vec<f64>, f64, f64) = match cfg.family {
        FamilyKind::Canonical => {
            let fam = canonical_family(cfg)?;
            let qs = linspace(-0.5, 0.5, 3);
            let pts: Vec<(f64, f64)> = ps
                .iter()
                .flat_map(|&p| qs.iter().map(move |&q| (p, q)))
                .collect();
            let ks: Vec<f64> = pts
                .par_iter()
                .map(|&(p, q)| Ok(curvature(&fam, p, q, cfg.curvature_step)?.k))
                .collect::<Result<_>>()?;
            (pts, ks, 0.0, cfg.tol.curvature_flat)
        }
        FamilyKind::Affine => {
            let fam = affine_family(cfg)?;
            let qs = linspace(0.8, 1.25, 3);
            let pts: Vec<(f64, f64)> = ps
                .iter()
                .flat_map(|&p| qs.iter().map(move |&q| (p, q)))
                .collect();
            let ks: Vec<f64> = pts
                .par_iter()
                .map(|&(p, q)| Ok(curvature(&fam, p, q, cfg.curvature_step)?.k))
                .collect::<Result<_>>()?;
            (pts, ks, -2.0 / (cfg.beta * cfg.hbar), cfg.tol.curvature)
        }
    };

    let mut csv = CsvWriter::create(
        &out_path(&cfg.out_dir, "curvature", "csv")?,
        &["p", "q", "k"],
    )?;
    for (&(p, q), &k) in points.iter().zip(&ks) {
        csv.row(&[Cell::F(p), Cell::F(q), Cell::F(k)])?;
    }
    csv.finish()?;

    let (max_dev, spread) = match cfg.family {
        FamilyKind::Canonical => (ks.iter().map(|k| k.abs()).fold(0.0, f64::max), 0.0),
        FamilyKind::Affine => {
            let max_dev = ks
                .iter()
                .map(|k| (k - expected).abs() / expected.abs())
                .fold(0.0, f64::max);
            let mean = ks.iter().sum::<f64>() / ks.len() as f64;
            let spread = ks.iter().map(|k| (k - mean).abs()).fold(0.0, f64::max) / mean.abs();
            (max_dev, spread)
        }
    };
    let pass = max_dev <= tol && spread <= tol;
    write_json(
        &out_path(&cfg.out_dir, "curvature", "json")?,
        &CurvatureSummary {
            command: "curvature",
            family: cfg.family.as_str(),
            hbar: cfg.hbar,
            beta: cfg.beta,
            expected,
            max_deviation: max_dev,
            spread,
            tolerance: tol,
            pass,
        },
    )?;
    if !pass {
        eprintln!(
            "curvature: deviation {max_dev:.3e} / spread {spread:.3e} exceeds {tol:.3e}; rows:"
        );
        for (&(p, q), &k) in points.iter().zip(&ks) {
            eprintln!("  p={p} q={q} k={k}");
        }
    }
    Ok(pass)
}

#[derive(Serialize)]
struct ActionSummary {
    command: &'static str,
    ham: String,
    dim: usize,
    hbar: f64,
    quantum: f64,
    classical: f64,
    classical_pdq: f64,
    classical_qdp: f64,
    boundary_term: f64,
    difference: f64,
    fd_error: f64,
    energy_drift: f64,
    tolerance: f64,
    pass: bool,
}

fn classical_hamiltonian(name: &str) -> Result<ClassicalHamiltonian> {
    Ok(match name {
        "oscillator" => ClassicalHamiltonian::oscillator(),
        "free" => ClassicalHamiltonian::free_particle(),
        "p" => ClassicalHamiltonian::translation(),
        "q" => ClassicalHamiltonian::separable("q", |_| 0.0, |q| q, |_| 0.0, |_| 1.0),
        "q2" => ClassicalHamiltonian::separable("q2", |_| 0.0, |q| q * q, |_| 0.0, |q| 2.0 * q),
        "quartic" => ClassicalHamiltonian::quartic(),
        other => return Err(anyhow!("no classical flow registered for `{other}`")),
    })
}

pub fn run_action(cfg: &RunConfig) -> Result<bool> {
    let entry =
        catalog::lookup(&cfg.ham).ok_or_else(|| anyhow!("unknown Hamiltonian `{}`", cfg.ham))?;
    let fam = canonical_family(cfg)?;
    let op = (entry.build)(&fam);

    let h_cl = classical_hamiltonian(&cfg.ham)?;
    let integration = integrate(
        &h_cl,
        PhasePoint::new(cfg.start_p, cfg.start_q),
        (0.0, cfg.t_end),
        cfg.dt,
    )?;
    let traj = &integration.trajectory;
    let report = enhanced_action(&fam, ClassicalForm::PDotQ, &op, traj)?;

    let path = out_path(&cfg.out_dir, "action", "csv")?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    traj.write_csv(&mut file, None)?;
    drop(file);

    let pass = report.difference.abs() <= cfg.tol.action;
    write_json(
        &out_path(&cfg.out_dir, "action", "json")?,
        &ActionSummary {
            command: "action",
            ham: cfg.ham.clone(),
            dim: cfg.dim,
            hbar: cfg.hbar,
            quantum: report.quantum,
            classical: report.classical,
            classical_pdq: report.classical_pdq,
            classical_qdp: report.classical_qdp,
            boundary_term: report.boundary_term,
            difference: report.difference,
            fd_error: report.fd_error,
            energy_drift: integration.energy_drift,
            tolerance: cfg.tol.action,
            pass,
        },
    )?;
    if !pass {
        eprintln!(
            "action: |quantum - classical| = {:.3e} exceeds {:.3e}",
            report.difference.abs(),
            cfg.tol.action
        );
    }
    Ok(pass)
}

#[derive(Serialize)]
struct TransformEntrySummary {
    label: String,
    max_bracket_deviation: f64,
    max_relabel_distance: f64,
}

#[derive(Serialize)]
struct TransformedActionSummary {
    label: String,
    quantum: f64,
    classical_star: f64,
    difference: f64,
    gdot_loop_integral: f64,
}

#[derive(Serialize)]
struct TransformSummary {
    command: &'static str,
    dim: usize,
    hbar: f64,
    transforms: Vec<TransformEntrySummary>,
    transformed_action: TransformedActionSummary,
    bracket_tolerance: f64,
    relabel_tolerance: f64,
    action_tolerance: f64,
    pass: bool,
}

pub fn run_transform(cfg: &RunConfig) -> Result<bool> {
    let fam = canonical_family(cfg)?;
    let ps = cfg.p_values();
    let qs = cfg.q_values();
    // bracket points cover the sweep region; relabel points stay inside the
    // trusted radius
    let pts: Vec<(f64, f64)> = ps
        .iter()
        .flat_map(|&p| qs.iter().map(move |&q| (p, q)))
        .collect();

    let mut csv = CsvWriter::create(
        &out_path(&cfg.out_dir, "transform", "csv")?,
        &[
            "transform",
            "p",
            "q",
            "bracket_deviation",
            "relabel_distance",
        ],
    )?;
    let mut entries = Vec::new();
    let mut worst_bracket = 0.0_f64;
    let mut worst_relabel = 0.0_f64;
    for t in ContactTransform::catalog() {
        let mut max_b = 0.0_f64;
        let mut max_r = 0.0_f64;
        for &(p, q) in &pts {
            let b = check_bracket(&t, &[(p, q)])?.max_deviation;
            let r = relabel_invariance(&fam, &t, (p, q))?;
            max_b = max_b.max(b);
            max_r = max_r.max(r);
            csv.row(&[
                Cell::S(t.label().to_string()),
                Cell::F(p),
                Cell::F(q),
                Cell::F(b),
                Cell::F(r),
            ])?;
        }
        worst_bracket = worst_bracket.max(max_b);
        worst_relabel = worst_relabel.max(max_r);
        entries.push(TransformEntrySummary {
            label: t.label().to_string(),
            max_bracket_deviation: max_b,
            max_relabel_distance: max_r,
        });
    }
    csv.finish()?;

    let rot = ContactTransform::rotation();
    let h = catalog::lookup("oscillator").expect("catalog").build;
    let op = h(&fam);
    let n = (cfg.t_end / cfg.dt).round() as usize;
    let base = Trajectory::sample(0.0, cfg.t_end, n.max(16), |t| (t.cos(), t.sin()))?;
    let star = base.mapped(|p, q| rot.forward(p, q))?;
    let transformed = transformed_action_identity(&fam, &op, &rot, &star)?;

    let pass = worst_bracket <= cfg.tol.bracket
        && worst_relabel <= cfg.tol.relabel
        && transformed.difference.abs() <= cfg.tol.action;
    write_json(
        &out_path(&cfg.out_dir, "transform", "json")?,
        &TransformSummary {
            command: "transform",
            dim: cfg.dim,
            hbar: cfg.hbar,
            transforms: entries,
            transformed_action: TransformedActionSummary {
                label: rot.label().to_string(),
                quantum: transformed.quantum,
                classical_star: transformed.classical_star,
                difference: transformed.difference,
                gdot_loop_integral: transformed.gdot_integral,
            },
            bracket_tolerance: cfg.tol.bracket,
            relabel_tolerance: cfg.tol.relabel,
            action_tolerance: cfg.tol.action,
            pass,
        },
    )?;
    if !pass {
        eprintln!(
            "transform: bracket {worst_bracket:.3e}, relabel {worst_relabel:.3e}, action {:.3e}",
            transformed.difference.abs()
        );
    }
    Ok(pass)
}

#[derive(Serialize)]
struct DeficiencySummary {
    n_plus: usize,
    n_minus: usize,
    verdict: String,
    op: String,
    domain: String,
    hbar: f64,
    gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness_norm_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness_norm_expected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigen_residual: Option<f64>,
    pass: bool,
}

fn parse_op(op: &str) -> Result<OperatorKind> {
    match op.to_ascii_lowercase().as_str() {
        "p" => Ok(OperatorKind::MomentumP),
        "d" => Ok(OperatorKind::DilationD),
        other => Err(anyhow!("unknown operator `{other}` (expected P|D)")),
    }
}

fn parse_domain(domain: &str, gamma: f64) -> Result<Domain> {
    match domain.to_ascii_lowercase().as_str() {
        "halfline" | "half-line" => Ok(Domain::HalfLine { origin: -gamma }),
        "fullline" | "full-line" => Ok(Domain::FullLine),
        other => Err(anyhow!(
            "unknown domain `{other}` (expected halfline|fullline)"
        )),
    }
}

pub fn run_deficiency(cfg: &RunConfig) -> Result<bool> {
    if cfg.sweep {
        return run_deficiency_sweep(cfg);
    }
    let kind = parse_op(&cfg.op)?;
    let domain = parse_domain(&cfg.domain, cfg.gamma)?;
    let report = deficiency_indices(kind, domain, cfg.hbar)?;

    // attach the explicit eigenfunction demonstration for the headline case
    let (witness_norm_sq, witness_expected, residual) =
        if kind == OperatorKind::MomentumP && domain == Domain::half_line() {
            let rep = Representation::half_line(
                4001,
                1e-9 * cfg.hbar / cfg.alpha,
                14.0 * cfg.hbar / cfg.alpha,
                equant::rep::GridSpacing::Logarithmic,
                cfg.hbar,
            )?;
            let demo = imaginary_eigenvector_demo(cfg.alpha, cfg.hbar, &rep)?;
            (
                Some(demo.norm_sq),
                Some(demo.expected_norm_sq),
                Some(demo.residual),
            )
        } else {
            (None, None, None)
        };

    let pass = match (witness_norm_sq, witness_expected) {
        (Some(n), Some(e)) => (n - e).abs() / e <= cfg.tol.witness_norm,
        _ => true,
    };

    println!(
        "{} on {}: (n+, n-) = ({}, {}) -> {}",
        cfg.op.to_ascii_uppercase(),
        cfg.domain,
        report.n_plus,
        report.n_minus,
        report.verdict.as_str()
    );

    let mut csv = CsvWriter::create(
        &out_path(&cfg.out_dir, "deficiency", "csv")?,
        &[
            "op",
            "domain",
            "hbar",
            "gamma",
            "n_plus",
            "n_minus",
            "verdict",
            "witness_norm_sq",
        ],
    )?;
    csv.row(&[
        Cell::S(cfg.op.to_ascii_uppercase()),
        Cell::S(cfg.domain.clone()),
        Cell::F(cfg.hbar),
        Cell::F(cfg.gamma),
        Cell::I(report.n_plus as i64),
        Cell::I(report.n_minus as i64),
        Cell::S(report.verdict.as_str().to_string()),
        Cell::F(report.witness_norms_sq.first().copied().unwrap_or(f64::NAN)),
    ])?;
    csv.finish()?;

    write_json(
        &out_path(&cfg.out_dir, "deficiency", "json")?,
        &DeficiencySummary {
            n_plus: report.n_plus,
            n_minus: report.n_minus,
            verdict: report.verdict.as_str().to_string(),
            op: cfg.op.to_ascii_uppercase(),
            domain: cfg.domain.clone(),
            hbar: cfg.hbar,
            gamma: cfg.gamma,
            witness_norm_sq,
            witness_norm_expected: witness_expected,
            eigen_residual: residual,
            pass,
        },
    )?;
    Ok(pass)
}

#[derive(Serialize)]
struct DeficiencySweepSummary {
    command: &'static str,
    rows: usize,
    mismatches: Vec<String>,
    pass: bool,
}

/// The full verdict table: P and D over domains, hbar and γ sweeps, plus
/// the contact-transformed operators.
fn run_deficiency_sweep(cfg: &RunConfig) -> Result<bool> {
    let mut csv = CsvWriter::create(
        &out_path(&cfg.out_dir, "deficiency", "csv")?,
        &[
            "op",
            "domain",
            "hbar",
            "gamma",
            "n_plus",
            "n_minus",
            "verdict",
            "witness_norm_sq",
        ],
    )?;
    let mut mismatches = Vec::new();
    let mut rows = 0usize;

    let mut emit = |csv: &mut CsvWriter,
                    op: &str,
                    domain: &str,
                    hbar: f64,
                    gamma: f64,
                    report: &equant::selfadjoint::DeficiencyReport,
                    expect: (usize, usize)|
     -> Result<()> {
        rows += 1;
        if (report.n_plus, report.n_minus) != expect {
            mismatches.push(format!(
                "{op} on {domain} (hbar {hbar}, gamma {gamma}): ({}, {}) expected {:?}",
                report.n_plus, report.n_minus, expect
            ));
        }
        csv.row(&[
            Cell::S(op.into()),
            Cell::S(domain.into()),
            Cell::F(hbar),
            Cell::F(gamma),
            Cell::I(report.n_plus as i64),
            Cell::I(report.n_minus as i64),
            Cell::S(report.verdict.as_str().to_string()),
            Cell::F(report.witness_norms_sq.first().copied().unwrap_or(f64::NAN)),
        ])?;
        Ok(())
    };

    for &hbar in &[0.5, 1.0, 2.0] {
        for &gamma in &[0.0, 1.0, 1e3] {
            let r = deficiency_indices(
                OperatorKind::MomentumP,
                Domain::HalfLine { origin: -gamma },
                hbar,
            )?;
            emit(&mut csv, "P", "halfline", hbar, gamma, &r, (1, 0))?;
        }
        let r = deficiency_indices(OperatorKind::MomentumP, Domain::FullLine, hbar)?;
        emit(&mut csv, "P", "fullline", hbar, 0.0, &r, (0, 0))?;
        let r = deficiency_indices(OperatorKind::DilationD, Domain::half_line(), hbar)?;
        emit(&mut csv, "D", "halfline", hbar, 0.0, &r, (0, 0))?;

        for case in quantum_transform_diagnosis(hbar)? {
            let expect = if case.label == "Pstar=-Q" {
                (0, 0)
            } else {
                (1, 0)
            };
            emit(
                &mut csv,
                case.label,
                "halfline",
                hbar,
                0.0,
                &case.report,
                expect,
            )?;
        }
    }
    csv.finish()?;

    let pass = mismatches.is_empty();
    write_json(
        &out_path(&cfg.out_dir, "deficiency", "json")?,
        &DeficiencySweepSummary {
            command: "deficiency",
            rows,
            mismatches: mismatches.clone(),
            pass,
        },
    )?;
    if !pass {
        for m in &mismatches {
            eprintln!("deficiency sweep mismatch: {m}");
        }
    }
    Ok(pass)
}

#[derive(Serialize)]
struct CriterionJson {
    id: usize,
    name: String,
    measured: f64,
    threshold: f64,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct VerifyAllSummary {
    command: &'static str,
    criteria: Vec<CriterionJson>,
    command_runs: std::collections::BTreeMap<&'static str, bool>,
    pass: bool,
}

/// Run the whole verification suite plus every subcommand's default
/// experiment, printing one line per criterion.
pub fn run_verify_all(cfg: &RunConfig) -> Result<bool> {
    let results = checks::run_all(&cfg.tol)?;
    for r in &results {
        println!("{}", r.status_line());
    }

    // default experiments, inheriting only output/tolerance settings
    let mut sub = RunConfig {
        out_dir: cfg.out_dir.clone(),
        threads: cfg.threads,
        tol: cfg.tol,
        ..RunConfig::default()
    };
    let mut command_runs = std::collections::BTreeMap::new();
    command_runs.insert("symbol", run_symbol(&sub)?);
    command_runs.insert("metric", run_metric(&sub)?);
    sub.family = FamilyKind::Affine;
    command_runs.insert("curvature", run_curvature(&sub)?);
    sub.family = FamilyKind::Canonical;
    command_runs.insert("action", run_action(&sub)?);
    command_runs.insert("transform", run_transform(&sub)?);
    sub.sweep = true;
    command_runs.insert("deficiency", run_deficiency(&sub)?);

    for (cmd, ok) in &command_runs {
        println!("[{}] command {}", if *ok { "PASS" } else { "FAIL" }, cmd);
    }

    let mut csv = CsvWriter::create(
        &out_path(&cfg.out_dir, "verify-all", "csv")?,
        &["criterion", "name", "measured", "threshold", "pass"],
    )?;
    for r in &results {
        csv.row(&[
            Cell::I(r.id as i64),
            Cell::S(r.name.to_string()),
            Cell::F(r.measured),
            Cell::F(r.threshold),
            Cell::S(r.passed.to_string()),
        ])?;
    }
    csv.finish()?;

    let pass = results.iter().all(|r| r.passed) && command_runs.values().all(|&v| v);
    write_json(
        &out_path(&cfg.out_dir, "verify-all", "json")?,
        &VerifyAllSummary {
            command: "verify-all",
            criteria: results
                .iter()
                .map(|r| CriterionJson {
                    id: r.id,
                    name: r.name.to_string(),
                    measured: r.measured,
                    threshold: r.threshold,
                    passed: r.passed,
                    detail: r.detail.clone(),
                })
                .collect(),
            command_runs,
            pass,
        },
    )?;
    Ok(pass)
}
