//! Command-line front end. Each command reads one experiment config and
//! writes CSV/JSON artifacts to the output directory.
//!
//! Exit codes: 0 success, 1 solve or I/O failure, 2 usage or config error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{ConfigError, Experiment};
use crate::experiments::{iteration_sweep, prepare, refinement_study, run, strength_study, ExperimentError};
use crate::postprocess::flag_band;
use crate::solvers::Method;

/// Environment variable overriding the output directory (below `--out`).
pub const OUT_ENV: &str = "IBDL_OUT";

/// Boundaries spanning fewer grid cells than this are reported as under-resolved.
const MIN_CELLS_ACROSS: f64 = 16.0;

#[derive(Debug, Parser)]
#[command(name = "ibdl", version, about = "Immersed boundary double layer solvers and studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve at the first grid size; writes solution.csv and report.json.
    Solve(CommonArgs),
    /// Krylov iteration counts over grid sizes and spacing ratios.
    Iters(CommonArgs),
    /// Refinement study against the exact solution.
    Refine(CommonArgs),
    /// Boundary density convergence against the boundary element reference.
    Strength(CommonArgs),
    /// Interior and band masks at the first grid size.
    Flag(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Strict(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

type Handler = fn(&Experiment, &Path) -> Result<(), CliError>;

fn dispatch(command: Command) -> Result<(), CliError> {
    let (args, f): (CommonArgs, Handler) = match command {
        Command::Solve(a) => (a, cmd_solve),
        Command::Iters(a) => (a, cmd_iters),
        Command::Refine(a) => (a, cmd_refine),
        Command::Strength(a) => (a, cmd_strength),
        Command::Flag(a) => (a, cmd_flag),
    };
    let exp = Experiment::load(&args.config)?;
    if let Some(t) = args.threads {
        // a pool may already exist when called in-process; keep it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    let out = args
        .out
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .or_else(|| exp.config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out).map_err(|source| CliError::Io {
        path: out.clone(),
        source,
    })?;
    f(&exp, &out)
}

fn write(path: PathBuf, contents: &str) -> Result<(), CliError> {
    fs::write(&path, contents).map_err(|source| CliError::Io { path, source })
}

fn write_json(path: PathBuf, value: &serde_json::Value) -> Result<(), CliError> {
    write(
        path,
        &(serde_json::to_string_pretty(value).expect("serializable") + "\n"),
    )
}

/// Floats with 17 significant digits.
fn f(v: f64) -> String {
    format!("{v:.16e}")
}

fn cmd_solve(exp: &Experiment, out: &Path) -> Result<(), CliError> {
    let opts = exp.case(exp.sizes()[0]);
    let solved = run(&opts)?;
    let ev = solved.evaluate_default()?;
    let p = &solved.prepared;
    let n = p.grid.n();
    let mut csv = String::from("x,y,u,inside,band\n");
    for (idx, v) in ev.field.values().iter().enumerate() {
        let [x, y] = p.grid.coords(idx % n, idx / n);
        let inside = p.mask.flags()[idx] as u8;
        let band = ev.band.flags()[idx] as u8;
        let _ = writeln!(csv, "{},{},{},{inside},{band}", f(x), f(y), f(*v));
    }
    write(out.join("solution.csv"), &csv)?;
    let r = &solved.report;
    write_json(
        out.join("report.json"),
        &json!({
            "problem_id": exp.problem.as_str(),
            "method": opts.method,
            "n": n,
            "boundary_points": p.boundary.len(),
            "iterations": r.iterations,
            "residual": r.residual,
            "converged": r.converged,
            "linf": ev.norms.linf,
            "l2": ev.norms.l2,
            "boundary_linf": ev.boundary_error,
            "m1": opts.m1(),
            "m2": opts.m2(),
            "fallbacks": ev.fallbacks,
            "rhs_mean": p.rhs_mean,
            "seconds": r.wall_time.as_secs_f64(),
            "warnings": r.warnings,
        }),
    )?;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{} {:?} N={} iterations={} linf={:.3e} l2={:.3e}",
        exp.problem, opts.method, n, r.iterations, ev.norms.linf, ev.norms.l2
    );
    Ok(())
}

fn cmd_iters(exp: &Experiment, out: &Path) -> Result<(), CliError> {
    let ratios = exp.ratios();
    let mut csv = String::from("method,n,dx");
    for r in &ratios {
        let _ = write!(csv, ",ratio_{r}");
    }
    csv.push('\n');
    for method in exp.methods() {
        let base = crate::experiments::CaseOptions {
            method,
            ..exp.case(exp.sizes()[0])
        };
        let cells = iteration_sweep(&base, exp.sizes(), &ratios)?;
        println!("{method:?}");
        for (row, &n) in cells.chunks(ratios.len()).zip(exp.sizes()) {
            let dx = grid_dx(exp, n);
            let entries: Vec<String> = row
                .iter()
                .map(|c| c.iterations.map_or_else(|| "max+".to_string(), |i| i.to_string()))
                .collect();
            let name = match method {
                Method::Ibsl => "ibsl",
                Method::Ibdl => "ibdl",
            };
            let _ = writeln!(csv, "{name},{n},{},{}", f(dx), entries.join(","));
            println!("  N={n:<5} {}", entries.join("  "));
        }
    }
    write(out.join("iterations.csv"), &csv)
}

fn grid_dx(exp: &Experiment, n: usize) -> f64 {
    let (_, _, half) = crate::experiments::problem_geometry(exp.problem);
    2.0 * exp.config.box_half_width.unwrap_or(half) / n as f64
}

fn cmd_refine(exp: &Experiment, out: &Path) -> Result<(), CliError> {
    let study = refinement_study(&exp.case(exp.sizes()[0]), exp.sizes())?;
    let neumann = study.boundary_slope.is_some();
    let mut csv = String::from("n,linf,l2,iterations,runtime,m1,m2,fallbacks");
    if neumann {
        csv.push_str(",boundary_linf");
    }
    csv.push('\n');
    for r in &study.rows {
        let _ = write!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.n,
            f(r.linf),
            f(r.l2),
            r.iterations,
            f(r.runtime),
            r.m1,
            r.m2,
            r.fallbacks
        );
        if let Some(b) = r.boundary_linf {
            let _ = write!(csv, ",{}", f(b));
        }
        csv.push('\n');
        println!(
            "N={:<5} linf={:.3e} l2={:.3e} iterations={}",
            r.n, r.linf, r.l2, r.iterations
        );
    }
    write(out.join("refinement.csv"), &csv)?;
    write_json(
        out.join("refinement.json"),
        &serde_json::to_value(&study).expect("serializable"),
    )?;
    println!("linf slope {:.3}, l2 slope {:.3}", study.linf_slope, study.l2_slope);
    if let Some(s) = study.boundary_slope {
        println!("boundary value slope {s:.3}");
    }
    Ok(())
}

fn cmd_strength(exp: &Experiment, out: &Path) -> Result<(), CliError> {
    let study = strength_study(&exp.case(exp.sizes()[0]), exp.sizes())?;
    let mut csv = String::from("n,theta,density,bem_reference,normalized_error\n");
    for row in &study.rows {
        for ((t, d), r) in row.theta.iter().zip(&row.density).zip(&row.reference) {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                row.n,
                f(*t),
                f(*d),
                f(*r),
                f(row.normalized_error)
            );
        }
        println!(
            "N={:<5} normalized error {:.3e} iterations {}",
            row.n, row.normalized_error, row.iterations
        );
    }
    write(out.join("strength.csv"), &csv)?;
    let errors: Vec<_> = study
        .rows
        .iter()
        .map(|r| json!({"n": r.n, "normalized_error": r.normalized_error, "iterations": r.iterations}))
        .collect();
    write_json(
        out.join("strength.json"),
        &json!({
            "errors": errors,
            "slope": study.slope,
            "reference_elements": study.reference_elements,
            "reference_change": study.reference_change,
            "seconds": study.runtime,
        }),
    )?;
    println!(
        "slope {:.3} (reference: {} elements)",
        study.slope, study.reference_elements
    );
    Ok(())
}

fn cmd_flag(exp: &Experiment, out: &Path) -> Result<(), CliError> {
    let opts = exp.case(exp.sizes()[0]);
    let p = prepare(&opts)?;
    let band = flag_band(&p.boundary, &p.mask, opts.m1());
    let n = p.grid.n();
    let mut csv = String::from("x,y,inside,band\n");
    for idx in 0..p.grid.len() {
        let [x, y] = p.grid.coords(idx % n, idx / n);
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            f(x),
            f(y),
            p.mask.flags()[idx] as u8,
            band.flags()[idx] as u8
        );
    }
    write(out.join("mask.csv"), &csv)?;
    println!(
        "N={n} boundary points={} domain cells={} band cells={}",
        p.boundary.len(),
        p.mask.count(),
        band.count()
    );
    let pts = p.boundary.points();
    let extent = |c: usize| {
        let lo = pts.iter().map(|q| q[c]).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|q| q[c]).fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let across = extent(0).min(extent(1)) / p.grid.dx();
    if across < MIN_CELLS_ACROSS {
        let msg = format!("boundary is under-resolved: it spans {across:.1} grid cells (< {MIN_CELLS_ACROSS})");
        eprintln!("warning: {msg}");
        if exp.config.strict {
            return Err(CliError::Strict(msg));
        }
    }
    Ok(())
}
