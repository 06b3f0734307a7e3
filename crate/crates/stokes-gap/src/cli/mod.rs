//! Command-line front end: argument parsing, orchestration and persistence.

pub mod plot;

use crate::asymptotics::{
    eps_range, fit_rate, higher_dim_check, predicted_rate, run_sweep, verify_aux, AuxCheckRow, RateFit,
    RateModel, SweepRow,
};
use crate::config::{check_eps, load_config, RunConfig, SolveMode};
use crate::error::{Error, Result};
use crate::geometry::{GapGeometry, Part, Vec3};
use crate::rigid_system::{two_route, M3};
use crate::stokes_mfs::{eval_flow, BoundaryCondition, Discretization, MfsSolver, SurfaceData, ANTISYM_DEMO};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "STOKES_GAP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "stokes-gap", version, about = "Stokes flow between two nearly touching rigid inclusions")]
pub struct Cli {
    /// Key-value configuration file with [geometry], [mesh], [solver] and [experiment] sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the closed-form auxiliary fields in the neck.
    ///
    /// CSV columns: d,i,alpha,eps,max_div,bc_err,cancel_err,env_const
    /// (cancel_err is empty where no identity applies).
    VerifyAux(AuxArgs),
    /// Auxiliary-field checks in dimension 4 or 5 (same CSV columns as verify-aux).
    HigherDim(AuxArgs),
    /// Solve one boundary-value problem at a single gap.
    ///
    /// Output CSV columns: line,x1,x2,x3,u1,u2,u3,p,grad_norm with `line` = axis
    /// (33 points on x' = 0 across the gap) or neck (33 points on x2 = x3 = 0, 0 <= x1 <= R).
    /// Boundary-data files (`--phi file`) have columns surface,node_index,u1,u2,u3 with
    /// surface in {D1, D2, outer}; `--mesh-out` lists the nodes as
    /// surface,node_index,x1,x2,x3,n1,n2,n3,weight.
    Solve(SolveArgs),
    /// Rigid constants by both routes.
    ///
    /// CSV columns: eps,alpha,C1,C2,C1_minus_C2,a11_diag,route_gap.
    /// `--dump-coupling` writes the line `m,eps` followed by the 2m x 2m matrix, one row per line.
    Constants(ConstantsArgs),
    /// Gap sweep of the blow-up observables.
    ///
    /// CSV columns: eps,max_grad_segment,midpoint_stress,a11_1,..,a11_6,cdiff_1,..,cdiff_6,envelope_K,route_gap,bc_residual.
    /// Rows are appended as each gap finishes.
    Sweep(SweepArgs),
    /// Fit blow-up rates to a sweep CSV.
    ///
    /// Output columns: observable,model,exponent,log_power,r_squared,band_min,band_max,band_ratio,points.
    Fit(FitArgs),
    /// Log-log SVG chart per observable of a sweep CSV, with the predicted rate as a guide.
    Plot(PlotArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct AuxArgs {
    /// Dimension (3 for verify-aux, 4 or 5 for higher-dim).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Gap values.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-3, 1e-4])]
    pub eps: Vec<f64>,
    /// Pseudo-random neck points per (eps, i, alpha).
    #[arg(long, default_value_t = 10_000)]
    pub points: usize,
    /// Overrides solver.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Dirichlet,
    Constrained,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    #[arg(long)]
    pub eps: Option<f64>,
    /// psi1..psi6, antisym-demo or file.
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long)]
    pub phi_file: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub mesh_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ConstantsArgs {
    /// One or more gaps; defaults to geometry.eps.
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long)]
    pub phi_file: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Coupling matrix dump (one file; the last gap when several are given).
    #[arg(long)]
    pub dump_coupling: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub eps_from: Option<f64>,
    #[arg(long)]
    pub eps_to: Option<f64>,
    #[arg(long)]
    pub eps_count: Option<usize>,
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long)]
    pub phi_file: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelArg {
    /// Log power pinned to the predicted value.
    Predicted,
    Power,
    PowerLog,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    /// Sweep CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Observables to fit; defaults to every column with a predicted rate.
    #[arg(long, value_delimiter = ',')]
    pub observable: Vec<String>,
    #[arg(long, value_enum, default_value_t = ModelArg::Predicted)]
    pub model: ModelArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PlotArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub observable: Vec<String>,
    /// Directory for `<observable>.svg`; defaults to experiment.out_dir.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Parses arguments, runs the command and maps failures to exit codes.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match configure_threads().and_then(|_| run(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Applies `STOKES_GAP_THREADS` to the global worker pool. Dense factorizations
/// always run sequentially so results do not depend on the thread count.
pub fn configure_threads() -> Result<()> {
    faer::set_global_parallelism(faer::Par::Seq);
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| Error::Validation(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    match &cli.command {
        Command::VerifyAux(a) => cmd_verify_aux(&cfg, a, cli.config.as_deref()),
        Command::HigherDim(a) => cmd_higher_dim(&cfg, a, cli.config.as_deref()),
        Command::Solve(a) => cmd_solve(&cfg, a, cli.config.as_deref()),
        Command::Constants(a) => cmd_constants(&cfg, a, cli.config.as_deref()),
        Command::Sweep(a) => cmd_sweep(&cfg, a, cli.config.as_deref()),
        Command::Fit(a) => cmd_fit(a),
        Command::Plot(a) => cmd_plot(&cfg, a),
    }
}

/// Accepts `psi1`..`psi6`, `antisym-demo` and `file`.
pub fn phi_selector_ok(s: &str) -> Result<()> {
    if s == "antisym-demo" || s == "file" || psi_index(s).is_some() {
        Ok(())
    } else {
        Err(Error::Validation(format!("phi: expected psi1..psi6, antisym-demo or file, got `{s}`")))
    }
}

fn psi_index(s: &str) -> Option<usize> {
    s.strip_prefix("psi").and_then(|k| k.parse().ok()).filter(|k| (1..=M3).contains(k))
}

/// Boundary data for a selector; `file` reads nodal data matching the mesh of `disc`.
pub fn boundary_from_selector(sel: &str, file: Option<&Path>, disc: Option<&Discretization>) -> Result<BoundaryCondition> {
    phi_selector_ok(sel)?;
    if sel == "file" {
        let path = file.ok_or_else(|| Error::Validation("phi = file needs a boundary-data file (--phi-file)".into()))?;
        let disc = disc.ok_or_else(|| Error::Validation("phi = file needs a discretized scene".into()))?;
        return read_boundary_file(path, disc);
    }
    let outer = match psi_index(sel) {
        Some(a) => SurfaceData::Rigid(a),
        None => SurfaceData::Linear(ANTISYM_DEMO),
    };
    Ok(BoundaryCondition::outer(outer))
}

/// Reads `surface,node_index,u1,u2,u3` rows. Every listed surface must cover all of its nodes;
/// surfaces not listed carry zero data.
pub fn read_boundary_file(path: &Path, disc: &Discretization) -> Result<BoundaryCondition> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != ["surface", "node_index", "u1", "u2", "u3"] {
        return Err(Error::Validation(format!(
            "{}: expected header surface,node_index,u1,u2,u3, got {}",
            path.display(),
            header.join(",")
        )));
    }
    let mut data: BTreeMap<Part, Vec<Option<Vec3>>> = BTreeMap::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let bad = |msg: String| Error::Parse { line, msg: format!("{}: {msg}", path.display()) };
        let part = Part::parse(&rec[0]).ok_or_else(|| bad(format!("unknown surface `{}`", &rec[0])))?;
        let s = disc.surface_index(part).ok_or_else(|| bad(format!("surface `{}` not in this scene", &rec[0])))?;
        let n_nodes = disc.meshes[s].nodes.len();
        let idx: usize = rec[1].parse().map_err(|_| bad(format!("invalid node index `{}`", &rec[1])))?;
        if idx >= n_nodes {
            return Err(bad(format!("node index {idx} out of range (surface has {n_nodes} nodes)")));
        }
        let mut u = [0.0; 3];
        for c in 0..3 {
            u[c] = rec[2 + c].parse().map_err(|_| bad(format!("invalid value `{}`", &rec[2 + c])))?;
        }
        let slot = data.entry(part).or_insert_with(|| vec![None; n_nodes]);
        if slot[idx].replace(u).is_some() {
            return Err(bad(format!("duplicate node {idx}")));
        }
    }
    let mut bc = BoundaryCondition::zero();
    for (part, vals) in data {
        let missing = vals.iter().filter(|v| v.is_none()).count();
        if missing > 0 {
            return Err(Error::Validation(format!("{}: surface {} misses {missing} nodes", path.display(), part.name())));
        }
        *bc.part_mut(part) = SurfaceData::Nodal(vals.into_iter().flatten().collect());
    }
    Ok(bc)
}

fn constrained_phi(bc: BoundaryCondition) -> Result<SurfaceData> {
    if !bc.d1.is_zero() || !bc.d2.is_zero() {
        return Err(Error::Validation(
            "constrained problems take data on the outer surface only; the inclusions move rigidly".into(),
        ));
    }
    Ok(bc.outer)
}

fn default_out(cfg: &RunConfig, given: &Option<PathBuf>, name: &str) -> PathBuf {
    given.clone().unwrap_or_else(|| cfg.experiment.out_dir.join(name))
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

#[derive(Serialize)]
struct Manifest<'a, A: Serialize, R: Serialize> {
    command: &'a str,
    package: &'static str,
    version: &'static str,
    config_file: Option<&'a Path>,
    config: &'a RunConfig,
    args: &'a A,
    threads: usize,
    reported_neck_radius: f64,
    seconds: f64,
    results: R,
}

/// Writes `<stem>.manifest.json` next to `out`.
fn write_manifest<A: Serialize, R: Serialize>(
    out: &Path,
    command: &str,
    config_file: Option<&Path>,
    cfg: &RunConfig,
    args: &A,
    start: Instant,
    results: R,
) -> Result<PathBuf> {
    let m = Manifest {
        command,
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config_file,
        config: cfg,
        args,
        threads: rayon::current_num_threads(),
        reported_neck_radius: cfg.geometry.r_neck,
        seconds: start.elapsed().as_secs_f64(),
        results,
    };
    let path = out.with_extension("manifest.json");
    ensure_parent(&path)?;
    let text = serde_json::to_string_pretty(&m).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    std::fs::write(&path, text + "\n")?;
    Ok(path)
}

fn aux_csv_record(r: &AuxCheckRow) -> Vec<String> {
    vec![
        r.d.to_string(),
        r.i.to_string(),
        r.alpha.to_string(),
        fmt(r.eps),
        fmt(r.max_divergence),
        fmt(r.max_boundary_error),
        r.max_cancellation.map(fmt).unwrap_or_default(),
        fmt(r.envelope_sup),
    ]
}

fn write_aux_csv(path: &Path, rows: &[AuxCheckRow]) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["d", "i", "alpha", "eps", "max_div", "bc_err", "cancel_err", "env_const"])?;
    for r in rows {
        w.write_record(aux_csv_record(r))?;
    }
    w.flush()?;
    Ok(())
}

fn print_aux_table(rows: &[AuxCheckRow]) {
    println!("{:>2} {:>2} {:>5} {:>9} {:>10} {:>10} {:>10} {:>10}", "d", "i", "alpha", "eps", "max_div", "bc_err", "cancel", "env");
    for r in rows {
        let c = r.max_cancellation.map(|v| format!("{v:10.2e}")).unwrap_or_else(|| format!("{:>10}", "-"));
        println!(
            "{:>2} {:>2} {:>5} {:>9.1e} {:>10.2e} {:>10.2e} {c} {:>10.4}",
            r.d, r.i, r.alpha, r.eps, r.max_divergence, r.max_boundary_error, r.envelope_sup
        );
    }
}

/// Acceptance thresholds of the auxiliary checks: divergence, boundary error, cancellation.
pub fn aux_failures(rows: &[AuxCheckRow], div_tol: f64, bc_tol: f64, cancel_tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    for r in rows {
        let tag = format!("d={} eps={:e} i={} alpha={}", r.d, r.eps, r.i, r.alpha);
        if !(r.max_divergence < div_tol) {
            out.push(format!("{tag}: divergence {:.3e}", r.max_divergence));
        }
        if !(r.max_boundary_error < bc_tol) {
            out.push(format!("{tag}: boundary error {:.3e}", r.max_boundary_error));
        }
        if let Some(c) = r.max_cancellation.filter(|c| !(*c < cancel_tol)) {
            out.push(format!("{tag}: cancellation {c:.3e}"));
        }
    }
    out
}

fn eps_list_ok(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::Validation("eps list is empty".into()));
    }
    eps.iter().try_for_each(|e| check_eps("eps", *e))
}

fn cmd_verify_aux(cfg: &RunConfig, a: &AuxArgs, cfg_path: Option<&Path>) -> Result<()> {
    let start = Instant::now();
    let d = a.dim.unwrap_or(3);
    if d != 3 {
        return Err(Error::Validation(format!("verify-aux covers d = 3; use higher-dim for d = {d}")));
    }
    eps_list_ok(&a.eps)?;
    let rows = verify_aux(d, &a.eps, a.points, a.seed.unwrap_or(cfg.solver.seed), cfg.solver.mu)?;
    print_aux_table(&rows);
    let out = default_out(cfg, &a.out, "verify_aux.csv");
    write_aux_csv(&out, &rows)?;
    let failures = aux_failures(&rows, 1e-10, 1e-12, 1e-10);
    write_manifest(&out, "verify-aux", cfg_path, cfg, a, start, &failures)?;
    finish_checks(failures)
}

fn cmd_higher_dim(cfg: &RunConfig, a: &AuxArgs, cfg_path: Option<&Path>) -> Result<()> {
    let start = Instant::now();
    let d = a.dim.unwrap_or(4);
    eps_list_ok(&a.eps)?;
    let rep = higher_dim_check(d, &a.eps, a.points, a.seed.unwrap_or(cfg.solver.seed))?;
    print_aux_table(&rep.rows);
    println!("envelope drift (max/min sup across eps):");
    for (i, alpha, r) in &rep.envelope_drift {
        println!("  i={i} alpha={alpha}: {r:.4}");
    }
    for u in &rep.unimplemented {
        println!("unimplemented: {u}");
    }
    let out = default_out(cfg, &a.out, &format!("higher_dim_{d}.csv"));
    write_aux_csv(&out, &rep.rows)?;
    let failures = aux_failures(&rep.rows, 1e-9, 1e-12, 1e-10);
    write_manifest(&out, "higher-dim", cfg_path, cfg, a, start, (&rep.envelope_drift, &rep.unimplemented, &failures))?;
    finish_checks(failures)
}

fn finish_checks(failures: Vec<String>) -> Result<()> {
    if failures.is_empty() {
        println!("all checks passed");
        Ok(())
    } else {
        Err(Error::Numerical(format!("{} checks failed, first: {}", failures.len(), failures[0])))
    }
}

fn geometry_at(cfg: &RunConfig, eps: Option<f64>) -> Result<GapGeometry> {
    let mut g = cfg.geometry.clone();
    if let Some(e) = eps {
        check_eps("eps", e)?;
        g.eps = e;
    }
    g.validated()
}

fn write_mesh(path: &Path, disc: &Discretization) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["surface", "node_index", "x1", "x2", "x3", "n1", "n2", "n3", "weight"])?;
    for m in &disc.meshes {
        for k in 0..m.nodes.len() {
            let mut rec = vec![m.part.name().to_string(), k.to_string()];
            rec.extend(m.nodes[k].iter().chain(&m.normals[k]).map(|v| fmt(*v)));
            rec.push(fmt(m.weights[k]));
            w.write_record(rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Axis and neck sample lines of a gap solution.
pub fn sample_lines(geom: &GapGeometry) -> Vec<(&'static str, Vec3)> {
    let mut pts = Vec::new();
    for k in 0..33 {
        pts.push(("axis", [0.0, 0.0, -0.5 * geom.eps + geom.eps * k as f64 / 32.0]));
    }
    for k in 0..33 {
        pts.push(("neck", [geom.r_neck * k as f64 / 32.0, 0.0, 0.0]));
    }
    pts
}

#[derive(Serialize)]
struct SolveSummary {
    mode: SolveMode,
    sources: usize,
    residual_max: f64,
    residual_relative: f64,
    held_out: bool,
    converged: bool,
    constants: Option<Vec<[f64; 6]>>,
    force_torque_residual: Option<Vec<f64>>,
    max_condition: f64,
    truncated: bool,
    warnings: Vec<String>,
}

fn cmd_solve(cfg: &RunConfig, a: &SolveArgs, cfg_path: Option<&Path>) -> Result<()> {
    let start = Instant::now();
    let geom = geometry_at(cfg, a.eps)?;
    let mode = match a.mode {
        Some(ModeArg::Dirichlet) => SolveMode::Dirichlet,
        Some(ModeArg::Constrained) => SolveMode::Constrained,
        None => cfg.experiment.mode,
    };
    let sel = a.phi.clone().unwrap_or_else(|| cfg.experiment.phi.clone());
    let file = a.phi_file.clone().or_else(|| cfg.experiment.phi_file.clone());
    let solver = MfsSolver::gap(&geom, cfg.solver.clone())?;
    if let Some(p) = &a.mesh_out {
        write_mesh(p, &solver.disc)?;
    }
    let bc = boundary_from_selector(&sel, file.as_deref(), Some(&solver.disc))?;
    let (solution, residual, converged, diagnostics, constants, ft) = match mode {
        SolveMode::Dirichlet => {
            let s = solver.solve_dirichlet(&bc)?;
            (s.solution, s.residual, s.converged, s.diagnostics, None, None)
        }
        SolveMode::Constrained => {
            let s = solver.solve_constrained(&constrained_phi(bc)?)?;
            (s.solution, s.residual, s.converged, s.diagnostics, Some(s.constants), Some(s.force_torque_residual))
        }
    };
    let out = default_out(cfg, &a.out, "solve.csv");
    ensure_parent(&out)?;
    let mut w = csv::Writer::from_path(&out)?;
    w.write_record(["line", "x1", "x2", "x3", "u1", "u2", "u3", "p", "grad_norm"])?;
    for (line, x) in sample_lines(&geom) {
        let f = eval_flow(&solution, &x)?;
        let g = f.grad.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        let mut rec = vec![line.to_string()];
        rec.extend(x.iter().chain(&f.velocity).map(|v| fmt(*v)));
        rec.push(fmt(f.pressure));
        rec.push(fmt(g));
        w.write_record(rec)?;
    }
    w.flush()?;

    println!("eps = {}  mode = {:?}  phi = {sel}", geom.eps, mode);
    println!("boundary residual (held-out): {:.3e} (relative {:.3e})", residual.max, residual.relative_max());
    if let Some(c) = &constants {
        for (i, ci) in c.iter().enumerate() {
            let row: Vec<String> = ci.iter().map(|v| format!("{v:.9e}")).collect();
            println!("C_{}: {}", i + 1, row.join(" "));
        }
    }
    let summary = SolveSummary {
        mode,
        sources: solver.disc.sources.len(),
        residual_max: residual.max,
        residual_relative: residual.relative_max(),
        held_out: residual.held_out,
        converged,
        constants,
        force_torque_residual: ft,
        max_condition: diagnostics.iter().map(|d| d.1.cond_estimate).fold(0.0, f64::max),
        truncated: diagnostics.iter().any(|d| d.1.truncated),
        warnings: solver.disc.warnings.clone(),
    };
    write_manifest(&out, "solve", cfg_path, cfg, a, start, &summary)?;
    if !converged {
        return Err(Error::Numerical(format!(
            "boundary residual {:.3e} exceeds tolerance {:.1e}",
            residual.relative_max(),
            cfg.solver.tol
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct ConstantsSummary {
    eps: f64,
    direct: [[f64; 6]; 2],
    decomposition: [[f64; 6]; 2],
    route_gap: f64,
    symmetry_defect: f64,
    a11_eigenvalues: Vec<f64>,
    held_out_residual: f64,
    converged: bool,
}

fn cmd_constants(cfg: &RunConfig, a: &ConstantsArgs, cfg_path: Option<&Path>) -> Result<()> {
    let start = Instant::now();
    let eps: Vec<f64> = if a.eps.is_empty() { vec![cfg.geometry.eps] } else { a.eps.clone() };
    eps_list_ok(&eps)?;
    let sel = a.phi.clone().unwrap_or_else(|| cfg.experiment.phi.clone());
    let file = a.phi_file.clone().or_else(|| cfg.experiment.phi_file.clone());
    let out = default_out(cfg, &a.out, "constants.csv");
    ensure_parent(&out)?;
    let mut w = csv::Writer::from_path(&out)?;
    w.write_record(["eps", "alpha", "C1", "C2", "C1_minus_C2", "a11_diag", "route_gap"])?;
    let mut summaries = Vec::new();
    let mut unconverged = Vec::new();
    for &e in &eps {
        let geom = geometry_at(cfg, Some(e))?;
        let solver = MfsSolver::gap(&geom, cfg.solver.clone())?;
        let phi = constrained_phi(boundary_from_selector(&sel, file.as_deref(), Some(&solver.disc))?)?;
        let tr = two_route(&solver, &phi, cfg.experiment.sanity_bound)?;
        let c = &tr.direct.constants;
        let diag = tr.coupling.a11_diag();
        for k in 0..M3 {
            w.write_record([
                fmt(e),
                (k + 1).to_string(),
                fmt(c[0][k]),
                fmt(c[1][k]),
                fmt(c[0][k] - c[1][k]),
                fmt(diag[k]),
                fmt(tr.route_gap),
            ])?;
        }
        w.flush()?;
        println!("eps = {e:.4e}: route gap {:.3e}, held-out residual {:.3e}", tr.route_gap, tr.direct.residual.max);
        if let Some(p) = &a.dump_coupling {
            ensure_parent(p)?;
            let mut text = format!("{},{}\n", tr.coupling.m, fmt(e));
            for row in &tr.coupling.a {
                text.push_str(&row.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(","));
                text.push('\n');
            }
            std::fs::write(p, text)?;
        }
        if !tr.direct.converged {
            unconverged.push(e);
        }
        summaries.push(ConstantsSummary {
            eps: e,
            direct: [c[0], c[1]],
            decomposition: tr.decomposition.c,
            route_gap: tr.route_gap,
            symmetry_defect: tr.coupling.symmetry_defect,
            a11_eigenvalues: tr.coupling.a11_eigenvalues.clone(),
            held_out_residual: tr.direct.residual.max,
            converged: tr.direct.converged,
        });
    }
    write_manifest(&out, "constants", cfg_path, cfg, a, start, &summaries)?;
    if !unconverged.is_empty() {
        return Err(Error::Numerical(format!("constrained solve not converged at eps = {unconverged:?}")));
    }
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig, a: &SweepArgs, cfg_path: Option<&Path>) -> Result<()> {
    let start = Instant::now();
    let e = &cfg.experiment;
    let from = a.eps_from.unwrap_or(e.eps_from);
    let to = a.eps_to.unwrap_or(e.eps_to);
    let count = a.eps_count.unwrap_or(e.eps_count);
    check_eps("eps_from", from)?;
    check_eps("eps_to", to)?;
    if count == 0 {
        return Err(Error::Validation("eps_count must be >= 1".into()));
    }
    let sel = a.phi.clone().unwrap_or_else(|| e.phi.clone());
    let file = a.phi_file.clone().or_else(|| e.phi_file.clone());
    phi_selector_ok(&sel)?;
    let phi = if sel == "file" {
        let solver = MfsSolver::gap(&geometry_at(cfg, Some(from.max(to)))?, cfg.solver.clone())?;
        let phi = constrained_phi(boundary_from_selector(&sel, file.as_deref(), Some(&solver.disc))?)?;
        if count > 1 {
            return Err(Error::Validation("nodal boundary files fit a single mesh; sweep them one gap at a time".into()));
        }
        phi
    } else {
        constrained_phi(boundary_from_selector(&sel, None, None)?)?
    };
    let out = default_out(cfg, &a.out, "sweep.csv");
    ensure_parent(&out)?;
    let mut file_out = std::fs::File::create(&out)?;
    writeln!(file_out, "{}", SweepRow::csv_header().join(","))?;
    file_out.flush()?;
    let eps = eps_range(from, to, count);
    let rows = run_sweep(&cfg.geometry, &cfg.solver, &eps, &phi, e.sanity_bound, |row| {
        writeln!(file_out, "{}", row.csv_record().join(","))?;
        file_out.flush()?;
        match &row.error {
            Some(msg) => eprintln!("eps = {:.4e}: {msg}", row.eps),
            None => println!(
                "eps = {:.4e}: max_grad_segment {:.4e}, midpoint_stress {:.4e}, route_gap {:.2e} ({:.1} s)",
                row.eps, row.max_grad_segment, row.midpoint_stress, row.route_gap, row.seconds
            ),
        }
        Ok(())
    })?;
    write_manifest(&out, "sweep", cfg_path, cfg, a, start, &rows)?;
    let failed: Vec<f64> = rows.iter().filter(|r| r.error.is_some()).map(|r| r.eps).collect();
    if !failed.is_empty() {
        return Err(Error::Numerical(format!("sweep points failed at eps = {failed:?}")));
    }
    Ok(())
}

/// Columns of a sweep CSV keyed by header name; rows with non-finite eps are dropped.
pub fn read_sweep_csv(path: &Path) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("eps") {
        return Err(Error::Validation(format!("{}: first column must be eps", path.display())));
    }
    let mut cols: BTreeMap<String, Vec<f64>> = header.iter().map(|h| (h.clone(), Vec::new())).collect();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse { line: k + 2, msg: format!("{}: non-numeric field", path.display()) })?;
        if !vals[0].is_finite() {
            continue;
        }
        for (h, v) in header.iter().zip(vals) {
            cols.get_mut(h).expect("header column").push(v);
        }
    }
    Ok(cols)
}

fn fit_targets(cols: &BTreeMap<String, Vec<f64>>, requested: &[String]) -> Result<Vec<String>> {
    if requested.is_empty() {
        let header = SweepRow::csv_header();
        return Ok(header.into_iter().filter(|h| predicted_rate(h).is_some() && cols.contains_key(h)).collect());
    }
    for r in requested {
        if !cols.contains_key(r) || r == "eps" {
            return Err(Error::Validation(format!("unknown observable `{r}`")));
        }
    }
    Ok(requested.to_vec())
}

/// Fits one column; rows with non-finite or non-positive values are skipped.
pub fn fit_column(eps: &[f64], y: &[f64], name: &str, model: ModelArg) -> Result<RateFit> {
    let (e, v): (Vec<f64>, Vec<f64>) = eps.iter().zip(y).filter(|(_, v)| v.is_finite() && **v != 0.0).map(|(e, v)| (*e, v.abs())).unzip();
    let model = match model {
        ModelArg::Power => RateModel::Power,
        ModelArg::PowerLog => RateModel::PowerLog { t: None },
        ModelArg::Predicted => match predicted_rate(name) {
            Some((_, t)) if t != 0.0 => RateModel::PowerLog { t: Some(t) },
            _ => RateModel::Power,
        },
    };
    fit_rate(&e, &v, model)
}

fn cmd_fit(a: &FitArgs) -> Result<()> {
    let cols = read_sweep_csv(&a.input)?;
    let eps = cols["eps"].clone();
    let mut lines = vec!["observable,model,exponent,log_power,r_squared,band_min,band_max,band_ratio,points".to_string()];
    let mut failures = 0;
    for name in fit_targets(&cols, &a.observable)? {
        match fit_column(&eps, &cols[&name], &name, a.model) {
            Ok(f) => {
                let model = match f.model {
                    RateModel::Power => "power".to_string(),
                    RateModel::PowerLog { t: Some(_) } => "power_log_pinned".into(),
                    RateModel::PowerLog { t: None } => "power_log".into(),
                };
                lines.push(format!(
                    "{name},{model},{:.6},{:.6},{:.6},{},{},{:.6},{}",
                    f.exponent,
                    f.log_power,
                    f.r_squared,
                    fmt(f.band.0),
                    fmt(f.band.1),
                    f.band_ratio(),
                    f.points
                ));
            }
            Err(e) => {
                failures += 1;
                eprintln!("{name}: {e}");
            }
        }
    }
    let text = lines.join("\n") + "\n";
    print!("{text}");
    if let Some(p) = &a.out {
        ensure_parent(p)?;
        std::fs::write(p, &text)?;
    }
    if lines.len() == 1 && failures > 0 {
        return Err(Error::Validation("no observable could be fitted".into()));
    }
    Ok(())
}

fn cmd_plot(cfg: &RunConfig, a: &PlotArgs) -> Result<()> {
    let cols = read_sweep_csv(&a.input)?;
    let dir = a.out_dir.clone().unwrap_or_else(|| cfg.experiment.out_dir.clone());
    std::fs::create_dir_all(&dir)?;
    let names: Vec<String> = if a.observable.is_empty() {
        cols.keys().filter(|k| *k != "eps").cloned().collect()
    } else {
        fit_targets(&cols, &a.observable)?
    };
    for name in names {
        let svg = plot::loglog_svg(&name, &cols["eps"], &cols[&name], predicted_rate(&name));
        let path = dir.join(format!("{name}.svg"));
        std::fs::write(&path, svg)?;
        println!("{}", path.display());
    }
    Ok(())
}
