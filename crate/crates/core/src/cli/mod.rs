//! Command-line front end.
//!
//! A run is configured by an optional flat `key=value` file, overridden by
//! flags. Every command writes `<command>.csv` with the numbers and
//! `<command>.json` with the metadata (parameters, tolerances, version,
//! thread count, wall time) and the structured result. CSV bodies depend
//! only on the configuration: floats are printed in shortest round-trip
//! form and all parallel work is collected in index order.
//!
//! Exit status: 0 on success, 1 when the computation itself fails (no root,
//! stalled or unconverged descent, quadrature failure), 2 for usage and
//! configuration errors.

mod config;
mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Value};

pub use config::{load_config, read_entries, read_geometry, Command, Entries, Origin, RunConfig, KEYS};
pub use output::{format_float, Table};

use crate::diagnostics::{self, DiagnoseOptions};
use crate::functionals::{self, EvalOptions};
use crate::sets::{SetGeometry, StarShape2D};
use crate::shapeopt2d::{self, OptimizerOptions};
use crate::{onedim, Error};

/// Environment variable holding the worker thread count.
pub const THREADS_VAR: &str = "NLOK_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("{origin}: {msg}")]
    Parse { origin: Origin, msg: String },
    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { key: String, origin: Origin },
    #[error("invalid value for `{key}`: {msg}")]
    Range { key: String, msg: String },
    #[error("{0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Domain(Error),
    /// The run finished and wrote its files but did not reach its target.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) | CliError::Failed(_) => 1,
            _ => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams { key, msg } => CliError::Range { key: key.to_string(), msg },
            other => CliError::Domain(other),
        }
    }
}

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Nonlocal Ohta–Kawasaki energy: evaluation, diagnostics and critical points.
#[derive(Debug, Parser)]
#[command(name = "nlok", version)]
pub struct Args {
    /// Command to run; may instead be set as `command=` in the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// Flat key=value configuration file.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Override any configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Geometry JSON file.
    #[arg(long)]
    pub input: Option<String>,
    /// Initial shape for optimize2d (same as --input).
    #[arg(long)]
    pub init: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// Boundary nodes for planar sets.
    #[arg(long)]
    pub resolution: Option<String>,
    /// Highest Fourier mode kept by optimize2d.
    #[arg(long)]
    pub modes: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol: Option<String>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<String>,
}

impl Args {
    /// Config file entries overridden by the flags.
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        let mut e = match &self.config {
            Some(path) => read_entries(path)?,
            None => Entries::default(),
        };
        let mut flags = Entries::default();
        if let Some(c) = self.command {
            flags.insert("command", c.name(), Origin::Flag)?;
        }
        if self.input.is_some() && self.init.is_some() {
            return Err(CliError::Usage("give either --input or --init, not both".into()));
        }
        let named = [
            ("input", self.input.or(self.init)),
            ("out_dir", self.out),
            ("eps", self.eps),
            ("s", self.s),
            ("alpha", self.alpha),
            ("resolution", self.resolution),
            ("modes", self.modes),
            ("tol", self.tol),
            ("max_iter", self.max_iter),
        ];
        for (key, value) in named {
            if let Some(v) = value {
                flags.insert(key, &v, Origin::Flag)?;
            }
        }
        for a in &self.set {
            flags.insert_assignment(a)?;
        }
        e.merge(flags);
        RunConfig::from_entries(e)
    }
}

/// Parse arguments, configure the thread pool, run, and return the exit
/// status. Errors go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = configure_threads().and_then(|_| args.into_config()).and_then(|cfg| run_command(&cfg));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("nlok: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Range {
        key: THREADS_VAR.into(),
        msg: format!("need a positive integer, got `{raw}`"),
    })?;
    #[cfg(feature = "parallel")]
    {
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn thread_count() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// What a command produced before it is written out.
struct Produced {
    table: Table,
    result: Value,
    /// Extra files `(name, contents)`.
    extra: Vec<(String, String)>,
    /// Set when the run completed but missed its target.
    failure: Option<String>,
}

impl Produced {
    fn new(table: Table, result: Value) -> Self {
        Produced { table, result, extra: Vec::new(), failure: None }
    }
}

/// Run the configured command and write its files; returns their paths.
pub fn run_command(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let command = cfg.command()?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| io(&cfg.out_dir, e))?;
    let start = Instant::now();
    let produced = match command {
        Command::Energy => energy(cfg)?,
        Command::Curvature => curvature(cfg)?,
        Command::Potential => potential(cfg)?,
        Command::Diagnose => diagnose(cfg)?,
        Command::OnedimRoot => onedim_root(cfg)?,
        Command::OnedimSweep => onedim_sweep(cfg)?,
        Command::Optimize2d => optimize2d(cfg)?,
        Command::Calibrate => calibrate(cfg)?,
    };
    let wall = start.elapsed().as_secs_f64();

    let name = command.name();
    let mut files = Vec::new();
    let csv_path = cfg.out_dir.join(format!("{name}.csv"));
    std::fs::write(&csv_path, produced.table.render()).map_err(|e| io(&csv_path, e))?;
    files.push(csv_path);
    for (file, contents) in &produced.extra {
        let path = cfg.out_dir.join(file);
        std::fs::write(&path, contents).map_err(|e| io(&path, e))?;
        files.push(path);
    }
    let sidecar = json!({
        "command": name,
        "version": env!("CARGO_PKG_VERSION"),
        "parameters": cfg.params,
        "tolerances": {
            "quadrature": cfg.tolerance,
            "tol": cfg.tol,
        },
        "resolution": cfg.resolution,
        "input": cfg.input,
        "config": cfg.entries,
        "parallel": crate::par::is_parallel(),
        "threads": thread_count(),
        "wall_time_seconds": wall,
        "outputs": files.iter().map(|f| f.file_name().unwrap().to_string_lossy().into_owned()).collect::<Vec<_>>(),
        "status": if produced.failure.is_some() { "failed" } else { "ok" },
        "result": produced.result,
    });
    let json_path = cfg.out_dir.join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(&sidecar).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(&json_path, text + "\n").map_err(|e| io(&json_path, e))?;
    files.push(json_path);
    match produced.failure {
        Some(msg) => Err(CliError::Failed(msg)),
        None => Ok(files),
    }
}

fn geometry(cfg: &RunConfig) -> &SetGeometry {
    cfg.geometry.as_ref().expect("checked by RunConfig::command")
}

fn eval(cfg: &RunConfig) -> EvalOptions {
    EvalOptions::with_resolution(cfg.resolution)
}

fn coord_header(dim: usize) -> Vec<&'static str> {
    if dim == 1 {
        vec!["x"]
    } else {
        vec!["x", "y"]
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

fn energy(cfg: &RunConfig) -> Result<Produced, CliError> {
    let g = geometry(cfg);
    let p = &cfg.params;
    let per = functionals::frac_perimeter_estimate(g, p.s, &eval(cfg))?;
    let riesz = functionals::riesz_energy_estimate(g, p.alpha, &eval(cfg))?;
    let e = functionals::EnergyBreakdown::new(per.value, riesz.value, p.eps);
    let mut t = Table::new(&[
        "perimeter_term",
        "riesz_term",
        "total_f",
        "total_f_eps",
        "eps",
        "perimeter_error",
        "riesz_error",
    ]);
    t.push_floats(&[e.perimeter_term, e.riesz_term, e.total_f, e.total_f_eps, e.eps_used, per.error, riesz.error]);
    Ok(Produced::new(t, json!({ "energy": e, "perimeter_error": per.error, "riesz_error": riesz.error })))
}

fn curvature(cfg: &RunConfig) -> Result<Produced, CliError> {
    let g = geometry(cfg);
    let rows = functionals::boundary_table(g, &cfg.params, &eval(cfg))?;
    let mut header = vec!["index"];
    header.extend(coord_header(g.dim()));
    header.extend(["kappa", "potential", "tangential_grad", "zeta"]);
    let mut t = Table::new(&header);
    for r in &rows {
        let mut cells = vec![r.index.to_string()];
        cells.extend(r.point.iter().map(|&x| format_float(x)));
        cells.push(format_float(r.kappa));
        cells.push(format_float(r.potential));
        cells.push(r.tangential_grad.map(format_float).unwrap_or_default());
        cells.push(format_float(r.zeta));
        t.push(cells);
    }
    Ok(Produced::new(t, json!({ "nodes": rows.len() })))
}

fn potential(cfg: &RunConfig) -> Result<Produced, CliError> {
    let g = geometry(cfg);
    if cfg.points.is_empty() {
        return Err(CliError::Usage("`potential` needs evaluation points (`points=x,y; x,y; ...`)".into()));
    }
    let a = cfg.params.alpha;
    let mut header = vec!["index"];
    header.extend(coord_header(g.dim()));
    header.push("potential");
    header.extend(if g.dim() == 1 { vec!["grad_x"] } else { vec!["grad_x", "grad_y"] });
    let mut t = Table::new(&header);
    for (i, x) in cfg.points.iter().enumerate() {
        let v = functionals::potential(g, x, a, &eval(cfg))?;
        // the gradient is infinite on the boundary for α ≥ n − 1; leave it blank there
        let grad = functionals::grad_potential(g, x, a, &eval(cfg)).ok();
        let mut cells = vec![i.to_string()];
        cells.extend(x.iter().map(|&c| format_float(c)));
        cells.push(format_float(v));
        for k in 0..g.dim() {
            cells.push(grad.as_ref().map(|gv| format_float(gv[k])).unwrap_or_default());
        }
        t.push(cells);
    }
    Ok(Produced::new(t, json!({ "points": cfg.points.len() })))
}

fn diagnose(cfg: &RunConfig) -> Result<Produced, CliError> {
    let opts = DiagnoseOptions { resolution: cfg.resolution, identities: cfg.identities.clone(), mu_gate: cfg.mu_gate };
    let report = diagnostics::diagnose(geometry(cfg), &cfg.params, &opts)?;
    let mut t = Table::new(&["quantity", "value"]);
    let mut row = |k: &str, v: Option<f64>| {
        if let Some(v) = v {
            t.push(vec![k.to_string(), format_float(v)]);
        }
    };
    row("delta_s", Some(report.delta_s));
    row("delta_from_potential", Some(report.delta_from_potential));
    row("delta_tolerance", Some(report.delta_tolerance));
    row("eta_s", Some(report.eta_s));
    row("eta_implied_c", report.eta_implied_c);
    row("rho", report.rho);
    row("rho_implied_c", report.rho_implied_c);
    row("iso_ratio", Some(report.iso_ratio));
    row("diameter", Some(report.diameter));
    row("eps_diam_power", Some(report.eps_diam_power));
    row("diam_implied_c_o", report.diam_implied_c_o);
    row("lambda_hat", Some(report.lambda_hat));
    row("lambda_cross", Some(report.lambda_cross));
    row("el_residual", Some(report.el_residual));
    row("mu", report.mu);
    row("tangential_sup", report.tangential_sup);
    for (k, v) in &report.identity_residuals {
        row(&format!("identity_{k}"), Some(*v));
    }
    for (k, v) in &report.error_estimates {
        row(&format!("error_{k}"), Some(*v));
    }
    Ok(Produced::new(t, to_json(&report)))
}

fn onedim_root(cfg: &RunConfig) -> Result<Produced, CliError> {
    let r = onedim::solve_critical_d(&cfg.params, cfg.tol)?;
    let z = onedim::zeta_endpoints(&onedim::TwoIntervalConfig::new(r.d_star, cfg.params)?)?;
    let mut t =
        Table::new(&["eps", "d_star", "d_eps", "diameter", "f_at_root", "residual", "zeta_outer", "zeta_inner"]);
    t.push_floats(&[cfg.params.eps, r.d_star, r.d_eps, r.d_star + 0.5, r.f_at_root, r.residual, z[0], z[1]]);
    Ok(Produced::new(t, json!({ "root": r, "zeta_endpoints": z })))
}

fn onedim_sweep(cfg: &RunConfig) -> Result<Produced, CliError> {
    let sweep = onedim::epsilon_sweep(&cfg.params, &cfg.eps_grid, cfg.tol)?;
    let mut t = Table::new(&["eps", "d_star", "d_eps", "diameter", "f_at_root", "residual"]);
    for r in &sweep.records {
        t.push_floats(&[r.eps, r.d_star, r.d_eps, r.diameter, r.f_at_root, r.residual]);
    }
    let s = &sweep.summary;
    let failures: Vec<Value> =
        sweep.records.iter().filter_map(|r| r.error.as_ref().map(|e| json!({ "eps": r.eps, "error": e }))).collect();
    Ok(Produced::new(
        t,
        json!({
            "slope": s.slope,
            "target_slope": s.target_slope,
            "rel_error": s.rel_error,
            "C_o_implied": s.c_o_implied,
            "eps_bar_estimate": s.eps_bar_estimate,
            "rows_used": s.rows_used,
            "failures": failures,
        }),
    ))
}

fn optimize2d(cfg: &RunConfig) -> Result<Produced, CliError> {
    let init = match &cfg.geometry {
        Some(SetGeometry::Star(s)) => s.clone(),
        Some(SetGeometry::Ball(b)) if b.dim() == 2 => b.to_disk()?,
        Some(_) => return Err(CliError::Usage("optimize2d needs a planar star shape or disk".into())),
        None => StarShape2D::from_modes([0.0, 0.0], 1.0, &[(cfg.init_mode, cfg.init_amplitude, 0.0)])?,
    };
    let init = shapeopt2d::volume_project(&init)?;
    let opts = OptimizerOptions {
        resolution: cfg.resolution,
        k_max: cfg.modes,
        initial_step: cfg.initial_step,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        ..OptimizerOptions::default()
    };
    let run = match shapeopt2d::find_critical_2d(&init, &cfg.params, &opts) {
        Ok(run) => run,
        Err(Error::Stalled { iteration, step, residual, state }) => {
            let mut out = history(&state);
            out.result = json!({ "stalled_at": iteration, "step": step, "residual": residual });
            out.extra.push(("optimize2d_shape.json".into(), shape_json(&state.shape)?));
            out.failure =
                Some(format!("descent stalled at iteration {iteration} (step {step:e}, residual {residual:e})"));
            return Ok(out);
        }
        Err(e) => return Err(e.into()),
    };
    let mut out = history(&run.state);
    out.result = json!({
        "converged": run.converged,
        "iterations": run.state.iteration,
        "final_residual": run.state.residual_history.last(),
        "volume_drift": run.state.volume_drift,
        "radius": run.shape.radius(),
        "report": run.report,
    });
    out.extra.push(("optimize2d_shape.json".into(), shape_json(&run.shape)?));
    if !run.converged {
        out.failure = Some(format!(
            "no convergence to tol {:e} within {} iterations (residual {:e})",
            cfg.tol,
            cfg.max_iter,
            run.state.residual_history.last().copied().unwrap_or(f64::NAN)
        ));
    }
    Ok(out)
}

fn history(state: &shapeopt2d::OptimizerState) -> Produced {
    let mut t = Table::new(&["iteration", "residual", "energy"]);
    for (i, (r, e)) in state.residual_history.iter().zip(&state.energy_history).enumerate() {
        t.push(vec![i.to_string(), format_float(*r), format_float(*e)]);
    }
    Produced::new(t, Value::Null)
}

fn shape_json(shape: &StarShape2D) -> Result<String, CliError> {
    let g = SetGeometry::Star(shape.clone());
    serde_json::to_string_pretty(&g).map(|s| s + "\n").map_err(|e| CliError::Io(e.to_string()))
}

fn calibrate(cfg: &RunConfig) -> Result<Produced, CliError> {
    let c = diagnostics::calibrate_variation_constant(cfg.params.s, cfg.params.n, cfg.resolution)?;
    let mut t = Table::new(&["radius", "ratio"]);
    for &(r, ratio) in &c.ratios {
        t.push_floats(&[r, ratio]);
    }
    Ok(Produced::new(t, json!({ "c_var": c.c_var, "spread": c.spread, "n": cfg.params.n })))
}
