//! `dlpp-lab`: command-line driver for solve / simulate / compare / path /
//! tasep / convergence experiments.
//!
//! Every artifact `<name>` gets a sidecar `<name>.meta.json` holding the
//! SHA-256 of the effective configuration, the seeds used and the crate
//! versions. CSV and NDJSON artifacts are byte-identical across runs with the
//! same configuration, regardless of the thread count.

pub mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use dlpp_core::analysis::{compare, convergence_study};
use dlpp_core::curve_extract::{certify, extract_curve};
use dlpp_core::hjb_solver::{boundary_residual, solve, solve_relative};
use dlpp_core::lattice_sim::{last_passage_wavefront, sample_lattice_with, PassageField, TrialSummary};
use dlpp_core::tasep_bridge::{density_from_value, direct_sublevel_set, height_function, slow_bond_estimate};
use dlpp_core::{io, rng, Exec, WeightField};

pub use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("thread pool: {0}")]
    Threads(String),
    #[error(transparent)]
    Core(#[from] dlpp_core::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Threads(_) => "threads",
            CliError::Core(_) => "computation",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({"error": {"kind": self.kind(), "message": self.to_string()}})
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok([num(a)?, num(b)?])
}

fn parse_index_pair(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `i,j`, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    Ok([num(a)?, num(b)?])
}

#[derive(Debug, Parser)]
#[command(name = "dlpp-lab", version, about = "Last passage percolation and Hamilton-Jacobi experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (1 runs sequentially).
    #[arg(long, env = "DLPP_LAB_THREADS")]
    pub threads: Option<usize>,
    /// Grid spacing.
    #[arg(long)]
    pub h: Option<f64>,
    /// Domain extent `x1,x2`.
    #[arg(long, value_parser = parse_pair)]
    pub extent: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Base grid point `i,j` for a relative solve.
    #[arg(long, value_parser = parse_index_pair)]
    pub base: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Curve endpoint `x,y`; repeatable, replaces the configured endpoints.
    #[arg(long = "from", value_parser = parse_pair)]
    pub from: Vec<[f64; 2]>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long = "s-step")]
    pub s_step: Option<f64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Solve the Hamilton-Jacobi problem on a grid.
    Solve(SolveArgs),
    /// Simulate last passage times.
    Simulate(CommonArgs),
    /// Solve, simulate and compare pointwise and through level sets.
    Compare(CommonArgs),
    /// Extract near-optimal curves and lattice geodesics.
    Path(PathArgs),
    /// Height profiles, densities and the slow-bond experiment.
    Tasep(CommonArgs),
    /// Grid refinement table.
    Convergence(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Simulate(_) => "simulate",
            Command::Compare(_) => "compare",
            Command::Path(_) => "path",
            Command::Tasep(_) => "tasep",
            Command::Convergence(_) => "convergence",
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::Solve(a) => &a.common,
            Command::Path(a) => &a.common,
            Command::Simulate(a) | Command::Compare(a) | Command::Tasep(a) | Command::Convergence(a) => a,
        }
    }
}

/// What a successful run produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub command: String,
    pub out_dir: PathBuf,
    pub config_sha256: String,
    pub artifacts: Vec<PathBuf>,
}

/// Load the config named on the command line and apply flag overrides.
pub fn effective_config(cmd: &Command) -> Result<ExperimentConfig, CliError> {
    let common = cmd.common();
    let text = std::fs::read_to_string(&common.config).map_err(|e| io_error(&common.config, e))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(h) = common.h {
        cfg.h = h;
    }
    if let Some(e) = common.extent {
        cfg.extent = e;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = Some(out.clone());
    }
    match cmd {
        Command::Solve(a) if a.base.is_some() => cfg.base = a.base,
        Command::Path(a) => {
            if !a.from.is_empty() {
                cfg.endpoints = a.from.clone();
            }
            if let Some(e) = a.eps {
                cfg.eps = e;
            }
            if let Some(s) = a.s_step {
                cfg.s_step = s;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// SHA-256 of the effective configuration; the output directory is not hashed.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut cfg = cfg.clone();
    cfg.out_dir = None;
    let canonical = serde_json::to_vec(&cfg).expect("config serializes");
    let digest = Sha256::digest(&canonical);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn thread_count(cmd: &Command) -> Result<Option<usize>, CliError> {
    match cmd.common().threads {
        Some(0) => Err(CliError::Threads("thread count must be >= 1".into())),
        t => Ok(t),
    }
}

/// Run a parsed command line.
pub fn run(cli: &Cli) -> Result<RunSummary, CliError> {
    let cmd = &cli.command;
    let cfg = effective_config(cmd)?;
    let threads = thread_count(cmd)?;
    let exec = if threads == Some(1) { Exec::Sequential } else { Exec::default() };
    with_threads(threads, || execute(cmd, cfg, exec))?
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| CliError::Threads(e.to_string()))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(_threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    Ok(f())
}

#[derive(Serialize)]
struct Meta<'a> {
    artifact: &'a str,
    command: &'a str,
    config_sha256: &'a str,
    field: &'a str,
    seed: u64,
    seeds: &'a [u64],
    caveats: &'a [String],
    dlpp_lab_version: &'static str,
    dlpp_core_version: &'static str,
}

struct Ctx {
    command: &'static str,
    cfg: ExperimentConfig,
    field: WeightField,
    out: PathBuf,
    hash: String,
    exec: Exec,
    artifacts: Vec<PathBuf>,
}

impl Ctx {
    fn write(
        &mut self,
        name: &str,
        seeds: &[u64],
        body: impl FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
    ) -> Result<(), CliError> {
        let path = self.out.join(name);
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush().map_err(|e| io_error(&path, e))?;

        let meta = Meta {
            artifact: name,
            command: self.command,
            config_sha256: &self.hash,
            field: &self.field.description,
            seed: self.cfg.seed,
            seeds,
            caveats: &self.field.caveats(),
            dlpp_lab_version: env!("CARGO_PKG_VERSION"),
            dlpp_core_version: dlpp_core::VERSION,
        };
        let meta_path = self.out.join(format!("{name}.meta.json"));
        let text = serde_json::to_string_pretty(&meta).expect("meta serializes");
        std::fs::write(&meta_path, text + "\n").map_err(|e| io_error(&meta_path, e))?;
        self.artifacts.push(path);
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, seeds: &[u64], value: &T) -> Result<(), CliError> {
        self.write(name, seeds, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(|e| CliError::Io {
                path: name.into(),
                message: e.to_string(),
            })?;
            writeln!(w).map_err(|e| io_error(Path::new(name), e))
        })
    }

    fn lattice_dims(&self) -> (usize, usize) {
        let n = self.cfg.n as f64;
        (
            (self.cfg.extent[0] * n).round() as usize + 1,
            (self.cfg.extent[1] * n).round() as usize + 1,
        )
    }

    fn trial_seed(&self, k: usize) -> u64 {
        rng::derive_seed(self.cfg.seed, k as u64)
    }

    fn simulate_one(&self, k: usize) -> Result<PassageField, CliError> {
        let (n1, n2) = self.lattice_dims();
        let sample = sample_lattice_with(&self.field, n1, n2, self.cfg.n, self.trial_seed(k), self.exec)?;
        Ok(last_passage_wavefront(&sample, self.exec))
    }
}

fn execute(cmd: &Command, cfg: ExperimentConfig, exec: Exec) -> Result<RunSummary, CliError> {
    let field = cfg.weight_field()?;
    let out = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out).map_err(|e| io_error(&out, e))?;
    let mut ctx = Ctx {
        command: cmd.name(),
        hash: config_hash(&cfg),
        cfg,
        field,
        out,
        exec,
        artifacts: Vec::new(),
    };
    match cmd {
        Command::Solve(_) => cmd_solve(&mut ctx)?,
        Command::Simulate(_) => cmd_simulate(&mut ctx)?,
        Command::Compare(_) => cmd_compare(&mut ctx)?,
        Command::Path(_) => cmd_path(&mut ctx)?,
        Command::Tasep(_) => cmd_tasep(&mut ctx)?,
        Command::Convergence(_) => cmd_convergence(&mut ctx)?,
    }
    Ok(RunSummary {
        command: ctx.command.to_string(),
        out_dir: ctx.out,
        config_sha256: ctx.hash,
        artifacts: ctx.artifacts,
    })
}

fn cmd_solve(ctx: &mut Ctx) -> Result<(), CliError> {
    let start = Instant::now();
    let vg = match ctx.cfg.base {
        Some([i, j]) => solve_relative(&ctx.field, ctx.cfg.h, ctx.cfg.extent, (i, j))?,
        None => solve(&ctx.field, ctx.cfg.h, ctx.cfg.extent)?,
    };
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    ctx.write("solution.csv", &[], |w| Ok(io::write_grid_csv(w, &vg)?))?;
    if ctx.cfg.binary {
        ctx.write("solution.bin", &[], |w| Ok(io::write_binary(w, vg.n1, vg.n2, &vg.values)?))?;
    }
    let report = json!({
        "h": vg.h,
        "dims": [vg.n1, vg.n2],
        "base": [vg.base.0, vg.base.1],
        "max_value": vg.max_value(),
        "boundary_residual": boundary_residual(&vg, &ctx.field),
        "caveats": vg.caveats,
        "runtime_ms": runtime_ms,
    });
    ctx.write_json("solve_report.json", &[], &report)
}

fn cmd_simulate(ctx: &mut Ctx) -> Result<(), CliError> {
    let mut summaries = Vec::new();
    let mut seeds = Vec::new();
    for k in 0..ctx.cfg.trials {
        let pf = ctx.simulate_one(k)?;
        seeds.push(pf.seed);
        summaries.push(TrialSummary {
            trial: k,
            seed: pf.seed,
            corner: pf.corner(),
            corner_scaled: pf.corner() / ctx.cfg.n as f64,
        });
        ctx.write(&format!("passage_{k}.csv"), &[pf.seed], |w| Ok(io::write_passage_csv(w, &pf)?))?;
        if ctx.cfg.binary {
            ctx.write(&format!("passage_{k}.bin"), &[pf.seed], |w| {
                Ok(io::write_binary(w, pf.n1, pf.n2, &pf.values)?)
            })?;
        }
    }
    ctx.write_json("trials.json", &seeds, &summaries)
}

fn cmd_compare(ctx: &mut Ctx) -> Result<(), CliError> {
    let cmp = compare(
        &ctx.field,
        ctx.cfg.n,
        ctx.cfg.h,
        ctx.cfg.extent,
        ctx.cfg.trials,
        ctx.cfg.seed,
        ctx.cfg.levels.as_deref(),
        ctx.exec,
    )?;
    let seeds = cmp.report.seeds.clone();
    ctx.write("solution.csv", &[], |w| Ok(io::write_grid_csv(w, &cmp.solution)?))?;
    ctx.write("level_sets_pde.csv", &[], |w| Ok(io::write_level_sets_csv(w, &cmp.pde_levels)?))?;
    for (k, sets) in cmp.sim_levels.iter().enumerate() {
        ctx.write(&format!("level_sets_sim_{k}.csv"), &seeds[k..=k], |w| {
            Ok(io::write_level_sets_csv(w, sets)?)
        })?;
    }
    ctx.write_json("comparison.json", &seeds, &cmp.report)
}

fn cmd_path(ctx: &mut Ctx) -> Result<(), CliError> {
    let vg = solve(&ctx.field, ctx.cfg.h, ctx.cfg.extent)?;
    let endpoints = if ctx.cfg.endpoints.is_empty() {
        vec![ctx.cfg.extent]
    } else {
        ctx.cfg.endpoints.clone()
    };
    let pf = ctx.simulate_one(0)?;
    let seeds = [pf.seed];
    let n = ctx.cfg.n as f64;
    let tol = ctx.cfg.gap_tolerance();
    let mut reports = Vec::new();
    for (k, &x0) in endpoints.iter().enumerate() {
        let curve = extract_curve(&vg, &ctx.field, x0, ctx.cfg.eps, ctx.cfg.s_step)?;
        let energy = certify(&vg, &ctx.field, &curve, tol)?;
        let end = (
            ((x0[0] * n).round() as usize).min(pf.n1 - 1),
            ((x0[1] * n).round() as usize).min(pf.n2 - 1),
        );
        let path = pf.optimal_path(end)?;
        ctx.write(&format!("curve_{k}.ndjson"), &[], |w| Ok(io::write_curve_ndjson(w, &curve)?))?;
        ctx.write(&format!("path_{k}.ndjson"), &seeds, |w| Ok(io::write_path_ndjson(w, &path)?))?;
        reports.push(json!({
            "endpoint": x0,
            "steps": curve.s_star.len(),
            "energy": energy,
            "lattice_endpoint": [end.0, end.1],
            "lattice_passage_scaled": pf.get(end.0, end.1) / n,
        }));
    }
    ctx.write_json("path_report.json", &seeds, &reports)
}

fn cmd_tasep(ctx: &mut Ctx) -> Result<(), CliError> {
    let pf = ctx.simulate_one(0)?;
    let seeds = [pf.seed];
    let times = if ctx.cfg.tasep.times.is_empty() {
        (1..10).map(|k| pf.corner() * k as f64 / 10.0).collect()
    } else {
        ctx.cfg.tasep.times.clone()
    };
    let mut profiles = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let hp = height_function(&pf, t);
        let identity = hp.sublevel_set(pf.n1, pf.n2) == direct_sublevel_set(&pf, t);
        profiles.push(json!({"t": t, "unit_steps": hp.has_unit_steps(), "identity_holds": identity}));
        ctx.write(&format!("heights_{k}.csv"), &seeds, |w| Ok(io::write_height_csv(w, &hp)?))?;
    }
    let vg = solve(&ctx.field, ctx.cfg.h, ctx.cfg.extent)?;
    let density = density_from_value(&vg);
    ctx.write("density.csv", &[], |w| Ok(io::write_density_csv(w, &density)?))?;
    let (lo, hi) = density
        .defined()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r), b.max(r)));

    let mut slow_bond = Vec::new();
    let mut sb_seeds = Vec::new();
    if let Some(sb) = &ctx.cfg.tasep.slow_bond {
        for &r in &sb.r {
            let report = slow_bond_estimate(r, sb.n, sb.trials, ctx.cfg.seed, ctx.exec)?;
            sb_seeds.extend(report.per_trial.iter().map(|t| t.seed));
            slow_bond.push(report);
        }
        ctx.write_json("slow_bond.json", &sb_seeds, &slow_bond)?;
    }
    let report = json!({
        "profiles": profiles,
        "density_range": if lo <= hi { json!([lo, hi]) } else { json!(null) },
        "density_defined_points": density.defined().count(),
    });
    ctx.write_json("tasep_report.json", &seeds, &report)
}

fn cmd_convergence(ctx: &mut Ctx) -> Result<(), CliError> {
    let reference = ctx.cfg.convergence_reference(&ctx.field)?;
    let rows = convergence_study(&ctx.field, &ctx.cfg.convergence.h_list, ctx.cfg.extent, reference)?;
    ctx.write("convergence.csv", &[], |w| {
        let path = Path::new("convergence.csv");
        writeln!(w, "h,sup_error,boundary_residual").map_err(|e| io_error(path, e))?;
        for r in &rows {
            writeln!(w, "{},{},{}", r.h, r.sup_error, r.boundary_residual).map_err(|e| io_error(path, e))?;
        }
        Ok(())
    })?;
    ctx.write_json("convergence.json", &[], &json!({"reference": reference, "rows": rows}))
}
