//! The `redsea` command-line tool.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use redsea_core::costmodel::{estimate, graph_cost, speedup, CostError, DeviceProfile, Problem};
use redsea_core::decomposition::{build_with, DecompositionError, GraphOptions, Model, TaskGraph};
use redsea_core::dse::{explain, explore, DseError};
use redsea_core::linalg::{reference_solve, relative_residual, seeded_problem, DenseMatrix, LowerTriangular};
use redsea_core::sim::{simulate, ExecMode, ExecutionConfig, SimError};

use crate::format::fmt_g;
use crate::hybrid::{execute_hybrid, HybridError};
use crate::io::{self, atomic_write, FileError};
use crate::sweep::{self, SweepError, SweepOptions, SweepRow};
use crate::{calibrate, figures, trace};

/// The bundled synthetic profile.
pub const BUNDLED_PROFILE_NAME: &str = "paperlike.cfg";
pub const PAPERLIKE_PROFILE: &str = include_str!("../profiles/paperlike.cfg");

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

pub fn paperlike_profile() -> DeviceProfile {
    io::parse_profile(PAPERLIKE_PROFILE, false).expect("bundled profile is valid")
}

#[derive(Parser, Debug)]
#[command(name = "redsea", version, about = "Decomposed triangular solves with accelerator offload: cost model, search, simulation and execution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Measure host leaf-solve latencies TS(i) on this machine.
    Calibrate(CalibrateArgs),
    /// Predict the latency of one refinement iteration.
    Estimate(EstimateArgs),
    /// Pick the fastest configuration within a device memory budget.
    Dse(DseArgs),
    /// Simulate one task graph and export its timeline.
    Simulate(SimulateArgs),
    /// Solve a system with the hybrid executor and check the residual.
    Solve(SolveArgs),
    /// Predicted latency and speedup for every iteration up to the stall.
    Sweep(SweepArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModelArg {
    Recursive,
    Iterative,
    Blocked,
    All,
}

impl ModelArg {
    fn models(self) -> Vec<Model> {
        match self {
            ModelArg::Recursive => vec![Model::Recursive],
            ModelArg::Iterative => vec![Model::Iterative],
            ModelArg::Blocked => vec![Model::Blocked],
            ModelArg::All => Model::ALL.to_vec(),
        }
    }

    fn single(self) -> Result<Model, Failure> {
        match self.models().as_slice() {
            [m] => Ok(*m),
            _ => Err(Failure::User(anyhow!("this subcommand needs a single --model"))),
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    /// Device profile (TOML or JSON); defaults to the bundled synthetic profile,
    /// which is also what a bare `paperlike.cfg` names when no such file exists.
    #[arg(long, env = "REDSEA_PROFILE")]
    profile: Option<PathBuf>,
    /// Calibration table whose TS(i) replaces the profile's host latency.
    #[arg(long)]
    ts_table: Option<PathBuf>,
}

impl ProfileArgs {
    fn load(&self) -> Result<DeviceProfile, Failure> {
        let mut profile = match &self.profile {
            Some(p) if p.exists() || p.as_os_str() != BUNDLED_PROFILE_NAME => io::load_profile(p)?,
            _ => paperlike_profile(),
        };
        if let Some(path) = &self.ts_table {
            let table = io::load_calibration(path)?;
            profile.host_ts_latency = table
                .to_latency()
                .map_err(|m| Failure::User(anyhow!("{}: {m}", path.display())))?;
        }
        Ok(profile)
    }
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct ExecArgs {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    host_workers: u32,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    device_queues: u32,
    /// Let host solves, device updates and transfers run concurrently.
    #[arg(long)]
    overlap: bool,
}

impl ExecArgs {
    fn config(&self, mode: ExecMode, profile: DeviceProfile) -> ExecutionConfig {
        ExecutionConfig {
            mode,
            host_workers: self.host_workers,
            device_queues: self.device_queues,
            overlap_enabled: self.overlap,
            resident_l: false,
            profile,
        }
    }
}

fn positive_n(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("n must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    /// System size; leaves of n/2^i rows are measured.
    #[arg(long, default_value_t = 1024, value_parser = positive_n)]
    n: usize,
    #[arg(long, default_value_t = 6)]
    max_iteration: u32,
    /// Cores the leaf solve may use; all available cores by default.
    #[arg(long)]
    host_workers: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Calibration table (JSON); standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the profile with its host latency replaced by the measurements.
    #[arg(long)]
    write_profile: Option<PathBuf>,
    #[command(flatten)]
    profile: ProfileArgs,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long, default_value_t = 16384, value_parser = positive_n)]
    n: usize,
    #[arg(long, value_enum, default_value_t = ModelArg::All)]
    model: ModelArg,
    #[arg(long)]
    iteration: u32,
    #[command(flatten)]
    profile: ProfileArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct DseArgs {
    /// Problem sizes, one instance each.
    #[arg(long, value_delimiter = ',', default_value = "16384", value_parser = positive_n)]
    n: Vec<usize>,
    /// Device memory budget in bytes; unlimited when omitted.
    #[arg(long)]
    budget: Option<u64>,
    #[command(flatten)]
    profile: ProfileArgs,
    /// Full result as JSON; the report still goes to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `json` prints the result instead of the report.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, default_value_t = 16384, value_parser = positive_n)]
    n: usize,
    #[arg(long, value_enum, default_value_t = ModelArg::Blocked)]
    model: ModelArg,
    #[arg(long, default_value_t = 3)]
    iteration: u32,
    /// Simulate this task graph (JSON) instead of building one.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Write the simulated task graph as JSON.
    #[arg(long)]
    emit_graph: Option<PathBuf>,
    /// Keep L resident on the device so updates upload only their X panel.
    #[arg(long)]
    resident_l: bool,
    #[command(flatten)]
    exec: ExecArgs,
    #[command(flatten)]
    profile: ProfileArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, default_value_t = 256, value_parser = positive_n)]
    n: usize,
    #[arg(long, value_enum, default_value_t = ModelArg::Blocked)]
    model: ModelArg,
    #[arg(long, default_value_t = 3)]
    iteration: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Lower-triangular matrix file (binary, or CSV by extension) instead of a random one.
    #[arg(long, requires = "rhs")]
    lower: Option<PathBuf>,
    /// Right-hand-side matrix file.
    #[arg(long, requires = "lower")]
    rhs: Option<PathBuf>,
    /// Measured timeline: CSV, or a Chrome trace for `.json` paths.
    #[arg(long)]
    timeline: Option<PathBuf>,
    #[command(flatten)]
    exec: ExecArgs,
    #[command(flatten)]
    profile: ProfileArgs,
    /// Solution file (binary, or CSV by extension).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, default_value_t = 16384, value_parser = positive_n)]
    n: usize,
    #[arg(long, value_enum, default_value_t = ModelArg::All)]
    model: ModelArg,
    #[arg(long)]
    max_iteration: Option<u32>,
    /// Write latency, speedup and breakdown plot data into this directory.
    #[arg(long)]
    figures: Option<PathBuf>,
    /// Add simulated makespans (JSON output only).
    #[arg(long)]
    simulate: bool,
    #[command(flatten)]
    exec: ExecArgs,
    #[command(flatten)]
    profile: ProfileArgs,
    #[command(flatten)]
    output: OutputArgs,
}

/// A failed command: bad input, or a broken internal invariant.
#[derive(Debug)]
enum Failure {
    User(anyhow::Error),
    Internal(anyhow::Error),
}

impl From<FileError> for Failure {
    fn from(e: FileError) -> Self {
        Failure::User(e.into())
    }
}

impl From<CostError> for Failure {
    fn from(e: CostError) -> Self {
        Failure::User(e.into())
    }
}

impl From<DseError> for Failure {
    fn from(e: DseError) -> Self {
        Failure::User(e.into())
    }
}

impl From<DecompositionError> for Failure {
    fn from(e: DecompositionError) -> Self {
        match e {
            DecompositionError::Invalid(_) | DecompositionError::RoundAssignment { .. } | DecompositionError::OrderNotTopological => {
                Failure::Internal(e.into())
            }
            _ => Failure::User(e.into()),
        }
    }
}

impl From<HybridError> for Failure {
    fn from(e: HybridError) -> Self {
        match e {
            HybridError::Graph(g) => g.into(),
            HybridError::NoWorkers => Failure::User(e.into()),
            _ => Failure::Internal(e.into()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Invalid(_) => Failure::Internal(e.into()),
            _ => Failure::User(e.into()),
        }
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Dse(e) => e.into(),
            SweepError::Sim(e) => e.into(),
            SweepError::Graph(e) => e.into(),
        }
    }
}

type CliResult = Result<(), Failure>;

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult {
    match out {
        Some(path) => Ok(atomic_write(path, bytes)?),
        None => std::io::stdout()
            .write_all(bytes)
            .context("writing to standard output")
            .map_err(Failure::User),
    }
}

fn estimate_csv_row(model: Model, iteration: u32, problem: Problem, profile: &DeviceProfile) -> Result<SweepRow, Failure> {
    let e = estimate(model, problem, iteration, profile)?;
    let base = estimate(model, problem, 0, profile)?;
    Ok(SweepRow {
        model,
        iteration,
        refinement: 1u64 << iteration,
        estimate: e,
        speedup: speedup(&e, base.total_s()),
        accepted: true,
        simulated_s: None,
    })
}

fn cmd_calibrate(a: CalibrateArgs) -> CliResult {
    let cores = a
        .host_workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let (table, warnings) = calibrate::calibrate_table(a.n, a.n, cores, a.max_iteration, a.seed).map_err(|e| Failure::Internal(e.into()))?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    for e in &table.entries {
        eprintln!("TS({}) leaf {} = {} s", e.iteration, e.leaf_size, fmt_g(e.seconds));
    }
    match &a.out {
        Some(path) => io::save_calibration(path, &table)?,
        None => emit(None, format!("{}\n", serde_json::to_string_pretty(&table).expect("tables serialize")).as_bytes())?,
    }
    if let Some(path) = &a.write_profile {
        let mut profile = a.profile.load()?;
        profile.host_ts_latency = table.to_latency().map_err(|m| Failure::Internal(anyhow!(m)))?;
        io::save_profile(path, &profile)?;
    }
    Ok(())
}

fn cmd_estimate(a: EstimateArgs) -> CliResult {
    let profile = a.profile.load()?;
    let problem = Problem::square(a.n);
    let rows = a
        .model
        .models()
        .into_iter()
        .map(|m| estimate_csv_row(m, a.iteration, problem, &profile))
        .collect::<Result<Vec<_>, _>>()?;
    let bytes = match a.output.format {
        Format::Csv => sweep::to_csv(&rows),
        Format::Json => sweep::to_json(&rows).into_bytes(),
    };
    emit(a.output.out.as_deref(), &bytes)
}

fn cmd_dse(a: DseArgs) -> CliResult {
    let profile = a.profile.load()?;
    let problems: Vec<Problem> = a.n.iter().map(|&n| Problem::square(n)).collect();
    let result = explore(&problems, &profile, a.budget.unwrap_or(u64::MAX))?;
    let json = format!("{}\n", serde_json::to_string_pretty(&result).expect("results serialize"));
    if let Some(path) = &a.out {
        atomic_write(path, json.as_bytes())?;
    }
    match a.format {
        Some(Format::Json) => emit(None, json.as_bytes()),
        _ => emit(None, explain(&result).as_bytes()),
    }
}

fn cmd_simulate(a: SimulateArgs) -> CliResult {
    let profile = a.profile.load()?;
    let (graph, from_file) = match &a.graph {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| FileError::Io { path: path.clone(), source })?;
            let g: TaskGraph = serde_json::from_str(&text).map_err(|e| Failure::User(anyhow!("{}: {e}", path.display())))?;
            (g, true)
        }
        None => {
            let opts = GraphOptions {
                rhs: a.n,
                element_bytes: profile.element_bytes,
            };
            (build_with(a.model.single()?, a.n, a.iteration, opts)?, false)
        }
    };
    if let Some(path) = &a.emit_graph {
        let text = format!("{}\n", serde_json::to_string_pretty(&graph).expect("graphs serialize"));
        atomic_write(path, text.as_bytes())?;
    }
    let mut config = a.exec.config(ExecMode::Simulate, profile.clone());
    config.resident_l = a.resident_l;
    let timeline = match simulate(&graph, &config) {
        Err(SimError::Invalid(e)) if from_file => return Err(Failure::User(e.into())),
        other => other?,
    };
    let predicted = graph_cost(&graph, &profile)?;
    eprintln!(
        "{} n={} i={} tasks={}: makespan {} s, non-overlapped model {} s",
        graph.model,
        graph.n,
        graph.iteration(),
        graph.tasks.len(),
        fmt_g(timeline.makespan_s),
        fmt_g(predicted.total_s())
    );
    let bytes = match a.output.format {
        Format::Csv => trace::timeline_csv(&timeline),
        Format::Json => trace::chrome_trace(&timeline).into_bytes(),
    };
    emit(a.output.out.as_deref(), &bytes)
}

fn load_system(a: &SolveArgs) -> Result<(LowerTriangular, DenseMatrix), Failure> {
    match (&a.lower, &a.rhs) {
        (Some(lp), Some(bp)) => {
            let dense = io::read_matrix(lp)?;
            let l = LowerTriangular::from_dense(dense).map_err(|source| FileError::Matrix { path: lp.clone(), source })?;
            let b = io::read_matrix(bp)?;
            if b.rows() != l.n() {
                return Err(Failure::User(anyhow!(
                    "{} has {} rows but the lower-triangular matrix is {}x{}",
                    bp.display(),
                    b.rows(),
                    l.n(),
                    l.n()
                )));
            }
            Ok((l, b))
        }
        _ => Ok(seeded_problem(a.n, a.n, a.seed)),
    }
}

fn cmd_solve(a: SolveArgs) -> CliResult {
    let profile = a.profile.load()?;
    let model = a.model.single()?;
    let (l, b) = load_system(&a)?;
    let opts = GraphOptions {
        rhs: b.cols(),
        element_bytes: profile.element_bytes,
    };
    let graph = build_with(model, l.n(), a.iteration, opts)?;
    let config = a.exec.config(ExecMode::Hybrid, profile);
    let start = Instant::now();
    let out = execute_hybrid(&l, &b, &graph, &config)?;
    let wall = start.elapsed().as_secs_f64();
    let residual = relative_residual(&l, &out.x, &b);
    let reference = reference_solve(&l, &b).map_err(|e| Failure::User(e.into()))?;
    println!("model {model}");
    println!("n {}", l.n());
    println!("rhs {}", b.cols());
    println!("iteration {}", a.iteration);
    println!("tasks {}", graph.tasks.len());
    println!("wall_s {}", fmt_g(wall));
    println!("residual {}", fmt_g(residual));
    println!("matches_reference {}", out.x == reference);
    if let Some(path) = &a.out {
        io::write_matrix(path, &out.x)?;
    }
    if let Some(path) = &a.timeline {
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let bytes = if json {
            trace::chrome_trace(&out.timeline).into_bytes()
        } else {
            trace::timeline_csv(&out.timeline)
        };
        atomic_write(path, &bytes)?;
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> CliResult {
    let profile = a.profile.load()?;
    let problem = Problem::square(a.n);
    let options = SweepOptions {
        max_iteration: a.max_iteration,
        simulate: a.simulate.then(|| a.exec.config(ExecMode::Simulate, profile.clone())),
    };
    let rows = sweep::sweep(problem, &profile, &a.model.models(), &options)?;
    if let Some(dir) = &a.figures {
        figures::emit_figure_data(&rows, dir)?;
    }
    let bytes = match a.output.format {
        Format::Csv => sweep::to_csv(&rows),
        Format::Json => sweep::to_json(&rows).into_bytes(),
    };
    emit(a.output.out.as_deref(), &bytes)
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USER } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Dse(a) => cmd_dse(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::User(e)) => {
            eprintln!("error: {e:#}");
            EXIT_USER
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            EXIT_INTERNAL
        }
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn bundled_profile_parses() {
        let p = paperlike_profile();
        assert_eq!(p.host_cores, 48);
        assert_eq!(p.device_gemm_rate, 8.0e13);
    }
}
