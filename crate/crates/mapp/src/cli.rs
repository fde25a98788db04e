//! The `mapp` command line.
//!
//! Exit codes: 0 success, 1 a provable unit was left unsolved (or a trace
//! failed validation), 2 bad input, 3 timeout.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::altpaths::OmegaCache;
use crate::classify::{classify_instance, ClassLabel, Classification, UnitSpec};
use crate::engine::{solve, RepositionStrategy, Solution, SolveOptions, SolveStatus};
use crate::error::Error;
use crate::grid::GridMap;
use crate::pipaths::Mode;
use crate::scenario::{gen_scenario, write_results, write_unit_details, ResultRow, Scenario, UnitDetail};
use crate::trace::{read_trace, write_trace};
use crate::verify::{extract_metrics, joint_oracle, validate, OracleResult, DEFAULT_ORACLE_STATES};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_TIMEOUT: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "mapp", version, about = "Multi-agent path planning on grid maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label every unit with its completeness class.
    Classify {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        solver: SolverArgs,
        /// CSV output (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a scenario and write the move trace.
    Solve {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        solver: SolverArgs,
        /// Trace output (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a one-row results CSV.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Replay a trace and check every move.
    Validate {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        trace: PathBuf,
        /// Units that must end on their targets.
        #[arg(long, value_delimiter = ',')]
        expect_solved: Vec<u32>,
        /// Every unit must end on its target.
        #[arg(long, conflicts_with = "expect_solved")]
        expect_all: bool,
    },
    /// Generate a random scenario.
    Gen {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        units: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scenario output (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve every `.scen` file in a directory and tabulate the results.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Results CSV (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-unit JSON lines.
        #[arg(long)]
        details: Option<PathBuf>,
        /// Record wall-clock milliseconds per instance.
        #[arg(long)]
        timing: bool,
    },
    /// Exhaustive search over joint placements; tiny instances only.
    Oracle {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = DEFAULT_ORACLE_STATES)]
        max_states: usize,
    },
}

#[derive(Debug, Args)]
pub struct Input {
    /// Map file; defaults to the scenario's `map` line, relative to the scenario.
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long)]
    pub scen: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct SolverArgs {
    #[arg(long, default_value = "ti-ac")]
    pub mode: Mode,
    #[arg(long, default_value = "counting")]
    pub repositioning: RepositionStrategy,
    /// Drive unproven units too, without guarantees.
    #[arg(long)]
    pub attempt_all: bool,
    #[arg(long, default_value_t = 600.0)]
    pub timeout_s: f64,
    /// Alternate-path cache; loaded when present, written back after the run
    /// (bench only reads it).
    #[arg(long)]
    pub omega_cache: Option<PathBuf>,
}

impl SolverArgs {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            mode: self.mode,
            repositioning: self.repositioning,
            attempt_all: self.attempt_all,
            timeout: (self.timeout_s > 0.0).then(|| Duration::from_secs_f64(self.timeout_s)),
            ..SolveOptions::default()
        }
    }
}

/// Entry point for the binary.
pub fn main() -> std::process::ExitCode {
    std::process::ExitCode::from(run_args(std::env::args_os()))
}

/// Parses `args` (program name first) and runs the command.
pub fn run_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Engine(_) => EXIT_FAILURE,
                _ => EXIT_INPUT,
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Classify { input, solver, out } => cmd_classify(&input, &solver, out.as_deref()),
        Command::Solve { input, solver, out, metrics } => {
            cmd_solve(&input, &solver, out.as_deref(), metrics.as_deref())
        }
        Command::Validate { input, trace, expect_solved, expect_all } => {
            cmd_validate(&input, &trace, &expect_solved, expect_all)
        }
        Command::Gen { map, units, seed, out } => cmd_gen(&map, units, seed, out.as_deref()),
        Command::Bench { dir, solver, jobs, out, details, timing } => {
            cmd_bench(&dir, &solver, jobs, out.as_deref(), details.as_deref(), timing)
        }
        Command::Oracle { input, max_states } => cmd_oracle(&input, max_states),
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn create(path: &Path) -> Result<io::BufWriter<fs::File>, Error> {
    fs::File::create(path)
        .map(io::BufWriter::new)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn io_err(path: Option<&Path>) -> impl Fn(io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.map_or("<stdout>".into(), |p| p.display().to_string()), source }
}

/// Runs `f` against the file at `path`, or stdout.
fn with_output<F>(path: Option<&Path>, f: F) -> Result<(), Error>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let result = match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w).and_then(|_| w.flush())
        }
        None => {
            let mut w = io::stdout().lock();
            f(&mut w).and_then(|_| w.flush())
        }
    };
    result.map_err(io_err(path))
}

pub fn load_map(path: &Path) -> Result<GridMap, Error> {
    GridMap::parse(&read(path)?).map_err(|source| Error::Parse { path: path.display().to_string(), source })
}

/// Loads a scenario and its map, checking every unit against the map.
pub fn load_instance(scen_path: &Path, map_path: Option<&Path>) -> Result<(GridMap, Scenario), Error> {
    let scen_err = |source| Error::Parse { path: scen_path.display().to_string(), source };
    let scen = Scenario::parse(&read(scen_path)?).map_err(scen_err)?;
    let map_path = match map_path {
        Some(p) => p.to_path_buf(),
        None => scen_path.parent().unwrap_or(Path::new("")).join(&scen.map),
    };
    let map = load_map(&map_path)?;
    scen.check_map(&map).map_err(scen_err)?;
    Ok((map, scen))
}

fn load_cache(path: Option<&Path>, map: &GridMap) -> Result<OmegaCache, Error> {
    let Some(p) = path.filter(|p| p.exists()) else { return Ok(OmegaCache::new()) };
    let f = fs::File::open(p).map_err(|source| Error::Io { path: p.display().to_string(), source })?;
    OmegaCache::load(BufReader::new(f), map).map_err(|source| Error::Parse { path: p.display().to_string(), source })
}

fn save_cache(path: Option<&Path>, cache: &OmegaCache) -> Result<(), Error> {
    let Some(p) = path else { return Ok(()) };
    let mut w = create(p)?;
    cache.save(&mut w).and_then(|_| w.flush()).map_err(io_err(Some(p)))
}

#[derive(serde::Serialize)]
struct ClassRow {
    id: u32,
    label: &'static str,
    pi_len: Option<usize>,
    tunnels: usize,
    tau: usize,
    kappa_init: usize,
    crossed_targets: usize,
}

fn class_rows(units: &[UnitSpec], class: &Classification) -> Vec<ClassRow> {
    units
        .iter()
        .zip(&class.units)
        .map(|(u, c)| ClassRow {
            id: u.id,
            label: c.label.as_str(),
            pi_len: c.pi.as_ref().map(|p| p.len()),
            tunnels: c.tunnels.len(),
            tau: c.tau(),
            kappa_init: c.kappa_init,
            crossed_targets: c.pi.as_ref().map_or(0, |p| p.crossed_targets.len()),
        })
        .collect()
}

fn percent(k: usize, n: usize) -> f64 {
    if n == 0 {
        100.0
    } else {
        100.0 * k as f64 / n as f64
    }
}

pub fn cmd_classify(input: &Input, solver: &SolverArgs, out: Option<&Path>) -> Result<u8, Error> {
    let (map, scen) = load_instance(&input.scen, input.map.as_deref())?;
    let cache_path = solver.omega_cache.as_deref();
    let mut cache = load_cache(cache_path, &map)?;
    let class = classify_instance(&map, &mut cache, &scen.units, solver.mode)?;
    save_cache(cache_path, &cache)?;
    let rows = class_rows(&scen.units, &class);
    with_output(out, |w| {
        let mut csv = csv::Writer::from_writer(w);
        if rows.is_empty() {
            csv.write_record(["id", "label", "pi_len", "tunnels", "tau", "kappa_init", "crossed_targets"])?;
        }
        for r in &rows {
            csv.serialize(r)?;
        }
        csv.flush()
    })?;
    let (k, n) = (class.provable_count(), scen.units.len());
    eprintln!("{k}/{n} provable ({:.1}%)", percent(k, n));
    Ok(EXIT_OK)
}

fn exit_for(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Complete | SolveStatus::Partial => EXIT_OK,
        SolveStatus::Failed => EXIT_FAILURE,
        SolveStatus::Timeout => EXIT_TIMEOUT,
    }
}

fn result_row(
    map_ref: &str,
    scen_ref: &str,
    m: usize,
    opts: &SolveOptions,
    class: &Classification,
    sol: &Solution,
) -> ResultRow {
    let counts = class.label_counts();
    let count = |l: ClassLabel| counts.get(&l).copied().unwrap_or(0);
    ResultRow {
        map: map_ref.to_string(),
        scenario: scen_ref.to_string(),
        n: sol.solved.len(),
        m,
        mode: opts.mode.as_str().into(),
        repositioning: opts.repositioning.as_str().into(),
        slidable: count(ClassLabel::Slidable),
        ti_slidable: count(ClassLabel::TiSlidable),
        ac_slidable: count(ClassLabel::AcSlidable),
        ti_ac_slidable: count(ClassLabel::TiAcSlidable),
        unproven: count(ClassLabel::Unproven),
        solved: sol.solved.iter().filter(|s| **s).count(),
        total_moves: sol.total_moves(),
        undo_moves: sol.undo_moves(),
        status: sol.status.as_str().into(),
        wall_ms: None,
    }
}

pub fn cmd_solve(input: &Input, solver: &SolverArgs, out: Option<&Path>, metrics: Option<&Path>) -> Result<u8, Error> {
    let (map, scen) = load_instance(&input.scen, input.map.as_deref())?;
    let opts = solver.options();
    let cache_path = solver.omega_cache.as_deref();
    let mut cache = load_cache(cache_path, &map)?;
    let class = classify_instance(&map, &mut cache, &scen.units, opts.mode)?;
    save_cache(cache_path, &cache)?;
    let sol = solve(&map, &scen.units, &class, &opts)?;
    with_output(out, |w| write_trace(w, &sol.moves))?;
    let m = extract_metrics(&class, &sol);
    eprintln!(
        "{}: solved {}/{} ({} provable), {} moves, {} undone, {} steps",
        sol.status.as_str(),
        m.solved_units,
        scen.units.len(),
        m.provable_units,
        m.total_moves,
        m.undo_moves,
        m.progression_steps,
    );
    if let Some(p) = metrics {
        let row = result_row(&scen.map, &input.scen.display().to_string(), map.open_cells(), &opts, &class, &sol);
        let mut w = create(p)?;
        write_results(&mut w, &[row]).map_err(|e| Error::Invalid(format!("{}: {e}", p.display())))?;
    }
    Ok(exit_for(sol.status))
}

pub fn cmd_validate(input: &Input, trace: &Path, expect_solved: &[u32], expect_all: bool) -> Result<u8, Error> {
    let (map, scen) = load_instance(&input.scen, input.map.as_deref())?;
    let f = fs::File::open(trace).map_err(|source| Error::Io { path: trace.display().to_string(), source })?;
    let moves =
        read_trace(BufReader::new(f)).map_err(|source| Error::Parse { path: trace.display().to_string(), source })?;
    let claimed: Vec<u32> = if expect_all { scen.units.iter().map(|u| u.id).collect() } else { expect_solved.to_vec() };
    let report = validate(&map, &scen.units, &moves, &claimed);
    if report.is_ok() {
        println!("OK ({} moves)", moves.len());
        return Ok(EXIT_OK);
    }
    for v in &report.violations {
        match v.index {
            Some(i) => println!("move {}: unit {}: {}", i + 1, v.unit, v.kind),
            None => println!("final state: unit {}: {}", v.unit, v.kind),
        }
    }
    Ok(EXIT_FAILURE)
}

/// How the generated scenario should name its map: relative to the output
/// file when they share a directory, otherwise absolute.
fn map_reference(map: &Path, out: Option<&Path>) -> String {
    let Some(out) = out else { return map.display().to_string() };
    let map_abs = fs::canonicalize(map).unwrap_or_else(|_| map.to_path_buf());
    let out_dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let out_dir = fs::canonicalize(out_dir).unwrap_or_else(|_| out_dir.to_path_buf());
    match map_abs.strip_prefix(&out_dir) {
        Ok(rel) => rel.display().to_string(),
        Err(_) => map_abs.display().to_string(),
    }
}

pub fn cmd_gen(map_path: &Path, units: usize, seed: u64, out: Option<&Path>) -> Result<u8, Error> {
    let map = load_map(map_path)?;
    let scen = gen_scenario(&map, &map_reference(map_path, out), units, seed)?;
    let text = scen.emit();
    with_output(out, |w| w.write_all(text.as_bytes()))?;
    Ok(EXIT_OK)
}

struct BenchOutcome {
    row: ResultRow,
    details: Vec<UnitDetail>,
}

fn bench_one(
    path: &Path,
    solver: &SolverArgs,
    cache: Option<&OmegaCache>,
    timing: bool,
) -> Result<BenchOutcome, Error> {
    let started = Instant::now();
    let (map, scen) = load_instance(path, None)?;
    let opts = solver.options();
    let mut cache = cache.cloned().unwrap_or_default();
    let class = classify_instance(&map, &mut cache, &scen.units, opts.mode)?;
    let sol = solve(&map, &scen.units, &class, &opts)?;
    let name = file_name(path);
    let mut row = result_row(&scen.map, &name, map.open_cells(), &opts, &class, &sol);
    if timing {
        row.wall_ms = Some(started.elapsed().as_millis() as u64);
    }
    let details = scen
        .units
        .iter()
        .zip(&class.units)
        .zip(&sol.solved)
        .map(|((u, c), solved)| UnitDetail {
            scenario: name.clone(),
            unit: u.id,
            label: c.label.as_str().into(),
            pi_len: c.pi.as_ref().map(|p| p.len()),
            solved: *solved,
        })
        .collect();
    Ok(BenchOutcome { row, details })
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn error_row(path: &Path, solver: &SolverArgs, status: &str) -> ResultRow {
    ResultRow {
        map: String::new(),
        scenario: file_name(path),
        n: 0,
        m: 0,
        mode: solver.mode.as_str().into(),
        repositioning: solver.repositioning.as_str().into(),
        slidable: 0,
        ti_slidable: 0,
        ac_slidable: 0,
        ti_ac_slidable: 0,
        unproven: 0,
        solved: 0,
        total_moves: 0,
        undo_moves: 0,
        status: status.into(),
        wall_ms: None,
    }
}

/// Scenario files directly inside `dir`, sorted by name.
pub fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>, Error> {
    let io = |source| Error::Io { path: dir.display().to_string(), source };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let p = entry.map_err(io)?.path();
        if p.extension().is_some_and(|e| e == "scen") {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

pub fn cmd_bench(
    dir: &Path,
    solver: &SolverArgs,
    jobs: usize,
    out: Option<&Path>,
    details: Option<&Path>,
    timing: bool,
) -> Result<u8, Error> {
    let files = scenario_files(dir)?;
    // The cache is tied to one map, so it is only loaded against the map of
    // the first scenario; instances on other maps start from an empty cache.
    let shared = match (&solver.omega_cache, files.first()) {
        (Some(_), Some(first)) => {
            let (map, _) = load_instance(first, None)?;
            Some(load_cache(solver.omega_cache.as_deref(), &map)?)
        }
        _ => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let outcomes: Vec<(PathBuf, Result<BenchOutcome, Error>)> =
        pool.install(|| files.par_iter().map(|p| (p.clone(), bench_one(p, solver, shared.as_ref(), timing))).collect());

    let mut rows = Vec::with_capacity(outcomes.len());
    let mut all_details = Vec::new();
    let mut code = EXIT_OK;
    for (path, outcome) in outcomes {
        match outcome {
            Ok(o) => {
                if o.row.status == SolveStatus::Failed.as_str() {
                    code = EXIT_FAILURE;
                }
                rows.push(o.row);
                all_details.extend(o.details);
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                code = EXIT_FAILURE;
                rows.push(error_row(&path, solver, "error"));
            }
        }
    }
    rows.sort_by(|a, b| a.scenario.cmp(&b.scenario));
    with_output(out, |w| write_results(w, &rows).map_err(io::Error::other))?;
    if let Some(p) = details {
        let mut w = create(p)?;
        write_unit_details(&mut w, &all_details).and_then(|_| w.flush()).map_err(io_err(Some(p)))?;
    }
    let solved: usize = rows.iter().map(|r| r.solved).sum();
    let units: usize = rows.iter().map(|r| r.n).sum();
    eprintln!("{} instances, {solved}/{units} units solved ({:.1}%)", rows.len(), percent(solved, units));
    Ok(code)
}

pub fn cmd_oracle(input: &Input, max_states: usize) -> Result<u8, Error> {
    let (map, scen) = load_instance(&input.scen, input.map.as_deref())?;
    match joint_oracle(&map, &scen.units, max_states) {
        OracleResult::Solvable(n) => println!("SOLVABLE {n}"),
        OracleResult::Unsolvable => println!("UNSOLVABLE"),
        OracleResult::Limit => println!("LIMIT"),
    }
    Ok(EXIT_OK)
}
