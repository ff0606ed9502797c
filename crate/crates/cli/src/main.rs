//! `ifs-conj`: build and check conjugacies of iterated function systems from
//! JSON documents.
//!
//! Exit status: 0 on success or a passing verdict, 2 when the run verified a
//! mathematical obstruction (non-conjugate systems, a non-hyperbolic fixed
//! point), 1 for everything else (bad flags, unreadable or invalid input,
//! numeric failure, a failed residual check).

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ifsconj::config::{DomainSpec, Document};
use ifsconj::IfsError;
use serde::Serialize;

use commands::{Outcome, Status};

const VERSION: &str = concat!("ifs-conj ", env!("CARGO_PKG_VERSION"));

const CONFIG_HELP: &str = "\
Every command reads one JSON document (--input). Flags override document
fields: --radius sets domain.R, --n-max sets n_max, --set KEY=VALUE sets any
top-level field (VALUE is parsed as JSON, else taken as a string).

Environment:
  IFS_CONJ_THREADS  worker threads for grid and trial loops [default: all cores]

Exit status: 0 success, 2 mathematical obstruction, 1 usage or numeric error.";

#[derive(Parser)]
#[command(name = "ifs-conj", version, about = "Construct and verify conjugacies of iterated function systems")]
#[command(after_help = CONFIG_HELP)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Serialize)]
struct Common {
    /// JSON document describing the systems and parameters
    #[arg(long, short, global = true, value_name = "FILE")]
    #[serde(skip)]
    input: Option<PathBuf>,
    /// Report destination, written atomically [default: stdout]
    #[arg(long, short, global = true, value_name = "FILE")]
    #[serde(skip)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Seed for `probe` and `attractor`
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Uniform grid size on [-R, R]
    #[arg(long, default_value_t = 1001, global = true)]
    grid: usize,
    /// Residual tolerance for `verify`, `conjugacy` and componentwise `multidim`
    #[arg(long, default_value = "1e-9", global = true)]
    tolerance: f64,
    /// Working interval radius R [default: domain.R from the input, else 10]
    #[arg(long, global = true)]
    #[serde(skip)]
    radius: Option<f64>,
    /// Iteration cap: `classify` horizon [default: 400], `linearize` depth [default: 20000]
    #[arg(long, global = true)]
    #[serde(skip)]
    n_max: Option<usize>,
    /// Override a top-level document field, e.g. --set n=20 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
enum Command {
    /// Build h with h o f = g o h (maps `f`, `g`) or the weak conjugacy h_n
    /// for linear IFSs (`maps`, `target`, `sequence`, `n`)
    #[command(after_help = "CSV columns: x, h_x, residual")]
    Conjugacy,
    /// Build the conjugacy as `conjugacy` does and check the residual
    /// against --tolerance; exit 1 when it fails
    #[command(after_help = "CSV columns: x, h_x, residual")]
    Verify,
    /// Orbit of `x` (or of each vector in `points`) along `sequence` for `n` steps
    #[command(after_help = "CSV columns: n, x_n (scalar); point, n, x1..xm (diagonal)")]
    Orbit,
    /// Linear part at the origin, slope intervals and Koenigs linearizations
    #[command(after_help = "CSV columns: map, slope, interval, koenigs_depth, koenigs_residual")]
    Linearize {
        /// Half-width of the Koenigs table around the origin
        #[arg(long, default_value_t = 0.5)]
        neighborhood: f64,
    },
    /// Counts n1, n2 along `sequence` and the predicted fate of orbits of
    /// a mixed contracting/expanding system
    #[command(after_help = "CSV columns: n, n1, n2, ratio, orbit_F, orbit_G, bound")]
    Classify,
    /// Diagonal systems on R^m: componentwise conjugacy with `target`, or the
    /// change of basis in `similarity`
    #[command(after_help = "CSV columns: x1..xm, residual, bound")]
    Multidim {
        /// Grid points per axis when `points` is absent
        #[arg(long, default_value_t = 9)]
        per_axis: usize,
    },
    /// Cross-pair C0/C1 distance between `maps` and `target`
    #[command(after_help = "CSV columns: x, map_gap, inverse_gap, derivative_gap (for the maximizing pair)")]
    Distance {
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
        level: u8,
    },
    /// Fixed points of every map and their hyperbolicity margins; exit 2 on a
    /// non-hyperbolic fixed point
    #[command(after_help = "CSV columns: map, fixed_point, derivative, margin, verdict")]
    Audit,
    /// Random C1-small perturbations of `maps` and whether each stays weakly
    /// conjugate near the origin
    #[command(after_help = "CSV columns: trial, attempts, matched_distance, conjugable, max_residual, passed")]
    Probe {
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Chaos-game sample (`iterations`, `burn_in`, `x0` or `points[0]`);
    /// set `"affine": true` to admit kx + b maps
    #[command(after_help = "CSV columns: x (scalar) or x1..xm (diagonal), one point per row")]
    Attractor,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Conjugacy => "conjugacy",
            Command::Verify => "verify",
            Command::Orbit => "orbit",
            Command::Linearize { .. } => "linearize",
            Command::Classify => "classify",
            Command::Multidim { .. } => "multidim",
            Command::Distance { .. } => "distance",
            Command::Audit => "audit",
            Command::Probe { .. } => "probe",
            Command::Attractor => "attractor",
        }
    }
}

#[derive(Serialize)]
struct RunConfig<'a> {
    #[serde(flatten)]
    command: &'a Command,
    input_path: String,
    #[serde(flatten)]
    common: &'a Common,
    document: &'a Document,
}

#[derive(Serialize)]
struct Obstruction {
    verdict: &'static str,
    message: String,
}

#[derive(Serialize)]
struct Report<'a> {
    version: &'static str,
    config: RunConfig<'a>,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    obstruction: Option<Obstruction>,
}

enum Failure {
    Usage(String),
    Core(IfsError),
}

impl From<IfsError> for Failure {
    fn from(e: IfsError) -> Self {
        Failure::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("IFS_CONJ_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("IFS_CONJ_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))
}

fn apply_overrides(doc: Document, overrides: &[String]) -> Result<Document, Failure> {
    if overrides.is_empty() {
        return Ok(doc);
    }
    let mut v = serde_json::to_value(&doc).expect("documents serialize");
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got `{o}`")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
        v[key.trim()] = value;
    }
    serde_json::from_value(v).map_err(|e| Failure::Usage(format!("--set: {e}")))
}

fn load(common: &Common) -> Result<(PathBuf, Document), Failure> {
    let path = common.input.clone().ok_or_else(|| Failure::Usage("--input is required".into()))?;
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let doc = Document::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut doc = apply_overrides(doc, &common.overrides)?;
    if let Some(r) = common.radius {
        doc.domain = Some(DomainSpec { r });
    }
    if let Some(n) = common.n_max {
        doc.n_max = Some(n);
    }
    doc.domain.get_or_insert(DomainSpec { r: doc.interval()?.radius });
    Ok((path, doc))
}

fn dispatch(cli: &Cli, doc: &mut Document) -> ifsconj::Result<Outcome> {
    let c = &cli.common;
    match &cli.command {
        Command::Conjugacy => commands::conjugacy(doc, c.grid, c.tolerance),
        Command::Verify => commands::verify(doc, c.grid, c.tolerance),
        Command::Orbit => commands::orbit(doc),
        Command::Linearize { neighborhood } => commands::linearize(doc, *neighborhood),
        Command::Classify => commands::classify(doc),
        Command::Multidim { per_axis } => commands::multidim(doc, *per_axis, c.tolerance),
        Command::Distance { level } => commands::distance(doc, *level, c.grid),
        Command::Audit => commands::audit(doc),
        Command::Probe { delta, trials } => commands::probe(doc, *delta, *trials, c.seed),
        Command::Attractor => commands::attractor(doc, c.seed),
    }
}

fn obstruction_verdict(e: &IfsError) -> &'static str {
    match e {
        IfsError::NonConjugate { .. } => "non-conjugate",
        _ => "non-hyperbolic",
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    configure_threads()?;
    let t = cli.common.tolerance;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Failure::Usage(format!("--tolerance must be finite and non-negative, got {t}")));
    }
    let (path, mut doc) = load(&cli.common)?;
    let (status, result, table, obstruction) = match dispatch(&cli, &mut doc) {
        Ok(Outcome { status, result, table }) => (status, Some(result), table, None),
        Err(e) if e.is_obstruction() => {
            let o = Obstruction { verdict: obstruction_verdict(&e), message: e.to_string() };
            let mut t = output::Table::new(["status", "verdict", "message"]);
            t.push(vec![Status::Obstructed.label().into(), o.verdict.into(), o.message.clone()]);
            (Status::Obstructed, None, t, Some(o))
        }
        Err(e) => return Err(e.into()),
    };
    let bytes = match cli.common.format {
        Format::Json => output::to_json(&Report {
            version: VERSION,
            config: RunConfig {
                command: &cli.command,
                input_path: path.display().to_string(),
                common: &cli.common,
                document: &doc,
            },
            status: status.label(),
            result,
            obstruction,
        }),
        Format::Csv => table.to_csv().map_err(Failure::Usage)?,
    };
    output::emit(&bytes, cli.common.output.as_deref()).map_err(Failure::Usage)?;
    if status != Status::Ok && status != Status::Pass {
        eprintln!("{}: {}", cli.command.name(), status.label());
    }
    Ok(status.exit_code())
}
