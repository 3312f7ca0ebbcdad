//! `ddr`: structural checks, operator dumps and DOF tables for discrete de Rham sequences.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 on any error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ddr_core::ddr2d::{Options, PotentialVariant};
use ddr_core::geometry::Cell;
use ddr_core::mesh::{shapes, Mesh};
use ddr_core::par;
use ddr_core::verify::{self, Config, Report, Sequence, Suite};

#[derive(Parser)]
#[command(name = "ddr", version, about = "Discrete de Rham sequences on polygons and polyhedra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run check suites and write a report.
    Check(CheckArgs),
    /// Write every assembled operator of one cell and degree as text matrices.
    Dump(DumpArgs),
    /// Print entity-wise DOF counts next to the reference finite element counts.
    DofTables(TableArgs),
    /// Print a built-in shape as a mesh file.
    Shape {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Source {
    /// Mesh file (JSON).
    #[arg(long, conflicts_with = "shape", required_unless_present = "shape")]
    mesh: Option<PathBuf>,
    /// Built-in shape: triangle, square, rectangle, pentagon, hexagon, tetra, cube, prism, lprism.
    #[arg(long)]
    shape: Option<String>,
    /// Restrict to one cell id (default: every cell).
    #[arg(long)]
    cell: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Markdown,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Standard,
    Alternative,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    source: Source,
    /// Degrees as `a..b` (inclusive) or a single integer.
    #[arg(long, default_value = "0..3", value_parser = parse_degrees)]
    degrees: Degrees,
    /// Comma-separated suites, or `all`.
    #[arg(long, default_value = "all", value_parser = parse_suites)]
    suite: Suites,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = ddr_core::linalg::RANK_TOL)]
    rank_tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random samples per identity.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Report file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
    /// Report zero elapsed times, making reports byte-identical across runs.
    #[arg(long)]
    no_timing: bool,
    /// Skip the fault-injection checks.
    #[arg(long)]
    no_negative_controls: bool,
    /// Face potential reconstruction.
    #[arg(long, value_enum, default_value = "standard")]
    potential: Variant,
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    degree: usize,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value = "0..3", value_parser = parse_degrees)]
    degrees: Degrees,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
}

#[derive(Clone)]
struct Degrees(Vec<usize>);

#[derive(Clone)]
struct Suites(Vec<Suite>);

fn parse_degrees(s: &str) -> Result<Degrees, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad degree `{t}`"));
    let v: Vec<usize> = match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
            if a > b {
                return Err(format!("empty degree range {s}"));
            }
            (a..=b).collect()
        }
        None => vec![num(s)?],
    };
    Ok(Degrees(v))
}

fn parse_suites(s: &str) -> Result<Suites, String> {
    Suite::parse_list(s).map(Suites)
}

/// An error message and the exit status 2.
struct Failure(String);

fn load_cells(src: &Source) -> Result<Vec<Cell>, Failure> {
    let (mesh, origin) = match (&src.mesh, &src.shape) {
        (Some(p), _) => (Mesh::load(p).map_err(|e| Failure(format!("{}: {e}", p.display())))?, p.display().to_string()),
        (None, Some(name)) => (shapes::by_name(name).ok_or_else(|| Failure(format!("unknown shape `{name}`")))?, format!("shape {name}")),
        (None, None) => return Err(Failure("either --mesh or --shape is required".into())),
    };
    let ids: Vec<usize> = match src.cell {
        Some(c) => vec![c],
        None => (0..mesh.cell_count()).collect(),
    };
    ids.into_iter().map(|id| mesh.cell(id).map_err(|e| Failure(format!("{origin}: {e}")))).collect()
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check(a: &CheckArgs) -> Result<bool, Failure> {
    let cells = load_cells(&a.source)?;
    let variant = match a.potential {
        Variant::Standard => PotentialVariant::Standard,
        Variant::Alternative => PotentialVariant::Alternative,
    };
    let cfg = Config {
        tol: a.tol,
        rank_tol: a.rank_tol,
        seed: a.seed,
        samples: a.samples.max(1),
        timing: !a.no_timing,
        negative_controls: !a.no_negative_controls,
        options: Options { variant },
        ..Config::default()
    };
    log::info!("{} cells, degrees {:?}, parallel {}", cells.len(), a.degrees.0, par::is_parallel());
    let report = par::with_jobs(a.jobs, || verify::run(&cells, &a.degrees.0, &a.suite.0, &cfg)).map_err(|e| Failure(e.to_string()))?;
    let text = match a.format {
        Format::Json => report.to_json(),
        Format::Markdown => report.to_markdown(),
    };
    write_output(a.out.as_deref(), &text)?;
    eprintln!("{} checks: {} passed, {} failed", report.checks.len(), report.passed(), report.failed());
    Ok(report.all_passed())
}

fn dump(a: &DumpArgs) -> Result<bool, Failure> {
    let cells = load_cells(&a.source)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Failure(format!("{}: {e}", a.out.display())))?;
    for cell in &cells {
        let seq = Sequence::build(cell, a.degree, &Options::default()).map_err(|e| Failure(format!("cell {}: {e}", cell.id)))?;
        for m in seq.operators() {
            let path = a.out.join(format!("{}_c{}_k{}.txt", m.name, cell.id, a.degree));
            m.save(&path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
            log::info!("wrote {}", path.display());
        }
    }
    Ok(true)
}

fn dof_tables(a: &TableArgs) -> Result<bool, Failure> {
    let cells = load_cells(&a.source)?;
    let cfg = Config::default();
    let mut report = Report::default();
    for cell in &cells {
        for &k in &a.degrees.0 {
            let seq = Sequence::build(cell, k, &cfg.options).map_err(|e| Failure(format!("cell {}: {e}", cell.id)))?;
            let (table, checks) = verify::run_dof_tables(&seq, &cfg);
            report.tables.push(table);
            report.checks.extend(checks);
        }
    }
    let text = match a.format {
        Format::Json => serde_json::to_string_pretty(&report.tables).map_err(|e| Failure(e.to_string()))?,
        Format::Markdown => report.tables.iter().map(|t| t.to_markdown()).collect::<Vec<_>>().join("\n"),
    };
    write_output(a.out.as_deref(), &text)?;
    for c in report.checks.iter().filter(|c| !c.passed()) {
        eprintln!("cell {} k {} {}: expected {:?}, got {:?}", c.cell, c.k, c.name, c.expected, c.actual);
    }
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("DDR_LOG")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check(a) => check(a),
        Command::Dump(a) => dump(a),
        Command::DofTables(a) => dof_tables(a),
        Command::Shape { name, out } => match shapes::by_name(name) {
            Some(m) => write_output(out.as_deref(), &(m.to_json() + "\n")).map(|_| true),
            None => Err(Failure(format!("unknown shape `{name}`"))),
        },
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
