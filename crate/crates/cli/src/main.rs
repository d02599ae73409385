//! Command-line front end: load or pick problems, run constraint-
//! qualification analysis, regularity probes, closed-loop simulations, and
//! gallery exports.
//!
//! Exit codes: 0 success, 2 runtime/solver failure, 3 input error.

mod expr;
mod output;
mod run;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "optctl",
    version,
    about = "Optimization-based controllers: pointwise solves, constraint-qualification certificates, regularity probes, closed-loop simulation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the program at a state and report constraint qualifications.
    Analyze(AnalyzeArgs),
    /// Probe the regularity of the controller map around a state.
    Probe(ProbeArgs),
    /// Integrate a closed loop and monitor invariance.
    Simulate(SimulateArgs),
    /// Export gallery surfaces and segment scans as CSV.
    Gallery(GalleryArgs),
    /// List the registered gallery entries.
    List,
}

#[derive(Args)]
struct SourceArgs {
    /// Gallery entry name.
    #[arg(long, conflicts_with = "spec")]
    gallery: Option<String>,
    /// Path to a problem-spec document.
    #[arg(long)]
    spec: Option<String>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// State, comma-separated: "0,0".
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    /// Output format: report | csv.
    #[arg(long, default_value = "report")]
    format: String,
    /// Output path, '-' for stdout.
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct ProbeArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Probe kind: pair-quotient | point-lipschitz | holder | directional |
    /// jump | boundedness.
    #[arg(long)]
    kind: String,
    /// Center state, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    center: Option<String>,
    /// Input component to measure (1-based); full vector norm when absent.
    #[arg(long)]
    component: Option<usize>,
    /// Map to probe for gallery entries: closed-form (default when
    /// registered) | solver.
    #[arg(long)]
    source_map: Option<String>,
    /// Radius ladder, comma-separated, e.g. "1e-1,1e-2,1e-3,1e-4,1e-5".
    #[arg(long, allow_hyphen_values = true)]
    radii: Option<String>,
    /// Samples per radius.
    #[arg(long, default_value_t = 64)]
    samples: usize,
    /// Sample-set seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Direction vector for the directional probe.
    #[arg(long, allow_hyphen_values = true)]
    direction: Option<String>,
    /// Step ladder for the directional probe.
    #[arg(long, allow_hyphen_values = true)]
    steps: Option<String>,
    /// Segment "a1,a2:b1,b2" for the jump probe.
    #[arg(long, allow_hyphen_values = true)]
    segment: Option<String>,
    /// Points along the segment.
    #[arg(long, default_value_t = 1001)]
    points: usize,
    /// Jump tolerance relative to the local scale.
    #[arg(long, default_value_t = 1e-3)]
    jump_tol: f64,
    /// Named pair family for pair-quotient: "parabola".
    #[arg(long)]
    pairs: Option<String>,
    /// Parameters s for the pair family.
    #[arg(
        long,
        default_value = "0.1,0.05,0.01,0.005",
        allow_hyphen_values = true
    )]
    pair_s: String,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct SimulateArgs {
    /// Gallery entry with registered dynamics.
    #[arg(long, conflicts_with = "sgf")]
    gallery: Option<String>,
    /// Build the projected-gradient loop from --objective/--constraint.
    #[arg(long)]
    sgf: bool,
    /// Objective polynomial (inline grammar) for --sgf.
    #[arg(long, allow_hyphen_values = true)]
    objective: Option<String>,
    /// Constraint polynomials g(x) <= 0 (repeatable) for --sgf.
    #[arg(long, allow_hyphen_values = true)]
    constraint: Vec<String>,
    /// Linear class-K gain.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Initial state, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    /// Final time.
    #[arg(long, default_value_t = 2.0)]
    t: f64,
    /// Step size.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Invariance monitor: nagumo | minimal-bf | filippov.
    #[arg(long)]
    monitor: Option<String>,
    /// Barrier polynomial h(x) (safe set h >= 0); repeatable.
    #[arg(long, allow_hyphen_values = true)]
    barrier: Vec<String>,
    /// Band width for the minimal-barrier monitor.
    #[arg(long, default_value_t = 0.05)]
    band: f64,
    /// Monitor tolerance.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Monitor sample count.
    #[arg(long, default_value_t = 100)]
    monitor_samples: usize,
    /// Sampling domain "lo1,lo2:hi1,hi2" (defaults to the trajectory box).
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    /// Ball radius for the set-valued monitor.
    #[arg(long, default_value_t = 1e-2)]
    ball_radius: f64,
    /// Field evaluations per hull.
    #[arg(long, default_value_t = 16)]
    hull_samples: usize,
    /// Verify a named candidate solution by residual: y1 | y2.
    #[arg(long)]
    verify_curve: Option<String>,
    /// Finite-difference spacing for --verify-curve.
    #[arg(long, default_value_t = 1e-4)]
    h_fd: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct GalleryArgs {
    /// Entry to export.
    #[arg(long)]
    name: Option<String>,
    /// List registered entries.
    #[arg(long)]
    list: bool,
    /// Grid resolution per axis (2-state entries).
    #[arg(long)]
    grid: Option<usize>,
    /// Grid range "lo,hi" applied to every axis.
    #[arg(long, default_value = "-1,1", allow_hyphen_values = true)]
    range: String,
    /// Segment "a:b" (vectors comma-separated) for 1-D scans.
    #[arg(long, allow_hyphen_values = true)]
    segment: Option<String>,
    /// Points along the segment.
    #[arg(long, default_value_t = 1001)]
    points: usize,
    /// Map source: closed-form (default when registered) | solver.
    #[arg(long)]
    source_map: Option<String>,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input: unknown names, malformed flags, unreadable documents.
    Input(String),
    /// Runtime failure: infeasible solves, diverged monitors.
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 3,
            CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap's own exit code conventions differ; usage problems are
            // input errors here, --help/--version are success
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.cmd {
        Cmd::Analyze(a) => run::analyze(a),
        Cmd::Probe(a) => run::probe(a),
        Cmd::Simulate(a) => run::simulate(a),
        Cmd::Gallery(a) => run::gallery(a),
        Cmd::List => run::list(),
    };
    match result {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
