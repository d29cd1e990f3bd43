//! `shapeflow` command-line tool.
//!
//! Every command prints one JSON report on stdout (a key/value table with
//! `--pretty`) and exits with 0 when all audits pass, 2 on an audit failure,
//! 3 on numerical non-convergence and 4 on bad input. Failures also print a
//! JSON object on stderr.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use shapeflow_core::Error;

use crate::commands::{Ctx, Outcome};
use crate::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "shapeflow", version, about = "Optimal transport between shapes and Euler sprays")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for all sampling; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Omit the timestamp so reports are byte-identical across runs.
    #[arg(long, global = true)]
    reproducible: bool,
    /// Directory for relative output paths; overrides the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Print a key/value table instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a raster shape.
    Shape(ShapeArgs),
    /// Optimal transport between point clouds or shapes.
    #[command(subcommand)]
    Ot(OtCommand),
    /// Displacement interpolant of a shape at one time.
    Interp(InterpArgs),
    /// Droplet geodesics.
    #[command(subcommand)]
    Droplet(DropletCommand),
    /// Build and audit Euler sprays.
    #[command(subcommand)]
    Spray(SprayCommand),
    /// Weak-form verification of flows.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Distances between measure-function pairs.
    #[command(subcommand)]
    Tlp(TlpCommand),
    /// Two-fluid relaxed action.
    #[command(subcommand)]
    Relaxed(RelaxedCommand),
    /// SVG figures.
    #[command(subcommand)]
    Render(RenderCommand),
    /// Shapes to audited spray, report and figures in one run.
    Pipeline(PipelineArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ShapeKind {
    Ellipse,
    Box,
}

#[derive(Args, Debug)]
pub struct ShapeArgs {
    #[arg(value_enum)]
    pub kind: ShapeKind,
    /// Semi-axes (ellipse) or half-widths (box), comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub axes: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub center: Option<Vec<f64>>,
    /// Cells along the longest axis; overrides the config.
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MethodArg {
    Exact,
    Entropic,
}

#[derive(Subcommand, Debug)]
pub enum OtCommand {
    /// Optimal plan between two CSV point clouds.
    Solve {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample two shapes and fit the transport map as a potential gradient.
    Field {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct InterpArgs {
    #[arg(long)]
    pub field: PathBuf,
    /// Source shape the field was fitted on.
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub t: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum DropletCommand {
    /// Geodesic between two axis tuples of equal product.
    Bvp {
        #[arg(long)]
        r: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        a0: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        a1: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum SprayCommand {
    /// Cover the source shape and build one droplet per ball.
    Build {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Coverage, injectivity, action and bottleneck audits of a built spray.
    Audit {
        spray: PathBuf,
        #[arg(long, default_value_t = 17)]
        time_samples: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum VerifyCommand {
    /// Weak residuals of a flow under refinement.
    WeakEuler {
        #[arg(long)]
        path: PathBuf,
        /// `seed:N,count:M`.
        #[arg(long, default_value = "seed:42,count:20")]
        bank: String,
        /// Number of resolutions, each halving `h` and `dt`.
        #[arg(long, default_value_t = 2)]
        refine: usize,
        /// Coarsest label spacing.
        #[arg(long, default_value_t = 0.125)]
        h: f64,
        /// Coarsest number of time steps.
        #[arg(long, default_value_t = 16)]
        steps: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum TlpCommand {
    /// Distance between `points.csv:values.csv` pairs.
    Dist {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// 1, 2 or inf.
        #[arg(long, default_value = "2")]
        p: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum RelaxedCommand {
    /// Two-fluid state of the displacement interpolant of a fitted field.
    Sample {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        source: PathBuf,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Deposited sub-particles per cell and axis; high values keep
        /// aliasing from pushing densities to saturation.
        #[arg(long, default_value_t = 8)]
        supersample: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Action, constraint residuals and minimality probes of a state.
    Audit {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = 100)]
        probes: usize,
        /// Probe seed; defaults to the global seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.1)]
        amplitude: f64,
    },
}

#[derive(Subcommand, Debug)]
pub enum RenderCommand {
    /// Snapshots of every droplet of a spray.
    Spray {
        spray: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1")]
        times: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// One droplet nested in its Wasserstein ellipse, with tracks.
    Droplet {
        #[arg(long)]
        geodesic: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        boost: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
}

const EXIT_AUDIT: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;
const EXIT_INPUT: u8 = 4;

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::ZeroMass => "ZeroMass",
        Error::EmptySupport => "EmptySupport",
        Error::MassMismatch { .. } => "MassMismatch",
        Error::SizeGuardExceeded { .. } => "SizeGuardExceeded",
        Error::NonConvergence { .. } => "NonConvergence",
        Error::DegenerateNeighborhood { .. } => "DegenerateNeighborhood",
        Error::ResolutionTooCoarse(_) => "ResolutionTooCoarse",
        Error::ResolutionMismatch(_) => "ResolutionMismatch",
        Error::TangencyViolated(_) => "TangencyViolated",
        Error::BlowupGuard { .. } => "BlowupGuard",
        Error::Stall(_) => "Stall",
        Error::ChainBroken { .. } => "ChainBroken",
        Error::QuadratureMismatch(_) => "QuadratureMismatch",
        Error::InvalidInput(_) => "InvalidInput",
        Error::Io(_) => "Io",
        Error::Json(_) => "Json",
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_convergence_failure() {
        EXIT_CONVERGENCE
    } else {
        EXIT_INPUT
    }
}

fn fail(e: &Error) -> ExitCode {
    let code = exit_code(e);
    let body = json!({ "error": error_kind(e), "message": e.to_string(), "exit_code": code });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn table(report: &Map<String, Value>) -> String {
    let width = report.keys().map(String::len).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in report {
        let mut s = match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        if s.len() > 96 {
            let cut = (0..=93).rev().find(|&i| s.is_char_boundary(i)).unwrap_or(0);
            s.truncate(cut);
            s.push_str("...");
        }
        out.push_str(&format!("{k:<width$}  {s}\n"));
    }
    out
}

fn run(cli: Cli) -> Result<(String, Outcome), Error> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.clone();
    }
    cfg.validate()?;
    let ctx = Ctx::new(cfg)?;
    let (name, outcome) = match cli.command {
        Command::Shape(a) => ("shape", commands::shape(&ctx, a)?),
        Command::Ot(c) => ("ot", commands::ot(&ctx, c)?),
        Command::Interp(a) => ("interp", commands::interp(&ctx, a)?),
        Command::Droplet(c) => ("droplet", commands::droplet(&ctx, c)?),
        Command::Spray(c) => ("spray", commands::spray(&ctx, c)?),
        Command::Verify(c) => ("verify", commands::verify(&ctx, c)?),
        Command::Tlp(c) => ("tlp", commands::tlp(&ctx, c)?),
        Command::Relaxed(c) => ("relaxed", commands::relaxed(&ctx, c)?),
        Command::Render(c) => ("render", commands::render(&ctx, c)?),
        Command::Pipeline(a) => ("pipeline", commands::pipeline(&ctx, a)?),
    };
    Ok((name.to_string(), outcome))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (reproducible, pretty) = (cli.reproducible, cli.pretty);
    let (name, outcome) = match run(cli) {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    let mut report = Map::new();
    report.insert("command".into(), Value::String(name));
    report.insert("passed".into(), Value::Bool(outcome.failed.is_empty()));
    if !reproducible {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        report.insert("timestamp".into(), json!(secs));
    }
    report.extend(outcome.report);
    let text = if pretty { table(&report) } else { format!("{}\n", Value::Object(report)) };
    // A closed pipe on stdout is not an error of the command.
    let _ = std::io::stdout().write_all(text.as_bytes());
    if outcome.failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{}", json!({ "error": "AuditFailed", "failed": outcome.failed, "exit_code": EXIT_AUDIT }));
        ExitCode::from(EXIT_AUDIT)
    }
}
