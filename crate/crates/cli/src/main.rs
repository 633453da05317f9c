mod commands;
mod config;
mod error;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use attractor_core::maps::MapSpec;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "attractor", version, about = "Attractors of piecewise-linear maps and their continuation")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Seed for randomised probes.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Semi-distances both ways and the Hausdorff distance of two set files.
    Hausdorff {
        a: PathBuf,
        b: PathBuf,
        /// Sampling step for polygons (their default resolution when absent).
        #[arg(long)]
        step: Option<f64>,
    },
    /// Numeric attractor: cloud CSV and metadata JSON.
    Attractor(AttractorArgs),
    /// Tent-map bands over a slope sweep, as CSV.
    Bands(JobArgs),
    /// Invariant quadrilateral of the coupled skew tent map.
    Quad {
        #[arg(long)]
        s: f64,
        #[arg(long)]
        omega: f64,
    },
    /// Trapping construction and bounds for the Lozi map.
    LoziGeometry {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        /// Iterate counts at which the convergence bound is reported.
        #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
        bound_n: Vec<usize>,
    },
    /// Periodic solution of a piecewise-affine map with a given itinerary.
    Cycle(CycleArgs),
    /// Bifurcation curve a, b, c or d of the border-collision normal form as a JSON polyline.
    Curve(JobArgs),
    /// Region-label sweep of the normal form, or the coupled tent boundary sweep.
    Sweep(JobArgs),
    /// Attractor continuation along a one-parameter path.
    Continue(JobArgs),
    /// Lyapunov exponents of every attractor over a normal-form grid.
    LyapSurface(JobArgs),
}

#[derive(Debug, Args)]
struct JobArgs {
    /// JSON job file; defaults apply to absent fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MapArgs {
    #[arg(long)]
    family: String,
    /// Extra parameters as name=value.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long = "tau-l", allow_hyphen_values = true)]
    tau_l: Option<f64>,
    #[arg(long = "tau-r", allow_hyphen_values = true)]
    tau_r: Option<f64>,
    #[arg(long = "delta-l", allow_hyphen_values = true)]
    delta_l: Option<f64>,
    #[arg(long = "delta-r", allow_hyphen_values = true)]
    delta_r: Option<f64>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("{k}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

impl MapArgs {
    fn map(&self) -> CliResult<MapSpec> {
        let mut p: BTreeMap<String, f64> = BTreeMap::new();
        let named = [
            ("s", self.s),
            ("t", self.t),
            ("r", self.r),
            ("a", self.a),
            ("b", self.b),
            ("omega", self.omega),
            ("tau_L", self.tau_l),
            ("tau_R", self.tau_r),
            ("delta_L", self.delta_l),
            ("delta_R", self.delta_r),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                p.insert(k.to_string(), v);
            }
        }
        for (k, v) in &self.params {
            p.insert(k.clone(), *v);
        }
        if self.family.to_lowercase() == "bcnf" {
            p.entry("delta_L".into()).or_insert(0.3);
            p.entry("delta_R".into()).or_insert(0.3);
        }
        Ok(MapSpec::from_named(&self.family, &p)?)
    }
}

#[derive(Debug, Args)]
struct AttractorArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Start from this point (comma-separated) instead of the family's default cloud.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10_000)]
    n_transient: usize,
    #[arg(long, default_value_t = 1_000_000)]
    n_samples: usize,
    #[arg(long, default_value_t = 100_000)]
    lyapunov_steps: usize,
    #[arg(long, default_value_t = 1e6)]
    escape_radius: f64,
    /// Radius of the basin probe reported in the metadata; skipped when absent.
    #[arg(long)]
    basin_radius: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    basin_probes: usize,
    /// Output prefix: writes PREFIX.csv and PREFIX.json.
    #[arg(short, long, default_value = "attractor")]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct CycleArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Word over L and R.
    #[arg(long, default_value = "LRL")]
    itinerary: String,
}

fn run(cli: Cli) -> CliResult<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Hausdorff { a, b, step } => commands::hausdorff(&a, &b, step),
        Command::Attractor(args) => commands::attractor(&args, seed),
        Command::Bands(j) => commands::bands(&j),
        Command::Quad { s, omega } => commands::quad(s, omega),
        Command::LoziGeometry { a, b, bound_n } => commands::lozi(a, b, &bound_n),
        Command::Cycle(args) => commands::cycle(&args),
        Command::Curve(j) => commands::curve(&j),
        Command::Sweep(j) => commands::sweep(&j, false),
        Command::Continue(j) => commands::continuation(&j),
        Command::LyapSurface(j) => commands::sweep(&j, true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers == 0 {
        eprintln!("error: {}", CliError::validation("--workers must be positive"));
        return ExitCode::from(2);
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
