//! `vbs-ge`: geometric entanglement of spin-s VBS chains from the command line.
//!
//! Every run writes its full configuration next to the results: a `config`
//! object in JSON output, `#` comment lines ahead of the CSV header.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use vbs_ge::contraction::{ObcMode, DEFAULT_DENSE_CAP};
use vbs_ge::vbs::{Boundary, Sector};

#[derive(Parser, Debug)]
#[command(name = "vbs-ge", version, about = "Geometric entanglement of integer-spin VBS chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    /// Write results here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Entanglement of one chain, per sector.
    Compute(ComputeArgs),
    /// Entanglement over a grid of spins and lengths.
    Sweep(SweepArgs),
    /// Seeded random product states and their entanglement values.
    Simulate(SimulateArgs),
    /// Fit the spin-scaling law to extrapolated even-sector values.
    Fit(FitArgs),
    /// Compare the dense-state oracle with transfer-matrix contraction.
    Oracle(OracleArgs),
    /// Run the invariant suite and report each property.
    Check,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    Csv,
    Json,
}

/// `obc` and `obc-exact` both average the open chain over its boundary states
/// with exact per-state norms; `obc-asymptotic` normalizes by `c_L`.
#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Bc {
    Pbc,
    Obc,
    ObcExact,
    ObcAsymptotic,
}

impl Bc {
    fn boundary(self) -> Boundary {
        match self {
            Bc::Pbc => Boundary::Pbc,
            _ => Boundary::ObcAveraged,
        }
    }

    fn mode(self) -> ObcMode {
        match self {
            Bc::ObcAsymptotic => ObcMode::Asymptotic,
            _ => ObcMode::Exact,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Bc::Pbc => "pbc",
            Bc::Obc | Bc::ObcExact => "obc-exact",
            Bc::ObcAsymptotic => "obc-asymptotic",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SectorArg {
    Even,
    Odd,
    Both,
}

impl SectorArg {
    fn sectors(self) -> Vec<Sector> {
        match self {
            SectorArg::Even => vec![Sector::Even],
            SectorArg::Odd => vec![Sector::Odd],
            SectorArg::Both => Sector::BOTH.to_vec(),
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    Unconstrained,
    PermInvariant,
    BoundaryRandom,
}

#[derive(Args, Debug, Serialize)]
struct ComputeArgs {
    #[arg(long)]
    spin: i64,
    #[arg(long)]
    length: usize,
    #[arg(long, value_enum, default_value_t = Bc::Pbc)]
    bc: Bc,
    #[arg(long, value_enum, default_value_t = SectorArg::Both)]
    sector: SectorArg,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    spins: Vec<i64>,
    #[arg(long, value_delimiter = ',', required = true)]
    lengths: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Bc::Pbc)]
    bc: Bc,
    #[arg(long, value_enum, default_value_t = SectorArg::Both)]
    sector: SectorArg,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    spin: i64,
    #[arg(long, default_value_t = 10)]
    length: usize,
    #[arg(long, value_enum, default_value_t = Bc::Pbc)]
    bc: Bc,
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Bulk ansatz sector for `boundary-random`; `both` runs one batch per sector.
    #[arg(long, value_enum, default_value_t = SectorArg::Even)]
    sector: SectorArg,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct FitArgs {
    /// Spins of a single parity.
    #[arg(long, value_delimiter = ',', required = true)]
    spins: Vec<u32>,
    /// Even chain lengths used to extrapolate each spin's value.
    #[arg(long, value_delimiter = ',', default_value = "200,240,280,320,360,400")]
    lengths: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Bc::Pbc)]
    bc: Bc,
    #[arg(long, default_value_t = 2.0)]
    log_base: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-14)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct OracleArgs {
    #[arg(long)]
    spin: i64,
    #[arg(long)]
    length: usize,
    #[arg(long, value_enum, default_value_t = Bc::Pbc)]
    bc: Bc,
    /// Optimizer restarts; 0 skips the optimization.
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_DENSE_CAP)]
    dense_cap: usize,
}

#[derive(Serialize)]
struct RunConfig<'a> {
    version: &'static str,
    #[serde(flatten)]
    command: &'a Command,
    format: Format,
    output: Option<&'a PathBuf>,
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("VBS_GE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("VBS_GE_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let config = RunConfig {
        version: env!("CARGO_PKG_VERSION"),
        command: &cli.command,
        format: cli.format,
        output: cli.output.as_ref(),
    };
    let text = match commands::run(&cli.command, &config, cli.format) {
        Ok(text) => text,
        Err(e) => {
            eprint!("{}", e.to_json());
            return ExitCode::from(1);
        }
    };
    match &cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                let err = commands::CliError::io(path, e);
                eprint!("{}", err.to_json());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}
