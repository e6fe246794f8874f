mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Reconstruct the structure of sparse linear dynamic networks from
/// multi-experiment time series.
#[derive(Parser, Debug)]
#[command(name = "dynet", version, about)]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON configuration; command-line flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (0 uses all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Log filter, e.g. `info` or `dynet=debug`.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a random network with perturbed copies and simulated data.
    Generate(GenerateArgs),
    /// Simulate a model JSON on an input CSV (or white noise).
    Simulate(SimulateArgs),
    /// Reconstruct the network from experiment CSVs.
    Reconstruct(ReconstructArgs),
    /// Monte Carlo benchmark of the reconstruction methods.
    Benchmark(BenchmarkArgs),
    /// Compare two network JSONs.
    Metrics(MetricsArgs),
}

#[derive(Args, Debug, Default)]
pub struct GenerateArgs {
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub experiments: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub perturbation: Option<f64>,
    #[arg(long, conflicts_with = "noise_free")]
    pub snr_db: Option<f64>,
    #[arg(long)]
    pub noise_free: bool,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Model JSON.
    pub model: PathBuf,
    /// Input CSV with columns `t,u1..um`; white noise when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Samples of white-noise input.
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    /// Noise free when absent.
    #[arg(long)]
    pub snr_db: Option<f64>,
    /// Output CSV name inside `--out`.
    #[arg(long, default_value = "experiment.csv")]
    pub output: String,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    /// Experiment CSVs, one per experiment.
    #[arg(required = true)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub order: Option<usize>,
    /// Share parameters across experiments.
    #[arg(long)]
    pub homogeneous: bool,
}

#[derive(Args, Debug, Default)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma-separated subset of girl1,gsbl,gsmc.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long, conflicts_with = "noise_free")]
    pub snr_db: Option<f64>,
    #[arg(long)]
    pub noise_free: bool,
    #[arg(long)]
    pub experiments: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Run the continuous-time smoke case instead.
    #[arg(long)]
    pub ct_smoke: bool,
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    pub truth: PathBuf,
    pub estimate: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::new().parse_filters(&cli.log_level).init();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
