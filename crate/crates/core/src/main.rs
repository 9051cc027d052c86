use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use temclu::experiment::{run, Experiment, ExperimentConfig, Overrides};

/// Tempered exponential measure experiments.
#[derive(Parser, Debug)]
#[command(name = "temclu", version)]
struct Cli {
    #[command(subcommand)]
    experiment: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Divergence balls around fixed centers.
    Balls(Common),
    /// Left and right Voronoi diagrams of a rotating pentagon.
    Voronoi(Common),
    /// Outlier drag on the left center and the right contamination sweep.
    Robustness(Common),
    /// The clustering grid with its metrics.
    Clustering(Common),
    /// Closed forms against quadrature; exits nonzero on any failure.
    Verify(Common),
    /// Cumulant gap as t approaches 1; exits nonzero on any failure.
    Continuity(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Temper values, e.g. `--t 0,0.5,1`.
    #[arg(long = "t", value_delimiter = ',', num_args = 1..)]
    t: Option<Vec<f64>>,
    /// Seeds, e.g. `--seed 0,1,2`.
    #[arg(long = "seed", value_delimiter = ',', num_args = 1..)]
    seed: Option<Vec<u64>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (Experiment, Common) {
        match self {
            Command::Balls(c) => (Experiment::Balls, c),
            Command::Voronoi(c) => (Experiment::Voronoi, c),
            Command::Robustness(c) => (Experiment::Robustness, c),
            Command::Clustering(c) => (Experiment::Clustering, c),
            Command::Verify(c) => (Experiment::Verify, c),
            Command::Continuity(c) => (Experiment::Continuity, c),
        }
    }
}

fn threads() -> Result<(), String> {
    let Ok(v) = std::env::var("TEMCLU_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| format!("TEMCLU_THREADS must be a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err("TEMCLU_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (exp, common) = cli.experiment.split();
    if let Err(e) = threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let base = match &common.config {
        Some(p) => match ExperimentConfig::from_json_file(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => ExperimentConfig::default(),
    };
    let cfg = base.with_overrides(&Overrides {
        t_list: common.t,
        seeds: common.seed,
        output_dir: common.out,
    });
    match run(exp, &cfg) {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            if summary.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
