//! Command-line entry point: dataset generation, training, evaluation,
//! frequency analysis, homophily scoring, and the inner-iteration ablation.
//!
//! Exit codes: 0 success, 2 configuration or validation problems, 3
//! numerical divergence, 1 anything unexpected.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aagcn::cli;
use aagcn::data::{CsbmParams, SplitRatios};
use aagcn::error::{Error, Result};
use aagcn::spectral::DEFAULT_SPECTRAL_CAP;

#[derive(Parser)]
#[command(
    name = "aagcn",
    about = "Graph convolutional networks with adaptive polynomial-filter aggregation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic contextual-SBM dataset directory
    GenData(GenDataArgs),
    /// Train a model per config, one run per seed, and summarize
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset directory
    Eval(EvalArgs),
    /// Export per-layer filter frequency responses as CSV
    Freq(FreqArgs),
    /// Run the alternating-vs-joint inner-iteration ablation grid
    Ablate(AblateArgs),
    /// Print the edge homophily of a dataset directory
    Homophily(HomophilyArgs),
}

#[derive(Args)]
struct GenDataArgs {
    /// Number of nodes
    #[arg(long)]
    n: usize,
    /// Number of classes
    #[arg(long, short = 'c')]
    c: usize,
    /// Feature dimension (must be >= classes)
    #[arg(long, short = 'f')]
    f: usize,
    /// Within-class edge probability
    #[arg(long)]
    p_in: f64,
    /// Cross-class edge probability
    #[arg(long)]
    p_out: f64,
    /// Feature signal strength
    #[arg(long)]
    mu: f64,
    /// Generator seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Stratified split ratios as train,val,test
    #[arg(long, default_value = "0.48,0.32,0.20", value_parser = parse_ratios)]
    ratios: SplitRatios,
}

#[derive(Args)]
struct TrainArgs {
    /// Run config JSON file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `output`)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads for the seed fan-out (overrides the config's `jobs`)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    /// Model JSON file
    #[arg(long)]
    model: PathBuf,
    /// Dataset directory
    #[arg(long)]
    data: PathBuf,
    /// L1-normalize feature rows before evaluating
    #[arg(long, default_value_t = false)]
    row_normalize_features: bool,
}

#[derive(Args)]
struct FreqArgs {
    /// Model JSON file
    #[arg(long)]
    model: PathBuf,
    /// Dataset directory supplying the graph
    #[arg(long)]
    data: PathBuf,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Node-count cap for the dense eigendecomposition
    #[arg(long, default_value_t = DEFAULT_SPECTRAL_CAP)]
    spectral_cap: usize,
}

#[derive(Args)]
struct AblateArgs {
    /// Run config JSON file
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated I_H grid values
    #[arg(long, default_value = "1,5,10,25,50", value_parser = parse_grid)]
    grid_h: std::vec::Vec<usize>,
    /// Comma-separated I_W grid values
    #[arg(long, default_value = "1,5,10,25,50", value_parser = parse_grid)]
    grid_w: std::vec::Vec<usize>,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for the grid fan-out
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct HomophilyArgs {
    /// Dataset directory
    #[arg(long)]
    data: PathBuf,
}

fn parse_ratios(s: &str) -> std::result::Result<SplitRatios, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected three comma-separated ratios".into());
    }
    let vals: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, String>>()?;
    SplitRatios::new(vals[0], vals[1], vals[2]).map_err(|e| e.to_string())
}

fn parse_grid(s: &str) -> std::result::Result<Vec<usize>, String> {
    let vals: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, String>>()?;
    if vals.is_empty() {
        return Err("grid must be nonempty".into());
    }
    Ok(vals)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenData(args) => {
            let params = CsbmParams {
                n: args.n,
                c: args.c,
                f: args.f,
                p_in: args.p_in,
                p_out: args.p_out,
                mu: args.mu,
                seed: args.seed,
            };
            let homophily = cli::run_gen_data(&params, args.ratios, &args.out)?;
            match homophily {
                Some(h) => println!("edge homophily: {h:.4}"),
                None => println!("edge homophily: undefined (no edges)"),
            }
            println!("wrote dataset to {}", args.out.display());
            Ok(())
        }
        Command::Train(args) => {
            let mut cfg = cli::load_run_config(&args.config)?;
            if args.jobs.is_some() {
                cfg.jobs = args.jobs;
            }
            let out_dir = args
                .output
                .or_else(|| cfg.output.clone())
                .ok_or_else(|| {
                    Error::Config("no output directory: set `output` in the config or pass --output".into())
                })?;
            let summary = cli::run_train(&cfg, &out_dir)?;
            println!(
                "test accuracy over {} seed(s): {:.4} ± {:.4}",
                summary.seeds.len(),
                summary.mean_test_acc,
                summary.std_test_acc
            );
            println!("wrote per-seed runs and summary.json to {}", out_dir.display());
            Ok(())
        }
        Command::Eval(args) => {
            let eval = cli::run_eval(&args.model, &args.data, args.row_normalize_features)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&eval).expect("evaluation serialize")
            );
            Ok(())
        }
        Command::Freq(args) => {
            cli::run_freq(&args.model, &args.data, &args.out, args.spectral_cap)?;
            println!("wrote frequency responses to {}", args.out.display());
            Ok(())
        }
        Command::Ablate(args) => {
            let mut cfg = cli::load_run_config(&args.config)?;
            if args.jobs.is_some() {
                cfg.jobs = args.jobs;
            }
            cli::run_ablate(&cfg, &args.grid_h, &args.grid_w, &args.out)?;
            println!("wrote ablation grid to {}", args.out.display());
            Ok(())
        }
        Command::Homophily(args) => {
            let h = cli::run_homophily(&args.data)?;
            println!("edge homophily: {h:.4}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(u8::try_from(err.exit_code()).unwrap_or(1))
        }
    }
}
