use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stdim::harness::cli::{self, GlobalOptions};
use stdim::training::TrainMode;

#[derive(Parser)]
#[command(name = "stdim", version, about = "Contrastive spatiotemporal pre-training for time-series classification")]
struct Cli {
    /// Seed overriding the one in the command's configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for corpus generation and learning-curve cells.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Suppress the JSON summary and progress logging.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the simulated pre-training and downstream corpora.
    Simgen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pre-train the encoder on the simulated pre-training corpus.
    Pretrain {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Contrastive accuracy of a checkpoint on the held-out pre-training split.
    EvalContrastive {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Train one downstream classifier.
    Downstream {
        #[arg(long)]
        mode: TrainMode,
        #[arg(long)]
        ckpt: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a learning curve and write its report.
    Curve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        ckpt: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare analytic gradients against finite differences.
    Gradcheck,
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let level = if args.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let opts = GlobalOptions {
        seed: args.seed,
        workers: args.workers,
    };
    let result = match &args.command {
        Command::Simgen { config, out } => cli::simgen(config, out, &opts),
        Command::Pretrain { data, config, out } => cli::pretrain_cmd(data, config, out, &opts),
        Command::EvalContrastive { ckpt, data } => cli::eval_contrastive(ckpt, data, &opts),
        Command::Downstream {
            mode,
            ckpt,
            data,
            out,
            config,
        } => cli::downstream(*mode, ckpt.as_deref(), data, out, config.as_deref(), &opts),
        Command::Curve { config, ckpt, out } => cli::curve(config, ckpt.as_deref(), out, &opts),
        Command::Gradcheck => cli::gradcheck(&opts),
    };
    match result {
        Ok(summary) => {
            if !args.quiet {
                println!("{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
