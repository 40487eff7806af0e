use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use increg_cli::commands::{self, exit_code};
use increg_cli::plot::render_stats;
use increg_cli::RunConfig;
use increg_core::compact::render_table;

#[derive(Parser)]
#[command(name = "increg", version, about = "Structured pruning by incremental regularization")]
struct Cli {
    /// TOML run configuration. Built-in defaults are used without it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a baseline network.
    Train,
    /// Prune a baseline checkpoint to the configured ratios.
    Prune {
        /// Defaults to OUT/baseline.ckpt.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Continue training a pruned checkpoint with its masks frozen.
    Retrain {
        /// Defaults to OUT/pruned.ckpt.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Defaults to train.max_iters.
        #[arg(long)]
        iters: Option<u64>,
    },
    /// Compare FLOPs and forward time of baseline and compact networks.
    Bench {
        /// Defaults to OUT/baseline.ckpt.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Defaults to OUT/pruned.ckpt.
        #[arg(long)]
        pruned: Option<PathBuf>,
    },
    /// Check numerically that raising a penalty factor shrinks the minimizer.
    VerifyTheorem,
    /// Validate a pruning report and emit plot data.
    Report {
        /// Defaults to OUT/report.csv.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print the effective configuration as TOML.
    PrintConfig,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    let in_out = |p: Option<PathBuf>, name: &str| p.unwrap_or_else(|| cfg.out.join(name));

    match cli.command {
        Command::Train => {
            let s = commands::cmd_train(&cfg)?;
            println!(
                "train {:.4}  val {:.4}  test {:.4}",
                s.train_accuracy, s.val_accuracy, s.test_accuracy
            );
        }
        Command::Prune { checkpoint } => {
            let files = commands::cmd_prune(&cfg, &in_out(checkpoint, "baseline.ckpt"))?;
            println!("{}", files.pruned.display());
        }
        Command::Retrain { checkpoint, iters } => {
            let acc = commands::cmd_retrain(
                &cfg,
                &in_out(checkpoint, "pruned.ckpt"),
                iters.unwrap_or(cfg.train.max_iters),
            )?;
            println!("test accuracy {acc:.4}");
        }
        Command::Bench { baseline, pruned } => {
            let report = commands::cmd_bench(
                &cfg,
                &in_out(baseline, "baseline.ckpt"),
                &in_out(pruned, "pruned.ckpt"),
            )?;
            print!("{}", render_table(&report));
        }
        Command::VerifyTheorem => {
            let report = commands::cmd_verify_theorem(&cfg.out)?;
            println!(
                "{} checks passed, {} basin jumps flagged, {} starts skipped",
                report.rows.len(),
                report.jumps(),
                report.skipped
            );
        }
        Command::Report { report } => {
            let stats = commands::cmd_report(&in_out(report, "report.csv"), &cfg.out)?;
            print!("{}", render_stats(&stats));
        }
        Command::PrintConfig => print!("{}", cfg.to_toml()?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
