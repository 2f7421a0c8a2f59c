use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use graphtrail::pipeline::{process_env, Overrides, Pipeline};

/// Embedding trajectories for discrete-time dynamic graphs.
#[derive(Parser)]
#[command(name = "graphtrail", version, about)]
struct Cli {
    /// Pipeline config file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Master RNG seed (overrides the config; default 42).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 = deterministic mode.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse snapshots (or discretize an event log) into graph.json.
    Ingest,
    /// Train or load the embedding series.
    Embed,
    /// Select anchors, project, and align trajectories.
    Trajectory,
    /// Compute the structural-change metric report.
    Analyze,
    /// Emit the SVG and self-contained HTML plots.
    Render,
    /// Run every stage in order.
    Pipeline,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let Some(config_path) = cli.config else {
        eprintln!("usage error: --config <FILE> is required");
        return ExitCode::from(1);
    };
    let flags = Overrides { out_dir: cli.out_dir, seed: cli.seed, threads: cli.threads };
    let pipeline = match Pipeline::load(&config_path, &flags, &process_env) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };

    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(pipeline.settings.threads)
        .build_global();

    let result = match cli.command {
        Command::Ingest => pipeline.ingest().map(|p| vec![p]),
        Command::Embed => pipeline.embed(),
        Command::Trajectory => pipeline.trajectory().map(|p| vec![p]),
        Command::Analyze => pipeline.analyze().map(|(a, b)| vec![a, b]),
        Command::Render => pipeline.render(),
        Command::Pipeline => pipeline.run_all(),
    };
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
