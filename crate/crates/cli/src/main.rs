use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pcb_cli::commands::{self, ExperimentArgs, ReportArgs, SegmentArgs, SynthArgs};
use pcb_cli::{server, CliError};

#[derive(Parser)]
#[command(name = "pcb", version, about = "Pre-crime behaviour segmentation and 3D CNN experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with manifest and annotations.
    Synth(SynthArgs),
    /// Split an annotated video into pre-crime, suspicious and evidence files.
    Segment(SegmentArgs),
    /// Run (or resume) the approach x filter-pair grid and write reports.
    Experiment(ExperimentArgs),
    /// Rebuild the report tables from a results directory.
    Report(ReportArgs),
    /// Serve the annotation REST API (and UI assets).
    AnnotateServe {
        manifest: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Directory with the built annotator UI.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => commands::synth(&a).map(drop),
        Command::Segment(a) => commands::segment(&a).map(drop),
        Command::Experiment(a) => commands::experiment(&a),
        Command::Report(a) => commands::report(&a).map(drop),
        Command::AnnotateServe { manifest, port, host, static_dir } => {
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Failure(e.to_string()))?;
            rt.block_on(server::serve(&manifest, SocketAddr::new(host, port), static_dir))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_status() as u8)
        }
    }
}

