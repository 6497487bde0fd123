//! `hppm`: the part-based body model pipeline as a command line tool.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 data error,
//! 4 numeric failure.

mod commands;
mod config;
mod data;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError { code: 3, message: message.into() }
    }
}

impl From<hppm_core::Error> for CliError {
    fn from(e: hppm_core::Error) -> Self {
        use hppm_core::Error as E;
        let code = match &e {
            E::Config(_) => 2,
            E::DegenerateRotation(_)
            | E::NotOrthonormal { .. }
            | E::DegenerateFit(_)
            | E::BehindCamera { .. } => 4,
            _ => 3,
        };
        CliError { code, message: e.to_string() }
    }
}

#[derive(Parser)]
#[command(name = "hppm", version, about = "Part-based human body model pipeline")]
struct Cli {
    /// JSON run configuration; falls back to $HPPM_CONFIG, then defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Print a machine-readable JSON summary on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic articulated-body dataset.
    Synth {
        /// Number of samples (default: config `n_samples`).
        #[arg(long)]
        count: Option<usize>,
        /// Write somewhere other than the configured `data_dir`.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Segment the canonical body into overlapping part templates.
    BuildTemplate {
        /// Override the configured dilation step count.
        #[arg(long)]
        dilation: Option<usize>,
    },
    /// Train per-part shape models and joint regressors into the bundle.
    Train {
        /// Use only the first N dataset samples.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Fit per-part states to the posed bodies and write annotation files.
    Annotate {
        /// Annotate only the first N dataset samples.
        #[arg(long)]
        samples: Option<usize>,
        /// Also export the ground-truth part slices as OBJ files, in the
        /// prediction format `eval` reads.
        #[arg(long)]
        dump_gt_parts: bool,
    },
    /// Decode an annotation and fuse its visible parts into one mesh.
    DecodeFuse {
        /// Annotation JSON produced by `annotate`.
        #[arg(long, value_name = "FILE")]
        annotation: PathBuf,
        /// Comma-separated part ids, or "all" (default: annotation flags).
        #[arg(long)]
        visible: Option<String>,
        /// Output OBJ path (a .fused.json sidecar goes next to it).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Generate the partial-visibility benchmark manifest.
    GenPv {
        /// Use only the first N dataset samples.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Score predictions against ground truth over a benchmark manifest.
    Eval {
        /// Manifest path (default: the configured one).
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,
        /// Prediction directory holding annotation JSON or per-part OBJ
        /// files (default: the annotations directory).
        #[arg(long, value_name = "DIR")]
        pred: Option<PathBuf>,
        /// Also average the full training-loss breakdown over the manifest;
        /// needs annotation-format predictions.
        #[arg(long)]
        losses: bool,
        /// Metrics report path (default: the configured one).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

fn run(cli: &Cli) -> Result<serde_json::Value, CliError> {
    let cfg = config::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Synth { count, out } => commands::cmd_synth(&cfg, *count, out.as_deref(), cli.json),
        Command::BuildTemplate { dilation } => commands::cmd_build_template(&cfg, *dilation, cli.json),
        Command::Train { samples } => commands::cmd_train(&cfg, *samples, cli.json),
        Command::Annotate { samples, dump_gt_parts } => {
            commands::cmd_annotate(&cfg, *samples, *dump_gt_parts, cli.json)
        }
        Command::DecodeFuse { annotation, visible, out } => {
            commands::cmd_decode_fuse(&cfg, annotation, visible.as_deref(), out.as_deref(), cli.json)
        }
        Command::GenPv { samples } => commands::cmd_gen_pv(&cfg, *samples, cli.json),
        Command::Eval { manifest, pred, losses, out } => commands::cmd_eval(
            &cfg,
            manifest.as_deref(),
            pred.as_deref(),
            *losses,
            out.as_deref(),
            cli.json,
        ),
    }
}

fn main() -> ExitCode {
    // Die quietly when the consumer closes the pipe (`hppm ... | head`)
    // instead of panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(&cli) {
        Ok(summary) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            if cli.json {
                println!("{}", serde_json::json!({ "error": e.message, "code": e.code }));
            }
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
