use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use memcoll_cli::config::parse_formats;
use memcoll_cli::{load_config, run_single, run_sweep, ExperimentKind, RunError};

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "memcoll", version, about = "Memory-mediated collision model: witnesses of non-Markovianity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyse one configuration collision by collision.
    Run(Common),
    /// Sweep detuning or coupling anisotropy and report the aggregate measures.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Number of grid points evaluated concurrently.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

#[derive(Args)]
struct Common {
    /// Configuration file with one `key = value` per line.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated output formats (csv, json).
    #[arg(long)]
    format: Option<String>,
    /// Directory used when neither --out nor the configuration names one.
    #[arg(long, env = "MEMCOLL_OUT_DIR", hide = true)]
    default_out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

fn runtime_failure(err: RunError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(EXIT_RUNTIME)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, workers, default_kind) = match cli.command {
        Command::Run(c) => (c, 1, ExperimentKind::SingleRun),
        Command::Sweep { common, workers } => (common, workers, ExperimentKind::DetuningSweep),
    };

    let mut spec = match load_config(common.config.as_deref(), &common.overrides, default_kind) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if spec.kind.is_sweep() != default_kind.is_sweep() {
        eprintln!("config error: kind {} does not match this subcommand", spec.kind.as_str());
        return ExitCode::from(EXIT_CONFIG);
    }
    if let Some(f) = &common.format {
        match parse_formats(f) {
            Ok(formats) => spec.formats = formats,
            Err(e) => {
                eprintln!("config error: invalid value for `--format`: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    }
    let out_dir = spec.resolve_output_dir(common.out.as_deref(), common.default_out.as_deref());

    if spec.kind.is_sweep() {
        let outcome = match run_sweep(&spec, &out_dir, workers) {
            Ok(o) => o,
            Err(e) => return runtime_failure(e),
        };
        let failed = outcome.failures();
        if !common.quiet {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
        }
        for p in outcome.points.iter().filter(|p| p.failed()) {
            eprintln!("point {} ({}): {}", p.index, p.value, p.error.as_deref().unwrap_or(""));
        }
        if failed > 0 {
            eprintln!("{failed} of {} sweep points failed", outcome.points.len());
            return ExitCode::from(EXIT_PARTIAL);
        }
    } else {
        let outcome = match run_single(&spec, &out_dir) {
            Ok(o) => o,
            Err(e) => return runtime_failure(e),
        };
        if !common.quiet {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            let s = &outcome.summary;
            println!("I_RHP = {:.6}  I_LFS = {:.6}  sum N_q = {:.6}", s.i_rhp, s.i_lfs, s.sum_nq);
        }
        if let Some(e) = outcome.halted {
            eprintln!("analysis stopped early: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    ExitCode::SUCCESS
}
