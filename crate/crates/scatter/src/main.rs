use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use scatter::config::Format;
use scatter::{run_pipeline, RunConfig, ScatterError, Task};

#[derive(Parser)]
#[command(name = "scatter", version, about = "Half-line scattering pipeline")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the pipeline described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Restrict to these tasks (repeatable); overrides `[tasks]`.
        #[arg(long = "task")]
        tasks: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutFormat>,
    },
    /// Check a config file without computing anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Text,
}

fn init_threads() -> Result<(), ScatterError> {
    let Ok(v) = std::env::var("SCATTER_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| ScatterError::config("SCATTER_THREADS", format!("expected a positive integer, got `{v}`")))?;
    // a second call fails only if a pool already exists, which is harmless
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run(cli: Cli) -> Result<i32, ScatterError> {
    init_threads()?;
    match cli.cmd {
        Cmd::Validate { config } => {
            let cfg = RunConfig::load(&config)?;
            println!("ok {}", cfg.hash());
            Ok(0)
        }
        Cmd::Run { config, tasks, out, format } => {
            let mut cfg = RunConfig::load(&config)?;
            if !tasks.is_empty() {
                if let Some(bad) = tasks.iter().find(|t| *t != "all" && Task::parse(t).is_none()) {
                    return Err(ScatterError::config("--task", format!("unknown task `{bad}`")));
                }
                cfg.tasks.run = tasks;
            }
            if let Some(dir) = out {
                cfg.output.dir = dir;
            }
            if let Some(f) = format {
                cfg.output.format = match f {
                    OutFormat::Json => Format::Json,
                    OutFormat::Text => Format::Text,
                };
            }
            let report = run_pipeline(&cfg)?;
            println!("{}", report.render(cfg.output.format));
            Ok(report.exit_code())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
