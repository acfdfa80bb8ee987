use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hsie_cli::config::{RunConfig, Task};
use hsie_cli::output::write_all;
use hsie_cli::run::{run, RunError};
use hsie_cli::ConfigError;

#[derive(Parser, Debug)]
#[command(name = "hsie", about = "Helmholtz scattering and resonance with Hardy space infinite elements")]
struct Args {
    task: Task,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; `HSIE_THREADS` takes precedence.
    #[arg(long)]
    threads: Option<usize>,
}

fn threads(arg: Option<usize>) -> Result<Option<usize>, ConfigError> {
    match std::env::var("HSIE_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&k| k > 0)
            .map(Some)
            .ok_or_else(|| ConfigError::Invalid(format!("HSIE_THREADS must be a positive integer, got {v:?}"))),
        Err(_) => Ok(arg),
    }
}

fn main_inner(args: Args) -> Result<PathBuf, RunError> {
    if let Some(k) = threads(args.threads)? {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let cfg = RunConfig::from_file(&args.config)?.resolve(Some(args.task))?;
    let dir = args
        .out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("hsie-out"));
    let outcome = run(&cfg)?;
    write_all(&dir, &cfg, &outcome)?;
    Ok(dir)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match main_inner(args) {
        Ok(dir) => {
            println!("{}", dir.join("summary.json").display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
