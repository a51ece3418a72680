mod args;
mod commands;
mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::json;

use args::Cli;
use input::CliError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = match &e {
                CliError::Config { field, message } => {
                    eprintln!("error: {field}: {message}");
                    2
                }
                CliError::Lib(err) if err.is_budget() => {
                    eprintln!("error: {err}");
                    3
                }
                CliError::Lib(err) => {
                    eprintln!("error: {err}");
                    2
                }
                CliError::Io(msg) => {
                    eprintln!("error: {msg}");
                    1
                }
                CliError::Violated(msg) => {
                    eprintln!("{msg}");
                    1
                }
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let g = &cli.global;
    let jobs = match g.jobs {
        Some(0) => return Err(input::config_err("--jobs", "must be at least 1")),
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    // everything that determines the report bytes, and nothing else
    let config = json!({
        "tool": "mulab",
        "command": cli.command,
        "seed": g.seed,
        "format": g.format,
    });
    let ctx = commands::Ctx { config: &config, seed: g.seed, cache_dir: g.cache_dir.as_deref(), format: g.format };
    let t0 = Instant::now();
    let (out, violated) = mulab::par::with_jobs(jobs, || commands::run(&cli.command, &ctx))?;
    let wall_ms = t0.elapsed().as_millis() as u64;

    let path = g.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.{}", cli.command.name(), out.extension)));
    report::write(&path, &out.body)?;
    let mut outputs = vec![path.display().to_string()];
    outputs.extend(out.extra_outputs.iter().map(|p| p.display().to_string()));
    let manifest = json!({
        "config": {
            "replay": config,
            "jobs": jobs,
            "cache_dir": g.cache_dir,
            "out": path,
        },
        "tool_version": env!("CARGO_PKG_VERSION"),
        "wall_ms": wall_ms,
        "outputs": outputs,
    });
    report::write(&report::manifest_path(&path), &report::to_json(&manifest))?;
    match violated {
        Some(msg) => Err(CliError::Violated(msg)),
        None => Ok(()),
    }
}
