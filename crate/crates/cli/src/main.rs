#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use args::{Cli, Command};
use output::Sink;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("check failed: {0}")]
    Failed(String),
    #[error(transparent)]
    Model(#[from] uict::error::UictError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Failed(_) | CliError::Model(_) => 1,
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("UICT_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| {
        CliError::Usage(format!(
            "UICT_THREADS must be a positive integer, got {v:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run() -> Result<Option<bool>, CliError> {
    let argv = args::expand_config(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            std::process::exit(code);
        }
    };
    init_threads()?;

    let config = match &cli.command {
        Command::Grow(a) => serde_json::to_value(a),
        Command::Sample(a) => serde_json::to_value(a),
        Command::StripKernel(a) => serde_json::to_value(a),
        Command::SliceDist(a) => serde_json::to_value(a),
        Command::FractalDim(a) => serde_json::to_value(a),
        Command::DiffusionCheck(a) => serde_json::to_value(a),
        Command::Duality(a) => serde_json::to_value(a),
        Command::Martingales(a) => serde_json::to_value(a),
        Command::Verify(a) => serde_json::to_value(a),
    }
    .map_err(|e| CliError::Io(e.to_string()))?;
    let mut config = config;
    config["out_dir"] = serde_json::json!(cli.out_dir);
    config["format"] = serde_json::json!(cli.format);
    let sink = Sink::new(cli.out_dir.clone(), cli.format, cli.command.name(), config)?;

    match &cli.command {
        Command::Grow(a) => commands::grow(a, &sink),
        Command::Sample(a) => commands::sample(a, &sink),
        Command::StripKernel(a) => commands::strip_kernel(a, &sink),
        Command::SliceDist(a) => commands::slice_dist(a, &sink),
        Command::FractalDim(a) => commands::fractal_dim(a, &sink),
        Command::DiffusionCheck(a) => commands::diffusion_check(a, &sink),
        Command::Duality(a) => commands::duality(a, &sink),
        Command::Martingales(a) => commands::martingales(a, &sink),
        Command::Verify(a) => commands::verify(a, &sink),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(Some(false)) => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
