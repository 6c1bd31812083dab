use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "uict",
    version,
    about = "Simulate the causal triangulation growth process and check its limit laws"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Directory for reports and tables; the report goes to stdout when unset.
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Encoding of data tables written to the output directory.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// JSON object of flag values; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a triangulation from a move string or by random growth.
    #[command(args_override_self = true)]
    Grow(GrowArgs),
    /// Sample a boundary-length trajectory.
    #[command(args_override_self = true)]
    Sample(SampleArgs),
    /// Compare simulated strip increments with the exact strip kernel.
    #[command(args_override_self = true)]
    StripKernel(StripKernelArgs),
    /// Compare simulated slice sizes with the branching-process marginals.
    #[command(args_override_self = true)]
    SliceDist(SliceDistArgs),
    /// Estimate the volume growth exponent of the ball of radius t.
    #[command(args_override_self = true)]
    FractalDim(FractalDimArgs),
    /// Compare a rescaled chain with its diffusion limit.
    #[command(args_override_self = true)]
    DiffusionCheck(DiffusionArgs),
    /// Check the height / volume duality.
    #[command(args_override_self = true)]
    Duality(DualityArgs),
    /// Check the two martingales exactly and along sampled paths.
    #[command(args_override_self = true)]
    Martingales(MartingaleArgs),
    /// Run the acceptance suite.
    #[command(args_override_self = true)]
    Verify(VerifyArgs),
}

impl Command {
    pub const NAMES: [&'static str; 9] = [
        "grow",
        "sample",
        "strip-kernel",
        "slice-dist",
        "fractal-dim",
        "diffusion-check",
        "duality",
        "martingales",
        "verify",
    ];

    pub fn name(&self) -> &'static str {
        let i = match self {
            Command::Grow(_) => 0,
            Command::Sample(_) => 1,
            Command::StripKernel(_) => 2,
            Command::SliceDist(_) => 3,
            Command::FractalDim(_) => 4,
            Command::DiffusionCheck(_) => 5,
            Command::Duality(_) => 6,
            Command::Martingales(_) => 7,
            Command::Verify(_) => 8,
        };
        Self::NAMES[i]
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GrowArgs {
    /// Initial boundary length.
    #[arg(long, default_value_t = 1)]
    pub m0: u64,
    /// Move string such as "+-++-"; random growth when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub moves: Option<String>,
    /// Strips to grow at random when no move string is given.
    #[arg(long, default_value_t = 3)]
    pub strips: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the triangulation as JSON to this path.
    #[arg(long, value_name = "FILE")]
    pub export: Option<PathBuf>,
    /// Export the triangulation with its defects instead of the causal image.
    #[arg(long)]
    pub almost_causal: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long, default_value_t = 1)]
    pub m0: u64,
    /// Number of growth steps.
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StripKernelArgs {
    /// Boundary length at the start of the strip.
    #[arg(long, default_value_t = 3)]
    pub m: u64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Longest strip enumerated for the exact table.
    #[arg(long, default_value_t = 14)]
    pub len_cap: usize,
    /// Smallest p-value counted as a pass.
    #[arg(long, default_value_t = 1e-3)]
    pub p_min: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SliceDistArgs {
    #[arg(long, default_value_t = 1)]
    pub m0: u64,
    /// Generations of the size-biased process to compare.
    #[arg(long, default_value_t = 4)]
    pub generations: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Largest slice size kept by the exact recursion.
    #[arg(long, default_value_t = 400)]
    pub trunc: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub p_min: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FractalDimArgs {
    #[arg(long, default_value_t = 1)]
    pub m0: u64,
    #[arg(long, default_value_t = 4096)]
    pub t_max: u64,
    #[arg(long, default_value_t = 50)]
    pub trajectories: usize,
    /// Smallest height entering the fit.
    #[arg(long, default_value_t = 64)]
    pub t_min: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.85)]
    pub slope_min: f64,
    #[arg(long, default_value_t = 2.15)]
    pub slope_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    /// M_{floor(u n)} / sqrt(n) against dX = dt / X + dW.
    Growth,
    /// k_{floor(s t)} / t against dZ = 2 ds + sqrt(2 Z) dW.
    Slice,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DiffusionArgs {
    #[arg(long, value_enum, default_value_t = Process::Growth)]
    pub process: Process,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Chain length for the growth process.
    #[arg(long, default_value_t = 10_000)]
    pub n: u64,
    /// Height for the slice process.
    #[arg(long, default_value_t = 128)]
    pub t: u64,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.03)]
    pub ks_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DualityMode {
    /// t_n / H_n along sampled chains.
    Ratio,
    /// Time-changed growth diffusion against the slice diffusion.
    TimeChange,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DualityArgs {
    #[arg(long, value_enum, default_value_t = DualityMode::Ratio)]
    pub mode: DualityMode,
    #[arg(long, default_value_t = 1)]
    pub m0: u64,
    /// Chain length per run.
    #[arg(long, default_value_t = 1_000_000)]
    pub n: u64,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    #[arg(long, default_value_t = 0.9)]
    pub band_lo: f64,
    #[arg(long, default_value_t = 1.1)]
    pub band_hi: f64,
    /// Share of runs that must end inside the band.
    #[arg(long, default_value_t = 0.95)]
    pub min_share: f64,
    /// Diffusion paths in time-change mode.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    #[arg(long, default_value_t = 0.03)]
    pub ks_max: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MartingaleArgs {
    /// Largest boundary length in the exact residual grid.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_m: u64,
    /// Also sample paths and report the sup statistics per decade.
    #[arg(long)]
    pub trend: bool,
    #[arg(long, default_value_t = 1)]
    pub m0: u64,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    /// Longest sampled path.
    #[arg(long, default_value_t = 1_000_000)]
    pub n_max: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelArg {
    Quick,
    Full,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
    pub level: LevelArg,
    #[arg(long, default_value_t = 20_240_601)]
    pub seed: u64,
    /// Comma separated criterion numbers; all twelve when absent.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<usize>,
}

/// Splices the flags of a `--config` file in front of the command line
/// flags, which then override them.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut path = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = Some(
                it.next()
                    .ok_or_else(|| CliError::Usage("--config needs a file".into()))?,
            );
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };

    let text = std::fs::read_to_string(&path).map_err(|e| {
        CliError::Usage(format!(
            "cannot read config {}: {e}",
            path.to_string_lossy()
        ))
    })?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad config: {e}")))?;
    let Value::Object(map) = value else {
        return Err(CliError::Usage("config must be a JSON object".into()));
    };

    let mut tokens = Vec::new();
    let mut command = None;
    for (key, v) in map {
        if key == "command" {
            command = v.as_str().map(str::to_owned);
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Bool(true) => tokens.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let joined: Vec<String> = items.iter().map(scalar).collect::<Result<_, _>>()?;
                tokens.push(flag);
                tokens.push(joined.join(","));
            }
            other => {
                tokens.push(flag);
                tokens.push(scalar(&other)?);
            }
        }
    }

    let pos = rest
        .iter()
        .position(|a| Command::NAMES.contains(&a.to_string_lossy().as_ref()));
    let at = match (pos, command) {
        (Some(p), _) => p + 1,
        (None, Some(c)) => {
            let at = rest.len().min(1);
            rest.insert(at, OsString::from(c));
            at + 1
        }
        (None, None) => return Ok(rest),
    };
    rest.splice(at..at, tokens.into_iter().map(OsString::from));
    Ok(rest)
}

fn scalar(v: &Value) -> Result<String, CliError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => Err(CliError::Usage(format!("unsupported config value {v}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_flags_precede_command_line() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(
            &cfg,
            r#"{"command": "fractal-dim", "t_max": 512, "seed": 3}"#,
        )
        .unwrap();
        let argv = expand_config(os(&[
            "uict",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "9",
        ]))
        .unwrap();
        let cli = Cli::try_parse_from(argv).unwrap();
        let Command::FractalDim(a) = cli.command else {
            panic!()
        };
        assert_eq!((a.t_max, a.seed), (512, 9));
    }

    #[test]
    fn lists_and_switches() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"only": [1, 2], "trend": true}"#).unwrap();
        let argv =
            expand_config(os(&["uict", "verify", "--config", cfg.to_str().unwrap()])).unwrap();
        assert_eq!(argv[2], "--only");
        assert_eq!(argv[3], "1,2");
        assert!(expand_config(os(&["uict", "--config"])).is_err());
    }
}
