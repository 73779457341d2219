use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vortex_cli::commands::{self, Inputs};
use vortex_cli::{CliError, Overrides, RunConfig};

/// Near-surface wind retrieval for axisymmetric vortices.
///
/// Thread count: set VORTEX_THREADS (defaults to all cores).
#[derive(Parser)]
#[command(name = "vortex", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; defaults apply to missing keys.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Observation noise in m/s.
    #[arg(long, global = true, value_name = "X")]
    sigma: Option<f64>,
    /// Minimum observable height.
    #[arg(long, global = true, value_name = "X")]
    moh: Option<f64>,
    /// Comma-separated MOH heights (twin only).
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    moh_sweep: Option<Vec<f64>>,
    /// Tangential-velocity observations, CSV columns r,z,v,sigma.
    #[arg(long, global = true, value_name = "PATH")]
    obs: Option<PathBuf>,
    /// Radial velocity on the MOH line, CSV columns r,u.
    #[arg(long, global = true, value_name = "PATH")]
    u_obs: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Fit the vortex model to observations (--obs).
    Fit,
    /// Retrieve the surface-layer winds below the MOH line.
    Retrieve,
    /// Identical-twin experiment, optionally over --moh-sweep.
    Twin,
    /// Noise ensemble of identical twins.
    Ensemble,
    /// Classify grid nodes into observable, reachable and void.
    VoidMap,
    /// Minimum unreachable height, bisected and traced.
    H0,
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    let c = cli.common;
    let overrides = Overrides { out: c.out, seed: c.seed, sigma: c.sigma, moh: c.moh };
    let cfg = RunConfig::load(c.config.as_deref(), &overrides)?;
    if c.moh_sweep.is_some() && !matches!(cli.command, Command::Twin) {
        return Err(CliError::Config("--moh-sweep only applies to twin".into()));
    }
    let inputs = Inputs { obs: c.obs, u_obs: c.u_obs, moh_sweep: c.moh_sweep };
    match cli.command {
        Command::Fit => commands::cmd_fit(&cfg, &inputs),
        Command::Retrieve => commands::cmd_retrieve(&cfg, &inputs),
        Command::Twin => commands::cmd_twin(&cfg, &inputs),
        Command::Ensemble => commands::cmd_ensemble(&cfg, &inputs),
        Command::VoidMap => commands::cmd_void_map(&cfg, &inputs),
        Command::H0 => commands::cmd_h0(&cfg, &inputs),
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(text) = std::env::var("VORTEX_THREADS") else { return Ok(()) };
    let n: usize = text
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("VORTEX_THREADS: not a thread count: {text:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("VORTEX_THREADS: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = init_threads().and_then(|()| run(cli));
    match result {
        Ok(mut summary) => {
            // the full config is in the saved summary
            if let Some(obj) = summary.as_object_mut() {
                obj.remove("config");
            }
            let _ = writeln!(std::io::stdout().lock(), "{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
