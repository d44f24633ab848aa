//! Config-driven experiment runner for the jump-support library.
//!
//! Every run consumes a JSON config (plus flat `--set KEY=VALUE`
//! overrides), writes CSV artifacts and a manifest into the output
//! directory, and is reproducible byte-for-byte from (config, seed),
//! independently of `--jobs`.

mod config;
mod ops;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

/// Failure classes mapped to exit codes: config 1, numerical 2,
/// negative verdict under `--expect-positive` 3.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numeric(String),
    Negative(String),
}

impl From<jump_support::Error> for RunError {
    fn from(e: jump_support::Error) -> Self {
        RunError::Numeric(e.to_string())
    }
}

impl RunError {
    fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 1,
            RunError::Numeric(_) => 2,
            RunError::Negative(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            RunError::Config(m) | RunError::Numeric(m) | RunError::Negative(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "jump-support",
    version,
    about = "Jump-SDE simulation, skeleton paths, and support diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config's output_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker count; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Flat config overrides, dotted path = JSON value.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Exit 3 when a check subcommand reaches a negative verdict.
    #[arg(long, global = true)]
    expect_positive: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrability subspace, compensator shift, moments, scaling.
    AnalyzeLevy,
    /// Solve the skeleton spec and export the path.
    Skeleton,
    /// Simulate full-SDE paths.
    Simulate,
    /// Monte-Carlo support probability against the skeleton.
    SupportCheck,
    /// Pathwise skeleton structure of the truncated dynamics.
    InclusionCheck,
    /// Tilt construction plus the density martingale test.
    TiltCheck,
    /// Reachability certificate (cone or control route).
    Reach,
    /// Distance report between two solved skeletons.
    Metric,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::AnalyzeLevy => "analyze-levy",
            Command::Skeleton => "skeleton",
            Command::Simulate => "simulate",
            Command::SupportCheck => "support-check",
            Command::InclusionCheck => "inclusion-check",
            Command::TiltCheck => "tilt-check",
            Command::Reach => "reach",
            Command::Metric => "metric",
        }
    }
}

fn run(cli: &Cli) -> Result<Vec<String>, RunError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| RunError::Config("--config PATH is required".into()))?;
    let (cfg, canonical) = config::load(config_path, &cli.set, cli.seed, cli.out.clone())?;
    if let Some(jobs) = cli.jobs {
        // Ignore the error when a global pool already exists (tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let out = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("."));
    let lines = match cli.command {
        Command::AnalyzeLevy => ops::analyze_levy(&cfg, &out)?,
        Command::Skeleton => ops::skeleton(&cfg, &out)?,
        Command::Simulate => ops::simulate(&cfg, &out)?,
        Command::SupportCheck => ops::support_check(&cfg, &out, cli.expect_positive)?,
        Command::InclusionCheck => ops::inclusion_check(&cfg, &out, cli.expect_positive)?,
        Command::TiltCheck => ops::tilt_check(&cfg, &out, cli.expect_positive)?,
        Command::Reach => ops::reach(&cfg, &out, cli.expect_positive)?,
        Command::Metric => ops::metric(&cfg, &out)?,
    };
    let digest = Sha256::digest(canonical.as_bytes());
    let config_sha256: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    let resolved: serde_json::Value =
        serde_json::from_str(&canonical).expect("canonical config parses");
    let manifest = serde_json::json!({
        "subcommand": cli.command.name(),
        "invocation": std::env::args().collect::<Vec<String>>(),
        "seed": cfg.seed(),
        "config_sha256": config_sha256,
        "config": resolved,
        "version": env!("CARGO_PKG_VERSION"),
    });
    std::fs::create_dir_all(&out)
        .map_err(|e| RunError::Config(format!("cannot create {}: {e}", out.display())))?;
    std::fs::write(
        out.join("run_manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )
    .map_err(|e| RunError::Config(format!("cannot write manifest: {e}")))?;
    Ok(lines)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
