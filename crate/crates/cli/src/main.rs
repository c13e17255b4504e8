//! `longi-readout`: runs readout scenarios from JSON configs and writes
//! plot-ready CSV/JSON with a hashed manifest.

mod artifacts;
mod compare;
mod config;
mod error;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use artifacts::{sha256_hex, write_manifest, ArtifactDir, Manifest};
use config::{ExperimentConfig, Scenario};
use error::CliError;
use scenario::Stage;

#[derive(Debug, Parser)]
#[command(name = "longi-readout", version, about = "Longitudinal-readout pulse design and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output root. Overrides `output_dir` from the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// RNG seed, used by the GA scenario.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Fock truncation for master-equation runs.
    #[arg(long, global = true, value_name = "N")]
    fock: Option<usize>,

    /// Worker threads.
    #[arg(long, global = true, env = "LONGI_READOUT_THREADS", hide = true)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// Experiment config (JSON). Without it the subcommand's default scenario runs.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Modulation, g_z and boundary report (DesignPoly, DesignTrig, Baseline, CDFrame).
    Design(ConfigArg),
    /// Cavity trajectory and SNR curve (DesignPoly, DesignTrig, Baseline).
    Snr(ConfigArg),
    /// Master-equation oracle against the analytic field (Oracle).
    Simulate(ConfigArg),
    /// Floquet emulation of the counter-diabatic term (Floquet).
    Floquet(ConfigArg),
    /// Genetic pulse search (GA).
    Ga(ConfigArg),
    /// Transmon/SQUID circuit report (Circuit).
    Circuit(ConfigArg),
    /// Bang-bang minimal time (OCT).
    Oct(ConfigArg),
    /// Any scenario, every artifact.
    Run {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
    },
    /// Runs two or more configs on a shared grid and tabulates them side by side.
    Compare {
        #[arg(required = true, num_args = 2.., value_name = "CONFIG")]
        configs: Vec<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Design(_) => "design",
            Command::Snr(_) => "snr",
            Command::Simulate(_) => "simulate",
            Command::Floquet(_) => "floquet",
            Command::Ga(_) => "ga",
            Command::Circuit(_) => "circuit",
            Command::Oct(_) => "oct",
            Command::Run { .. } => "run",
            Command::Compare { .. } => "compare",
        }
    }

    /// Accepted scenarios (first is the default) and the stage to emit.
    fn scenarios(&self) -> (&'static [Scenario], Stage) {
        use Scenario::*;
        match self {
            Command::Design(_) => (&[DesignTrig, DesignPoly, Baseline, CDFrame], Stage::Design),
            Command::Snr(_) => (&[DesignTrig, DesignPoly, Baseline], Stage::Snr),
            Command::Simulate(_) => (&[Oracle], Stage::Full),
            Command::Floquet(_) => (&[Floquet], Stage::Full),
            Command::Ga(_) => (&[GA], Stage::Full),
            Command::Circuit(_) => (&[Circuit], Stage::Full),
            Command::Oct(_) => (&[OCT], Stage::Full),
            Command::Run { .. } | Command::Compare { .. } => (&[], Stage::Full),
        }
    }
}

fn load(path: Option<&Path>, default: Scenario, cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default_for(default),
    };
    cfg.apply_overrides(cli.seed, cli.fock);
    cfg.validate()?;
    Ok(cfg)
}

fn out_root(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn config_hash(command: &str, canonical: &[&[u8]]) -> String {
    let mut bytes = command.as_bytes().to_vec();
    for c in canonical {
        bytes.push(b'\n');
        bytes.extend_from_slice(c);
    }
    sha256_hex(&bytes)
}

fn echo(cfg: &ExperimentConfig) -> serde_json::Value {
    serde_json::from_slice(&cfg.canonical_json()).expect("canonical JSON parses")
}

fn execute(cli: &Cli) -> Result<PathBuf, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("LONGI_READOUT_THREADS must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let command = cli.command.name();
    match &cli.command {
        Command::Compare { configs } => {
            let cfgs = configs
                .iter()
                .map(|p| load(Some(p), Scenario::DesignTrig, cli))
                .collect::<Result<Vec<_>, _>>()?;
            let canon: Vec<Vec<u8>> = cfgs.iter().map(|c| c.canonical_json()).collect();
            let hash = config_hash(command, &canon.iter().map(|c| c.as_slice()).collect::<Vec<_>>());
            let root = out_root(cli, &cfgs[0]).join(format!("compare-{}", &hash[..12]));
            let files = compare::compare(&cfgs, &root)?;
            write_manifest(
                &root,
                Manifest {
                    tool: env!("CARGO_PKG_NAME"),
                    version: env!("CARGO_PKG_VERSION"),
                    command,
                    config_sha256: hash,
                    config: cfgs.iter().map(echo).collect::<Vec<_>>(),
                    files,
                },
            )
        }
        other => {
            let (path, (allowed, stage)) = match other {
                Command::Run { config } => (Some(config.as_path()), other.scenarios()),
                Command::Design(a)
                | Command::Snr(a)
                | Command::Simulate(a)
                | Command::Floquet(a)
                | Command::Ga(a)
                | Command::Circuit(a)
                | Command::Oct(a) => (a.config.as_deref(), other.scenarios()),
                Command::Compare { .. } => unreachable!(),
            };
            let cfg = load(path, allowed.first().copied().unwrap_or(Scenario::DesignTrig), cli)?;
            if !allowed.is_empty() && !allowed.contains(&cfg.scenario) {
                return Err(CliError::Usage(format!(
                    "`{command}` does not run scenario {:?}; use one of {allowed:?} or `run`",
                    cfg.scenario
                )));
            }
            let canon = cfg.canonical_json();
            let hash = config_hash(command, &[&canon]);
            let root = out_root(cli, &cfg).join(format!("{}-{}", cfg.scenario.slug(), &hash[..12]));
            let mut dir = ArtifactDir::create(&root, "")?;
            scenario::run(&cfg, &mut dir, stage)?;
            write_manifest(
                &root,
                Manifest {
                    tool: env!("CARGO_PKG_NAME"),
                    version: env!("CARGO_PKG_VERSION"),
                    command,
                    config_sha256: hash,
                    config: echo(&cfg),
                    files: dir.into_entries(),
                },
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            let err = CliError::Usage(first.to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match execute(&cli) {
        Ok(manifest) => {
            println!("{}", json!({ "manifest": manifest.display().to_string() }));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
