use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use swipt_mac::commands::{self, ModelChoice, SweepAxis};
use swipt_mac::config::ScenarioConfig;

/// Minimum-rate capacity regions of fading multiple-access SWIPT channels.
///
/// Log verbosity is read from SWIPT_LOG (error, warn, info, debug, trace).
#[derive(Parser, Debug)]
#[command(name = "swipt-mac", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file; the bundled reference scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// ideal, ts, ps or all.
    #[arg(long, default_value = "all")]
    model: ModelChoice,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Trace region boundaries and write boundary CSVs plus an overlay SVG.
    Region {
        #[command(flatten)]
        common: Common,
        /// Reward vectors per simplex edge.
        #[arg(long)]
        mu_grid: Option<usize>,
        /// Skip the no-minimum-rate and no-RF-transfer baselines.
        #[arg(long)]
        no_baselines: bool,
    },
    /// Sum rate across a swept parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// deficit or harvest.
        #[arg(long, default_value = "deficit")]
        axis: SweepAxis,
        /// a:b:steps; a and b take units such as uW, W or dBm.
        #[arg(long, default_value = "0uW:40uW:5")]
        range: String,
    },
    /// Simulate the buffers under the uniform-reward policy.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Run the randomized oracle and property suite.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Random per-state instances.
        #[arg(long, default_value_t = 1000)]
        instances: usize,
    },
}

fn load(common: &Common) -> Result<ScenarioConfig> {
    match &common.config {
        Some(p) => ScenarioConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ScenarioConfig::reference()),
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Region { common, mu_grid, no_baselines } => {
            let mut cfg = load(&common)?;
            if let Some(s) = common.seed {
                cfg.simulation.seed = s;
            }
            let report = commands::cmd_region(&cfg, common.model, &common.out, mu_grid, !no_baselines)?;
            for t in &report.traces {
                let ok = t.points.iter().filter(|p| p.result.is_ok()).count();
                println!("{:<11} {ok}/{} boundary points", t.name, t.points.len());
            }
            println!("wrote {} files to {}", report.files.len(), common.out.display());
        }
        Command::Sweep { common, axis, range } => {
            let mut cfg = load(&common)?;
            if let Some(s) = common.seed {
                cfg.simulation.seed = s;
            }
            let values = commands::parse_range(&range, &cfg.units()?)?;
            let report = commands::cmd_sweep(&cfg, axis, &values, common.model, &common.out)?;
            for (p, row) in report.params.iter().zip(&report.sum_rates) {
                let cells: Vec<String> = row
                    .iter()
                    .map(|v| v.map(|r| format!("{r:.6}")).unwrap_or_else(|| "-".into()))
                    .collect();
                println!("{p:.4e}  {}", cells.join("  "));
            }
        }
        Command::Simulate { common, horizon } => {
            let cfg = load(&common)?;
            let report = commands::cmd_simulate(&cfg, common.model, horizon, common.seed, &common.out)?;
            for run in &report.runs {
                println!("{}:", run.model);
                for c in &run.comparison {
                    println!("  {:<18} analytic {:<14.6e} empirical {:.6e}", c.quantity, c.analytic, c.empirical);
                }
            }
        }
        Command::Validate { common, instances } => {
            let cfg = load(&common)?;
            let report = commands::cmd_validate(&cfg, instances, common.seed.unwrap_or(1))?;
            println!("{report}");
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SWIPT_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
