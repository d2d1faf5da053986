use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use comc_cli::{cmd_boundary, cmd_plan, cmd_simulate, CliError, ConfigFile, ResolvedScenario, DEFAULT_BOUNDARY_Q_MAIN};

/// Coordinated on-ramp merging: control plans, simulations, ramp capacity.
#[derive(Parser)]
#[command(name = "comc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the optimal control plan of each scenario.
    Plan {
        #[command(flatten)]
        common: Common,
        /// Cross-check against an exhaustive grid search.
        #[arg(long)]
        oracle: bool,
    },
    /// Simulate each scenario in base and coordinated mode.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Maximum ramp flow that admits a plan, per mainline flow.
    Boundary {
        #[command(flatten)]
        common: Common,
        /// Mainline flows in veh/h.
        #[arg(long = "q-main", value_delimiter = ',', num_args = 1..)]
        q_main: Vec<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON scenario file; the six reference scenarios when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "COMC_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Only these scenarios (repeatable or comma-separated).
    #[arg(long, value_delimiter = ',')]
    scenario: Vec<String>,
    /// Replace the configured seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    parallel: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<ConfigFile, CliError> {
        match &self.config {
            Some(p) => ConfigFile::load(p),
            None => Ok(ConfigFile::reference()),
        }
    }

    fn scenarios(&self) -> Result<Vec<ResolvedScenario>, CliError> {
        let mut list = self.config()?.resolve(&self.scenario)?;
        if !self.seeds.is_empty() {
            for s in &mut list {
                s.seeds = self.seeds.clone();
            }
        }
        Ok(list)
    }

    fn threads(&self) -> usize {
        self.parallel
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let stdout = std::io::stdout();
    match cli.command {
        Command::Plan { common, oracle } => {
            let scenarios = common.scenarios()?;
            cmd_plan(&scenarios, Some(&common.out), oracle, stdout.lock())?;
        }
        Command::Simulate { common } => {
            let scenarios = common.scenarios()?;
            cmd_simulate(&scenarios, &common.out, common.threads(), stdout.lock())?;
        }
        Command::Boundary { common, q_main } => {
            let cfg = common.config()?;
            // Parameters come from the config defaults; the flows are swept.
            let probe = comc_cli::ScenarioConfig {
                name: "boundary".into(),
                q_main: 1800.0,
                q_ramp: 500.0,
                params: Default::default(),
            };
            let template = ResolvedScenario::new(&probe, &cfg.defaults)?.inputs;
            let flows = if q_main.is_empty() { DEFAULT_BOUNDARY_Q_MAIN.to_vec() } else { q_main };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(common.threads())
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            pool.install(|| cmd_boundary(&template, &flows, Some(&common.out), stdout.lock()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
