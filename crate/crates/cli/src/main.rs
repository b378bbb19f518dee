use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use resample_cli::commands::{self, CurveRequest};
use resample_cli::{CliError, ProjectConfig};

#[derive(Parser)]
#[command(name = "resample", version, about = "Sampled-data redesign of analog controllers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Project config (JSON); the pendulum preset when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the controller and print the design report.
    Design {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Sweep h_sup over a range of performance levels.
    Curve {
        #[command(flatten)]
        common: Common,
        /// Lower end of the sweep.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        gamma_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Simulate the loop and write the trace and a summary.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Reproduce the cart-pendulum example.
    Pendulum {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(common: &Common) -> Result<ProjectConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => ProjectConfig::load(path)?,
        None => ProjectConfig::pendulum(),
    };
    if let Some(seed) = common.seed {
        cfg.reseed(seed);
    }
    Ok(cfg)
}

fn with_gamma(mut cfg: ProjectConfig, gamma: Option<f64>) -> Result<ProjectConfig, CliError> {
    if let Some(g) = gamma {
        cfg.set_gamma(g)?;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<serde_json::Value, CliError> {
    match cli.command {
        Command::Design { common, gamma } => {
            let cfg = with_gamma(load(&common)?, gamma)?;
            commands::design(&cfg, common.out.as_deref())
        }
        Command::Curve { common, gamma, gamma_max, points } => {
            let cfg = load(&common)?;
            let req = CurveRequest { gamma_min: gamma, gamma_max, points };
            let file = cfg.output.curve.clone();
            commands::curve(&cfg, &req, common.out.as_deref(), &file)
        }
        Command::Simulate { common, gamma } => {
            let cfg = with_gamma(load(&common)?, gamma)?;
            commands::simulate(&cfg, common.out.as_deref())
        }
        Command::Pendulum { out } => commands::pendulum(out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RESAMPLE_LOG", "warn")).init();
    match execute(Cli::parse()) {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report).expect("json value serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(cert) = e.certificate() {
                println!("{}", serde_json::json!({ "status": "infeasible", "certificate": cert }));
            }
            ExitCode::from(e.exit_code())
        }
    }
}
