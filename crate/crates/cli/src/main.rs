use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kmslab::config::RunConfig;
use kmslab::{commands, exit, CliError};

#[derive(Parser)]
#[command(name = "kmslab", version, about = "Kinetic, Lindblad and KMS experiments on small fermion lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// `key = value` config file.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set beta=0.5`. Repeatable; applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Also write gnuplot data files and scripts.
    #[arg(long, global = true)]
    plots: bool,
    /// Print the resolved config and exit.
    #[arg(long, global = true)]
    show_config: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Relax random momentum occupations to a stationary state.
    Kinetic,
    /// Evolve a random state under the jump operator built from H'.
    Lindblad,
    /// Line test, two-point check and beta fit on an invariant state.
    KmsCheck,
    /// Commutator defects of the gamma K + V/gamma family.
    Commute,
    /// Spatial clustering of a Gibbs state on a ring.
    Cluster,
    /// Lieb-Robinson sweep and cone fit.
    Lr,
    /// Interaction-picture dynamics against the Lindblad reference.
    Scaling,
    /// Run the acceptance suite.
    Accept,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Kinetic => "kinetic",
            Command::Lindblad => "lindblad",
            Command::KmsCheck => "kms-check",
            Command::Commute => "commute",
            Command::Cluster => "cluster",
            Command::Lr => "lr",
            Command::Scaling => "scaling",
            Command::Accept => "accept",
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::default();
    if let Some(path) = &cli.config {
        config.apply_file(path)?;
    }
    for kv in &cli.overrides {
        config.apply_override(kv)?;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    if cli.plots {
        config.plots = true;
    }
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::PASS });
        }
    };
    let result = resolve(&cli).and_then(|config| {
        if cli.show_config {
            print!("{config}");
            return Ok(commands::Outcome { status: exit::PASS, summary: String::new() });
        }
        commands::run(cli.command.name(), &config)
    });
    match result {
        Ok(outcome) => {
            if !outcome.summary.is_empty() {
                println!("{}", outcome.summary);
            }
            ExitCode::from(outcome.status)
        }
        Err(e) => {
            eprintln!("kmslab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
