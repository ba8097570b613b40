use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use chrono::{NaiveDate, Utc};
use clap::{Parser, Subcommand};
use nun_cli::commands::{self, Failure, EXIT_OK};
use nun_cli::{Deployment, Mode};
use nun_core::fixture::Scenario;
use nun_core::{Clock, SystemClock};
use nun_netd::Role;

/// Resolve context-sensitive names, run the demo servers and benchmark
/// discovery.
#[derive(Parser)]
#[command(name = "nun", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve a name relative to an initial resource.
    Resolve {
        /// Deployment config file.
        #[arg(long)]
        config: PathBuf,
        /// Alias from the config, or a resource literal `[<type> <spec>]`.
        #[arg(long)]
        initial: String,
        /// Cache resolutions for their validity period.
        #[arg(long)]
        cache: bool,
        /// The name, e.g. "(today meeting moderator email)".
        name: String,
    },
    /// Run one server in the foreground.
    Serve {
        #[arg(long, value_parser = parse_role)]
        role: Role,
        #[arg(long)]
        config: PathBuf,
        /// Bind address; defaults to the role's address in the config.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Time a discovery scenario with the naming system and by hand.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        scenario: u8,
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
        #[arg(long, value_enum, default_value_t = Mode::Both)]
        mode: Mode,
        /// Let the naming system cache resolutions between iterations.
        #[arg(long)]
        cache: bool,
    },
    /// Write the demo deployment config.
    Fixture {
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Day the events take place on (UTC); today when absent.
        #[arg(long)]
        day: Option<NaiveDate>,
        #[arg(long, default_value_t = 7401)]
        base_port: u16,
    },
}

fn parse_role(s: &str) -> Result<Role, String> {
    s.parse()
}

fn load(path: &Path) -> Result<Deployment, Failure> {
    Deployment::load(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    match cli.command {
        Command::Resolve {
            config,
            initial,
            cache,
            name,
        } => commands::cmd_resolve(&load(&config)?, clock, &initial, &name, cache, &mut io::stdout()),
        Command::Serve { role, config, listen } => {
            let server = commands::start_role(&load(&config)?, role, listen.as_deref(), clock)?;
            println!("{role} listening on {}", server.local_addr());
            server.wait();
            Ok(())
        }
        Command::Bench {
            config,
            scenario,
            iterations,
            mode,
            cache,
        } => {
            let scenario = Scenario::from_number(scenario).expect("range checked by clap");
            let report = commands::cmd_bench(&load(&config)?, clock, scenario, iterations, mode, cache)?;
            print!("{report}");
            Ok(())
        }
        Command::Fixture { out, day, base_port } => {
            let text = commands::fixture_config(day.unwrap_or_else(|| Utc::now().date_naive()), base_port)?;
            match out {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
