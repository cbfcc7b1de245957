use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use capillarity::commands::{
    cmd_norms, cmd_simulate, cmd_sweep, cmd_verify_symbols, parse_grid, NormField, Outcome,
    DEFAULT_VERIFY_GRID,
};

/// Capillary compressible Navier-Stokes solver and convergence harness.
/// Output directories are resolved against $CAPILLARITY_OUT when set.
#[derive(Parser)]
#[command(version = concat!(env!("CARGO_PKG_VERSION"), " (", env!("CAPILLARITY_GIT_DESCRIBE"), ")"))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Field {
    Q,
    U,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration.
    Simulate { config: PathBuf },
    /// Run the [sweep] family of a configuration against the local model.
    Sweep { config: PathBuf },
    /// Print the dyadic block decomposition of a snapshot as CSV.
    Norms {
        snapshot: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, value_enum, default_value = "q")]
        field: Field,
    },
    /// Check symbol, kernel and partition identities.
    VerifySymbols {
        /// `dim,n,length`; default `1,256,2π`.
        #[arg(long)]
        grid: Option<String>,
    },
}

fn finish(outcome: &Outcome) -> ExitCode {
    for line in &outcome.lines {
        println!("{line}");
    }
    if let Some(dir) = &outcome.out_dir {
        println!("outputs in {}", dir.display());
    }
    if outcome.passed() {
        ExitCode::SUCCESS
    } else {
        println!("{}", outcome.failure_json());
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> capillarity::Result<ExitCode> {
    Ok(match cli.command {
        Command::Simulate { config } => finish(&cmd_simulate(&config)?),
        Command::Sweep { config } => finish(&cmd_sweep(&config)?),
        Command::Norms { snapshot, s, beta, field } => {
            let field = match field {
                Field::Q => NormField::Density,
                Field::U => NormField::Velocity,
            };
            print!("{}", cmd_norms(&snapshot, s, beta, field)?);
            ExitCode::SUCCESS
        }
        Command::VerifySymbols { grid } => {
            let grid = grid.as_deref().map(parse_grid).transpose()?.unwrap_or(DEFAULT_VERIFY_GRID);
            finish(&cmd_verify_symbols(grid)?.0)
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            println!(
                "{}",
                serde_json::json!({ "status": "error", "failures": [e.to_string()] })
            );
            ExitCode::from(2)
        }
    }
}
