use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use beamblow::harness::config::RunConfig;
use beamblow::harness::run::{exit_code, run, run_bounds, run_construct, run_spectra};
use beamblow::harness::sweep::{parse_sweep, sweep, write_sweep_csv};
use beamblow::harness::verify::run_verify;
use beamblow::harness::parse_config;
use beamblow::Error;

#[derive(Parser)]
#[command(name = "beamblow", version, about = "Blow-up laboratory for the damped extensible beam equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for `sweep`.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Target energy (number, or multiple of the well depth such as `10d`);
    /// selects the `high_energy` preset.
    #[arg(long, global = true)]
    energy: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Grid eigenvalues, embedding constants and well depth.
    Spectra,
    /// Simulate, detect blow-up and certify the bounds.
    Simulate,
    /// Bound report for the initial data without simulating.
    Bounds,
    /// Write the initial data.
    Construct,
    /// Run every combination of the `sweep.<key>` lines.
    Sweep,
    /// Run the self-check suites.
    Verify,
}

fn load_text(cli: &Cli) -> Result<String, Error> {
    match &cli.config {
        Some(path) => Ok(std::fs::read_to_string(path)?),
        None => Ok(String::new()),
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = parse_config(&load_text(cli)?)?;
    if let Some(e) = &cli.energy {
        for (key, value) in [("energy_R", e.as_str()), ("preset", "high_energy")] {
            cfg.set(key, value).map_err(|message| Error::Parse {
                line: 0,
                key: "--energy".into(),
                message,
            })?;
        }
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> i32 {
    if let Command::Verify = cli.command {
        return run_verify();
    }
    if let Command::Sweep = cli.command {
        let result = load_text(cli).and_then(|text| {
            let cfg = parse_sweep(&text)?;
            let rows = sweep(&cfg, cli.jobs)?;
            std::fs::create_dir_all(&cli.out)?;
            write_sweep_csv(&cli.out.join("sweep.csv"), &cfg, &rows)?;
            Ok(rows.iter().filter(|r| r.error.is_some()).count())
        });
        return match result {
            Ok(0) => 0,
            Ok(failed) => {
                eprintln!("{failed} sweep cells failed");
                1
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        };
    }
    let cfg = match load_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    match cli.command {
        Command::Spectra => run_spectra(&cfg, &cli.out),
        Command::Simulate => run(&cfg, &cli.out),
        Command::Bounds => run_bounds(&cfg, &cli.out),
        Command::Construct => run_construct(&cfg, &cli.out),
        Command::Sweep | Command::Verify => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(dispatch(&cli).clamp(0, 255) as u8)
}
