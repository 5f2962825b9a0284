//! Configuration, output files, single runs, sweeps and the self-check suite.

pub mod config;
pub mod io;
pub mod run;
pub mod sweep;
pub mod verify;

pub use config::{parse_config, EnergySpec, RunConfig};
pub use run::{execute, exit_code, run, RunArtifacts};
pub use sweep::{parse_sweep, sweep, SweepConfig, SweepRow};
