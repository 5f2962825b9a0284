//! Single runs: constants, initial data, simulation, bounds, output files.

use std::fs;
use std::path::Path;

use crate::bounds::{full_report, thm31_constants, BoundReport};
use crate::dynamics::{detect_blowup, simulate, BlowupEstimate, State, StopRule, Termination, Trajectory};
use crate::error::{Error, Result};
use crate::functionals::ModelParams;
use crate::mesh::Grid;
use crate::scenarios::{preset_by_name, InitialData};
use crate::spectra::VariationalConstants;

use super::config::RunConfig;
use super::io::{fmt_f64, write_field_csv, write_key_values, write_timeseries};

/// Grid, parameters and grid constants of a configuration.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: Grid,
    pub params: ModelParams,
    pub constants: VariationalConstants,
}

pub fn setup(cfg: &RunConfig) -> Result<Setup> {
    let grid = cfg.grid()?;
    let params = cfg.model_params()?;
    let constants = VariationalConstants::compute(&grid, &params, cfg.seed)?;
    Ok(Setup {
        grid,
        params,
        constants,
    })
}

/// Initial data for the configured preset; `high_energy` uses the growth
/// constant `B` of the exponential growth criterion.
pub fn initial_data(cfg: &RunConfig, s: &Setup) -> Result<InitialData> {
    let energy_and_b = if cfg.preset == "high_energy" {
        let chain = thm31_constants(&s.params, s.constants.poincare_b1)?;
        if !chain.feasible {
            return Err(Error::ConstructionFailure(
                "growth constant B unavailable: constant chain infeasible".into(),
            ));
        }
        Some((cfg.energy_r.resolve(s.constants.well_depth_d), chain.b))
    } else {
        None
    };
    preset_by_name(&cfg.preset, &s.grid, &s.params, cfg.amplitude, energy_and_b)
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub setup: Setup,
    pub data: InitialData,
    pub trajectory: Trajectory,
    pub estimate: BlowupEstimate,
    pub report: BoundReport,
}

pub fn simulate_data(cfg: &RunConfig, s: &Setup, data: &InitialData) -> Result<(Trajectory, BlowupEstimate)> {
    let state = State::new(&s.grid, data.u0.clone(), data.u1.clone(), cfg.dt_max)?;
    let stop = StopRule {
        t_max: cfg.t_max,
        blow_threshold: cfg.blow_threshold,
    };
    let trajectory = simulate(&s.grid, &state, &s.params, &cfg.step_controls(), &stop, cfg.output_every)?;
    let estimate = detect_blowup(&trajectory.snapshots, &cfg.thresholds)?;
    Ok((trajectory, estimate))
}

/// The whole pipeline in memory.
pub fn execute(cfg: &RunConfig) -> Result<RunArtifacts> {
    let setup = setup(cfg)?;
    let data = initial_data(cfg, &setup)?;
    let (trajectory, estimate) = simulate_data(cfg, &setup, &data)?;
    let report = full_report(
        &setup.grid,
        &data.u0,
        &data.u1,
        &setup.params,
        &setup.constants,
        Some((&trajectory, &estimate)),
        &cfg.bound_options(),
    )?;
    Ok(RunArtifacts {
        setup,
        data,
        trajectory,
        estimate,
        report,
    })
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } => 2,
        Error::SolverFailure { .. } => 3,
        Error::ConstructionFailure(_) => 4,
        _ => 1,
    }
}

pub fn write_data(dir: &Path, grid: &Grid, data: &InitialData) -> Result<()> {
    write_field_csv(&dir.join("u0.csv"), grid, &data.u0)?;
    write_field_csv(&dir.join("u1.csv"), grid, &data.u1)?;
    write_key_values(&dir.join("meta.txt"), &data.meta_lines())
}

fn run_lines(a: &RunArtifacts) -> Vec<(String, String)> {
    let t = &a.trajectory;
    let mut lines = vec![
        ("termination".to_string(), t.termination.as_str().to_string()),
        ("steps".to_string(), t.steps.to_string()),
        ("failure".to_string(), t.failure.clone().unwrap_or_default()),
        ("blowup_coarse".to_string(), a.estimate.coarse.to_string()),
        ("blowup_exponent".to_string(), fmt_f64(a.estimate.exponent)),
    ];
    for (thr, time) in &a.estimate.crossings {
        lines.push((format!("crossing_{thr:e}"), fmt_f64(*time)));
    }
    lines
}

/// Writes every artifact of a finished run.
pub fn write_run(dir: &Path, cfg: &RunConfig, a: &RunArtifacts) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.txt"), cfg.serialize())?;
    write_data(dir, &a.setup.grid, &a.data)?;
    write_timeseries(&dir.join("timeseries.csv"), &a.trajectory.snapshots)?;
    let mut lines = a.report.to_key_values();
    lines.extend(run_lines(a));
    write_key_values(&dir.join("report.txt"), &lines)
}

fn mark_failed(dir: &Path, e: &Error) {
    let _ = fs::create_dir_all(dir);
    let _ = fs::write(dir.join("FAILED"), format!("{e}\n"));
}

/// Runs `body`, leaving a `FAILED` marker and mapping the error to its exit code.
pub fn guarded(dir: &Path, body: impl FnOnce() -> Result<()>) -> i32 {
    match body() {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            mark_failed(dir, &e);
            exit_code(&e)
        }
    }
}

/// `simulate`: full pipeline; a solver failure keeps partial outputs.
pub fn run(cfg: &RunConfig, dir: &Path) -> i32 {
    guarded(dir, || {
        let a = execute(cfg)?;
        write_run(dir, cfg, &a)?;
        if a.trajectory.termination == Termination::SolverFailure {
            return Err(Error::SolverFailure {
                t: a.trajectory.final_state.t,
                reason: a.trajectory.failure.clone().unwrap_or_default(),
            });
        }
        Ok(())
    })
}

/// `spectra`: grid constants only.
pub fn run_spectra(cfg: &RunConfig, dir: &Path) -> i32 {
    guarded(dir, || {
        let s = setup(cfg)?;
        fs::create_dir_all(dir)?;
        let lines: Vec<(String, String)> = s
            .constants
            .to_key_values()
            .into_iter()
            .map(|(k, v)| (k.to_string(), fmt_f64(v)))
            .collect();
        write_key_values(&dir.join("spectra.txt"), &lines)
    })
}

/// `construct`: initial data files only.
pub fn run_construct(cfg: &RunConfig, dir: &Path) -> i32 {
    guarded(dir, || {
        let s = setup(cfg)?;
        let data = initial_data(cfg, &s)?;
        fs::create_dir_all(dir)?;
        write_data(dir, &s.grid, &data)
    })
}

/// `bounds`: report on the initial data without simulating.
pub fn run_bounds(cfg: &RunConfig, dir: &Path) -> i32 {
    guarded(dir, || {
        let s = setup(cfg)?;
        let data = initial_data(cfg, &s)?;
        let report = full_report(&s.grid, &data.u0, &data.u1, &s.params, &s.constants, None, &cfg.bound_options())?;
        fs::create_dir_all(dir)?;
        let lines = report.to_key_values();
        write_key_values(&dir.join("report.txt"), &lines)?;
        let mut w = super::io::csv_writer(&dir.join("bounds.csv"))?;
        super::io::write_row(&mut w, &lines.iter().map(|(k, _)| k.clone()).collect::<Vec<_>>())?;
        super::io::write_row(&mut w, &lines.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>())?;
        w.flush()?;
        Ok(())
    })
}
