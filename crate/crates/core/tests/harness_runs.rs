use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::process::Command;

use beamblow::bounds::{thm31_check, thm31_constants, Thm31Verdict};
use beamblow::functionals::energy_e;
use beamblow::harness::config::{parse_config, RunConfig};
use beamblow::harness::io::{read_key_values, TIMESERIES_COLUMNS};
use beamblow::harness::run::{execute, run, write_run};
use beamblow::harness::sweep::{parse_sweep, sweep};
use beamblow::scenarios::construct_energy_level;
use beamblow::spectra::VariationalConstants;
use beamblow::{Grid, ModelParams};

fn small(extra: &str) -> RunConfig {
    let mut cfg = parse_config("N = 24\nt_max = 0.5\n").unwrap();
    for line in extra.lines() {
        let (k, v) = line.split_once('=').unwrap();
        cfg.set(k.trim(), v).unwrap();
    }
    cfg
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn identical_configs_give_identical_files() {
    let cfg = small("");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(run(&cfg, a.path()), 0);
    assert_eq!(run(&cfg, b.path()), 0);
    let (fa, fb) = (read_all(a.path()), read_all(b.path()));
    assert_eq!(fa.len(), 6);
    assert_eq!(fa, fb);
}

#[test]
fn report_keys_are_unique_and_timeseries_has_fixed_columns() {
    let cfg = small("");
    let dir = tempfile::tempdir().unwrap();
    let art = execute(&cfg).unwrap();
    write_run(dir.path(), &cfg, &art).unwrap();
    let kv = read_key_values(&dir.path().join("report.txt")).unwrap();
    let mut seen = HashSet::new();
    for (k, _) in &kv {
        assert!(seen.insert(k.clone()), "duplicate key {k}");
    }
    for (k, _) in art.report.to_key_values() {
        assert!(seen.contains(&k), "missing key {k}");
    }
    for key in ["T_num", "uncertainty", "T_upper", "T_lower_34_truncated", "T_lower_34_with_tail", "T_lower_35", "sandwich_ok"] {
        assert!(seen.contains(key), "{key}");
    }
    let ts = fs::read_to_string(dir.path().join("timeseries.csv")).unwrap();
    assert_eq!(ts.lines().next().unwrap(), TIMESERIES_COLUMNS.join(","));
    // the negative-energy default blows up well before t = 0.5
    let get = |k: &str| kv.iter().find(|(x, _)| x == k).unwrap().1.clone();
    assert_eq!(get("thm31_verdict"), "case_i");
    assert_eq!(get("thm33_applicable"), "true");
    assert_eq!(get("blowup_detected"), "true");
    assert_eq!(get("sandwich_ok"), "true");
}

#[test]
fn zero_data_runs_quietly() {
    let art = execute(&small("preset = sine_bump\namplitude = 0\nt_max = 0.05")).unwrap();
    assert_eq!(art.trajectory.termination.as_str(), "time_limit");
    assert!(art.trajectory.snapshots.iter().all(|s| s.linf_u == 0.0));
    let r = &art.report;
    assert_eq!(r.thm31_verdict, Thm31Verdict::NotApplicable);
    assert!(!r.thm32.verdict.is_applicable() && !r.thm33.verdict.is_applicable());
    assert!(!r.detected && r.sandwich_ok);
    assert_eq!(r.lower35.t_lower, f64::INFINITY);
}

#[test]
fn energy_never_rises_beyond_the_residual() {
    let art = execute(&small("preset = sine_bump\namplitude = 20\noutput_every = 1\nt_max = 0.1")).unwrap();
    for pair in art.trajectory.snapshots.windows(2) {
        let (a, b) = (&pair[0].functionals.e, &pair[1].functionals.e);
        assert!(*b <= a + pair[1].energy_residual.abs() + 1e-12 * a.abs());
    }
}

#[test]
fn sweep_is_deterministic_and_isolates_failures() {
    let text = "N = 16\nt_max = 0.3\nsweep.r = 1.5 | 3.5 | 2\nsweep.preset = negative_energy | sine_bump\n";
    let cfg = parse_sweep(text).unwrap();
    let one = sweep(&cfg, 1).unwrap();
    let many = sweep(&cfg, 4).unwrap();
    assert_eq!(one, many);
    assert_eq!(one.len(), 6);
    let failed: Vec<_> = one.iter().filter(|r| r.error.is_some()).collect();
    assert_eq!(failed.len(), 2);
    assert!(failed.iter().all(|r| r.params[0].1 == "3.5"));
    let rs: Vec<&str> = one.iter().map(|r| r.params[0].1.as_str()).collect();
    assert_eq!(rs, ["1.5", "1.5", "2", "2", "3.5", "3.5"]);
    for row in one.iter().filter(|r| r.error.is_none()) {
        assert_eq!(row.sandwich_ok, Some(true), "{row:?}");
    }
}

#[test]
fn constructed_energies_are_exact_and_deterministic() {
    let g = Grid::line(1.0, 32).unwrap();
    let mp = ModelParams::new(3.0, 2.0, 0.5, 1.0, 1).unwrap();
    let c = VariationalConstants::compute(&g, &mp, 1).unwrap();
    let chain = thm31_constants(&mp, c.poincare_b1).unwrap();
    let d = c.well_depth_d;
    for target in [-5.0, -1.0, 0.5, d, 10.0 * d, 100.0] {
        let data = construct_energy_level(&g, &mp, target, chain.b).unwrap();
        let again = construct_energy_level(&g, &mp, target, chain.b).unwrap();
        assert_eq!(data, again);
        let e0 = energy_e(&g, &data.u0, &data.u1, &mp).unwrap();
        assert!((e0 - target).abs() <= 1e-9 * target.abs().max(1.0), "{target}: {e0}");
        let verdict = thm31_check(&g, &data.u0, &data.u1, &chain, e0).unwrap();
        let expected = if target < 0.0 { Thm31Verdict::CaseI } else { Thm31Verdict::CaseII };
        assert_eq!(verdict, expected);
    }
}

#[test]
fn cli_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_beamblow");
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "r = 1\np = 2\ngamma = 1\n").unwrap();
    let status = Command::new(bin)
        .args(["simulate", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("line 3"));

    let cfg = dir.path().join("cfg.txt");
    fs::write(&cfg, "N = 16\n").unwrap();
    let out = dir.path().join("c");
    let status = Command::new(bin)
        .args(["construct", "--energy", "10d", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let meta = read_key_values(&out.join("meta.txt")).unwrap();
    assert_eq!(meta[0], ("construction".into(), "energy_level".into()));
    assert_eq!(fs::read_to_string(out.join("u0.csv")).unwrap().lines().count(), 17);
}
