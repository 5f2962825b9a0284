//! Cartesian parameter sweeps over `sweep.<key> = a | b | ...` lines.

use std::cmp::Ordering;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::config::{build, entries, Entry, RunConfig, KEYS};
use super::io::{csv_writer, fmt_f64, write_row};
use super::run::execute;

pub const DEFAULT_SWEEP_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    base: Vec<Entry>,
    /// `(key, values)` in file order.
    pub axes: Vec<(String, Vec<String>)>,
}

pub fn parse_sweep(text: &str) -> Result<SweepConfig> {
    parse_sweep_with_cap(text, DEFAULT_SWEEP_CAP)
}

pub fn parse_sweep_with_cap(text: &str, cap: usize) -> Result<SweepConfig> {
    let mut base = Vec::new();
    let mut axes = Vec::new();
    let mut probe = RunConfig::default();
    let mut size = 1usize;
    for e in entries(text)? {
        let err = |message: String| Error::Parse {
            line: e.line,
            key: e.key.clone(),
            message,
        };
        match e.key.strip_prefix("sweep.") {
            Some(key) => {
                if !KEYS.contains(&key) {
                    return Err(err(format!("unknown key `{key}`")));
                }
                let values: Vec<String> = e.value.split('|').map(|v| v.trim().to_string()).collect();
                for v in &values {
                    probe.clone().set(key, v).map_err(err)?;
                }
                size = size.saturating_mul(values.len());
                if size > cap {
                    return Err(err(format!("sweep has more than {cap} combinations")));
                }
                axes.push((key.to_string(), values));
            }
            None => {
                probe.set(&e.key, &e.value).map_err(err)?;
                base.push(e);
            }
        }
    }
    if axes.iter().any(|(k, _)| base.iter().any(|b| &b.key == k)) {
        return Err(Error::Parse {
            line: 0,
            key: "sweep".into(),
            message: "a key is both fixed and swept".into(),
        });
    }
    Ok(SweepConfig { base, axes })
}

impl SweepConfig {
    /// Every combination as `(key, value)` lists, axes in file order.
    pub fn combinations(&self) -> Vec<Vec<(String, String)>> {
        let mut out: Vec<Vec<(String, String)>> = vec![Vec::new()];
        for (key, values) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut next = prefix.clone();
                        next.push((key.clone(), v.clone()));
                        next
                    })
                })
                .collect();
        }
        out
    }

    pub fn config_for(&self, combo: &[(String, String)]) -> Result<RunConfig> {
        let mut all = self.base.clone();
        all.extend(combo.iter().map(|(k, v)| Entry {
            line: 0,
            key: k.clone(),
            value: v.clone(),
        }));
        build(&all)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub params: Vec<(String, String)>,
    pub cells: Vec<String>,
    pub sandwich_ok: Option<bool>,
    pub error: Option<String>,
}

pub const RESULT_COLUMNS: [&str; 12] = [
    "E0",
    "termination",
    "thm31_verdict",
    "thm32_verdict",
    "thm33_verdict",
    "T_num",
    "uncertainty",
    "T_upper",
    "T_lower_34_truncated",
    "T_lower_35",
    "sandwich_ok",
    "error",
];

fn run_one(cfg: &SweepConfig, combo: Vec<(String, String)>) -> SweepRow {
    let outcome = cfg.config_for(&combo).and_then(|c| execute(&c));
    match outcome {
        Ok(a) => {
            let r = &a.report;
            SweepRow {
                cells: vec![
                    fmt_f64(r.e0),
                    a.trajectory.termination.as_str().into(),
                    r.thm31_verdict.as_str().into(),
                    r.thm32.verdict.label().into(),
                    r.thm33.verdict.label().into(),
                    fmt_f64(r.t_num),
                    fmt_f64(r.uncertainty),
                    fmt_f64(r.t_upper),
                    fmt_f64(r.lower34.map_or(f64::NAN, |l| l.truncated)),
                    fmt_f64(r.lower35.t_lower),
                    r.sandwich_ok.to_string(),
                    String::new(),
                ],
                params: combo,
                sandwich_ok: Some(r.sandwich_ok),
                error: None,
            }
        }
        Err(e) => {
            let mut cells = vec![String::new(); RESULT_COLUMNS.len()];
            cells[RESULT_COLUMNS.len() - 1] = e.to_string();
            SweepRow {
                params: combo,
                cells,
                sandwich_ok: None,
                error: Some(e.to_string()),
            }
        }
    }
}

/// Numeric where both sides parse, textual otherwise.
fn compare_values(a: &str, b: &str) -> Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    }
}

fn compare_rows(a: &SweepRow, b: &SweepRow) -> Ordering {
    for ((_, x), (_, y)) in a.params.iter().zip(&b.params) {
        let o = compare_values(x, y);
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Runs every combination on `jobs` threads; a failing cell is recorded in its row.
pub fn sweep(cfg: &SweepConfig, jobs: usize) -> Result<Vec<SweepRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid(e.to_string()))?;
    let mut rows: Vec<SweepRow> =
        pool.install(|| cfg.combinations().into_par_iter().map(|c| run_one(cfg, c)).collect());
    rows.sort_by(compare_rows);
    Ok(rows)
}

pub fn write_sweep_csv(path: &Path, cfg: &SweepConfig, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> = cfg.axes.iter().map(|(k, _)| k.clone()).collect();
    header.extend(RESULT_COLUMNS.iter().map(|s| s.to_string()));
    write_row(&mut w, &header)?;
    for row in rows {
        let mut cells: Vec<String> = row.params.iter().map(|(_, v)| v.clone()).collect();
        cells.extend(row.cells.iter().cloned());
        write_row(&mut w, &cells)?;
    }
    w.flush()?;
    Ok(())
}
