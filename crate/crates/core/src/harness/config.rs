//! Flat `key = value` run configuration.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::dynamics::{StepControls, DEFAULT_DT_GAIN, DEFAULT_RESIDUAL_TARGET, DEFAULT_THRESHOLDS};
use crate::bounds::BoundOptions;
use crate::error::{Error, Result};
use crate::functionals::ModelParams;
use crate::mesh::Grid;
use crate::scenarios::PRESET_NAMES;

/// Target energy of the `high_energy` preset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergySpec {
    Absolute(f64),
    /// Multiple of the potential well depth, written `10d`.
    WellDepth(f64),
}

impl EnergySpec {
    pub fn resolve(&self, well_depth: f64) -> f64 {
        match *self {
            EnergySpec::Absolute(v) => v,
            EnergySpec::WellDepth(k) => k * well_depth,
        }
    }

    fn parse(s: &str) -> std::result::Result<EnergySpec, String> {
        match s.strip_suffix('d') {
            Some(k) => parse_f64(k).map(EnergySpec::WellDepth),
            None => parse_f64(s).map(EnergySpec::Absolute),
        }
    }

    fn render(&self) -> String {
        match *self {
            EnergySpec::Absolute(v) => format!("{v:?}"),
            EnergySpec::WellDepth(k) => format!("{k:?}d"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    /// Interior nodes per axis.
    pub n: usize,
    pub extent: f64,
    pub p: f64,
    pub r: f64,
    pub gamma: f64,
    pub beta: f64,
    pub preset: String,
    pub amplitude: Option<f64>,
    pub energy_r: EnergySpec,
    pub seed: u64,
    pub dt_max: f64,
    /// Defaults to `1e−12·dt_max`.
    pub dt_min: Option<f64>,
    pub t_max: f64,
    pub blow_threshold: f64,
    pub output_every: usize,
    pub thresholds: Vec<f64>,
    pub mu: f64,
    pub alpha_override: Option<f64>,
    pub eps_override: Option<f64>,
    pub m_safety: f64,
    pub dt_gain: f64,
    pub residual_target: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dim: 1,
            n: 128,
            extent: 1.0,
            p: 3.0,
            r: 2.0,
            gamma: 0.5,
            beta: 1.0,
            preset: "negative_energy".into(),
            amplitude: None,
            energy_r: EnergySpec::WellDepth(10.0),
            seed: 1,
            dt_max: 1e-3,
            dt_min: None,
            t_max: 10.0,
            blow_threshold: 1e10,
            output_every: 10,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            mu: 1.0,
            alpha_override: None,
            eps_override: None,
            m_safety: 2.0,
            dt_gain: DEFAULT_DT_GAIN,
            residual_target: DEFAULT_RESIDUAL_TARGET,
        }
    }
}

pub const KEYS: [&str; 23] = [
    "dim",
    "N",
    "extent",
    "p",
    "r",
    "gamma",
    "beta",
    "preset",
    "amplitude",
    "energy_R",
    "seed",
    "dt_max",
    "dt_min",
    "t_max",
    "blow_threshold",
    "output_every",
    "thresholds",
    "mu",
    "alpha_override",
    "eps_override",
    "M_safety",
    "dt_gain",
    "residual_target",
];

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("expected a number, got `{s}`"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a finite number, got `{s}`"))
    }
}

fn parse_opt(s: &str) -> std::result::Result<Option<f64>, String> {
    if s == "none" {
        Ok(None)
    } else {
        parse_f64(s).map(Some)
    }
}

fn parse_int<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("expected a nonnegative integer, got `{s}`"))
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let value = value.trim();
        match key {
            "dim" => self.dim = parse_int(value)?,
            "N" => self.n = parse_int(value)?,
            "extent" => self.extent = parse_f64(value)?,
            "p" => self.p = parse_f64(value)?,
            "r" => self.r = parse_f64(value)?,
            "gamma" => self.gamma = parse_f64(value)?,
            "beta" => self.beta = parse_f64(value)?,
            "preset" => self.preset = value.to_string(),
            "amplitude" => self.amplitude = parse_opt(value)?,
            "energy_R" => self.energy_r = EnergySpec::parse(value)?,
            "seed" => self.seed = parse_int(value)?,
            "dt_max" => self.dt_max = parse_f64(value)?,
            "dt_min" => self.dt_min = parse_opt(value)?,
            "t_max" => self.t_max = parse_f64(value)?,
            "blow_threshold" => self.blow_threshold = parse_f64(value)?,
            "output_every" => self.output_every = parse_int(value)?,
            "thresholds" => {
                self.thresholds = value
                    .split(',')
                    .map(|t| parse_f64(t.trim()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "mu" => self.mu = parse_f64(value)?,
            "alpha_override" => self.alpha_override = parse_opt(value)?,
            "eps_override" => self.eps_override = parse_opt(value)?,
            "M_safety" => self.m_safety = parse_f64(value)?,
            "dt_gain" => self.dt_gain = parse_f64(value)?,
            "residual_target" => self.residual_target = parse_f64(value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Checks every constraint; the error names the offending key.
    pub fn check(&self) -> std::result::Result<(), (&'static [&'static str], String)> {
        if !(self.dim == 1 || self.dim == 2) {
            return Err((&["dim"], "must be 1 or 2".into()));
        }
        if self.n < 2 {
            return Err((&["N"], "need at least 2 interior nodes".into()));
        }
        if !(self.extent > 0.0) {
            return Err((&["extent"], "must be positive".into()));
        }
        if let Err(e) = self.model_params() {
            let keys: &'static [&'static str] = if !(self.r >= 1.0 && self.r < self.p) {
                &["r", "p"]
            } else if !(self.beta >= 0.0) {
                &["beta"]
            } else {
                &["gamma", "p"]
            };
            return Err((keys, e.to_string()));
        }
        if !PRESET_NAMES.contains(&self.preset.as_str()) {
            return Err((&["preset"], format!("expected one of {}", PRESET_NAMES.join(", "))));
        }
        if let Err(e) = self.step_controls().validate() {
            let key: &'static [&'static str] = if self.dt_max > 0.0 && self.dt_max.is_finite() {
                if self.dt_min.is_some() {
                    &["dt_min"]
                } else if self.dt_gain < 0.0 {
                    &["dt_gain"]
                } else {
                    &["residual_target"]
                }
            } else {
                &["dt_max"]
            };
            return Err((key, e.to_string()));
        }
        if !(self.t_max > 0.0) {
            return Err((&["t_max"], "must be positive".into()));
        }
        if !(self.blow_threshold > 0.0) {
            return Err((&["blow_threshold"], "must be positive".into()));
        }
        if self.output_every == 0 {
            return Err((&["output_every"], "must be at least 1".into()));
        }
        if self.thresholds.len() < 3
            || self.thresholds[0] <= 0.0
            || self.thresholds.windows(2).any(|w| w[0] >= w[1])
        {
            return Err((&["thresholds"], "need at least three positive ascending values".into()));
        }
        if let Err(e) = self.bound_options().validate() {
            let msg = e.to_string();
            let key: &'static [&'static str] = if msg.contains("mu ") {
                &["mu"]
            } else if msg.contains("M_safety") {
                &["M_safety"]
            } else if msg.contains("alpha") {
                &["alpha_override"]
            } else {
                &["eps_override"]
            };
            return Err((key, msg));
        }
        Ok(())
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::new(self.p, self.r, self.gamma, self.beta, self.dim)
    }

    pub fn grid(&self) -> Result<Grid> {
        match self.dim {
            1 => Grid::line(self.extent, self.n),
            2 => Grid::rect([self.extent; 2], [self.n; 2]),
            d => Err(Error::invalid(format!("dim must be 1 or 2, got {d}"))),
        }
    }

    pub fn step_controls(&self) -> StepControls {
        let mut c = StepControls::new(self.dt_max);
        if let Some(m) = self.dt_min {
            c.dt_min = m;
        }
        c.dt_gain = self.dt_gain;
        c.residual_target = self.residual_target;
        c
    }

    pub fn bound_options(&self) -> BoundOptions {
        BoundOptions {
            mu: self.mu,
            alpha_override: self.alpha_override,
            eps_override: self.eps_override,
            m_safety: self.m_safety,
        }
    }

    fn value_of(&self, key: &str) -> Option<String> {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}"));
        Some(match key {
            "dim" => self.dim.to_string(),
            "N" => self.n.to_string(),
            "extent" => format!("{:?}", self.extent),
            "p" => format!("{:?}", self.p),
            "r" => format!("{:?}", self.r),
            "gamma" => format!("{:?}", self.gamma),
            "beta" => format!("{:?}", self.beta),
            "preset" => self.preset.clone(),
            "amplitude" => return opt(self.amplitude),
            "energy_R" => self.energy_r.render(),
            "seed" => self.seed.to_string(),
            "dt_max" => format!("{:?}", self.dt_max),
            "dt_min" => return opt(self.dt_min),
            "t_max" => format!("{:?}", self.t_max),
            "blow_threshold" => format!("{:?}", self.blow_threshold),
            "output_every" => self.output_every.to_string(),
            "thresholds" => self
                .thresholds
                .iter()
                .map(|t| format!("{t:?}"))
                .collect::<Vec<_>>()
                .join(","),
            "mu" => format!("{:?}", self.mu),
            "alpha_override" => return opt(self.alpha_override),
            "eps_override" => return opt(self.eps_override),
            "M_safety" => format!("{:?}", self.m_safety),
            "dt_gain" => format!("{:?}", self.dt_gain),
            "residual_target" => format!("{:?}", self.residual_target),
            _ => return None,
        })
    }

    /// Every set key as `key = value`, one per line; reparses to an equal config.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            if let Some(v) = self.value_of(key) {
                let _ = writeln!(out, "{key} = {v}");
            }
        }
        out
    }
}

/// One `key = value` line with its 1-based line number.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits text into entries, rejecting duplicates and malformed lines.
pub(crate) fn entries(text: &str) -> Result<Vec<Entry>> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| Error::Parse {
            line,
            key: body.to_string(),
            message: "expected `key = value`".into(),
        })?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if let Some(prev) = seen.insert(key.clone(), line) {
            return Err(Error::Parse {
                line,
                key,
                message: format!("duplicate key, first set on line {prev}"),
            });
        }
        out.push(Entry { line, key, value });
    }
    Ok(out)
}

/// Applies entries to the defaults and validates the result.
pub(crate) fn build(entries: &[Entry]) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for e in entries {
        cfg.set(&e.key, &e.value).map_err(|message| Error::Parse {
            line: e.line,
            key: e.key.clone(),
            message,
        })?;
    }
    cfg.check().map_err(|(keys, message)| {
        // blame the involved key set last in the text
        let line_of = |k: &str| entries.iter().find(|e| e.key == k).map_or(0, |e| e.line);
        let key = keys.iter().copied().max_by_key(|k| line_of(k)).unwrap_or("config");
        Error::Parse {
            line: line_of(key),
            key: key.to_string(),
            message,
        }
    })?;
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let entries = entries(text)?;
    if let Some(e) = entries.iter().find(|e| e.key.starts_with("sweep.")) {
        return Err(Error::Parse {
            line: e.line,
            key: e.key.clone(),
            message: "sweep lines are only accepted by the sweep command".into(),
        });
    }
    build(&entries)
}
