//! Time integration of the semi-discrete beam system
//!
//! ```text
//! u' = v
//! v' = −B u + M(‖∇u‖²) L u + L v − |v|^{r−1}v + |u|^{p−1}u
//! ```
//!
//! with `L` the Dirichlet Laplacian and `B` the clamped biharmonic.
//!
//! Each step is Crank–Nicolson in the midpoint velocity `w = (vⁿ + vⁿ⁺¹)/2`:
//! the stiff linear terms are implicit, the damping is linearized about a
//! reference velocity, and the Kirchhoff coefficient and source are lagged in
//! a predictor stage and replaced by discrete gradients between `uⁿ` and the
//! predicted state in a single corrector stage. Both stages are one SPD solve.

use crate::error::{Error, Result};
use crate::functionals::{kirchhoff_unchecked, FunctionalSnapshot, ModelParams, NormPieces};
use crate::linsolve::{conjugate_gradient, CgOptions};
use crate::mesh::{self, Field, Grid};
use crate::spectra::Operator;

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Field,
    /// Velocity `u_t`.
    pub v: Field,
    pub dt: f64,
}

impl State {
    pub fn new(grid: &Grid, u: Field, v: Field, dt: f64) -> Result<State> {
        grid.check(&u)?;
        grid.check(&v)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("time step must be positive, got {dt}")));
        }
        Ok(State { t: 0.0, u, v, dt })
    }
}

/// Step size controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControls {
    pub dt_max: f64,
    pub dt_min: f64,
    /// Coefficient `c` of the norm-based step reduction.
    pub dt_gain: f64,
    /// Per-step energy residual, relative to `max(1, |E|)`, above which the
    /// next step is halved.
    pub residual_target: f64,
    /// Compliant steps before the step is allowed to double again.
    pub recovery_steps: usize,
}

impl StepControls {
    pub fn new(dt_max: f64) -> StepControls {
        StepControls {
            dt_max,
            dt_min: 1e-12 * dt_max,
            dt_gain: DEFAULT_DT_GAIN,
            residual_target: DEFAULT_RESIDUAL_TARGET,
            recovery_steps: 20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(Error::invalid("dt_max must be positive"));
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt_max) {
            return Err(Error::invalid("need 0 < dt_min < dt_max"));
        }
        if !(self.dt_gain >= 0.0 && self.dt_gain.is_finite()) {
            return Err(Error::invalid("dt_gain must be >= 0"));
        }
        if !(self.residual_target > 0.0) {
            return Err(Error::invalid("residual_target must be positive"));
        }
        Ok(())
    }
}

pub const DEFAULT_DT_GAIN: f64 = 1e-12;

/// Steps whose residual exceeds this multiple of the target are redone.
const REJECT_FACTOR: f64 = 100.0;
pub const DEFAULT_RESIDUAL_TARGET: f64 = 1e-6;

/// Norm-based step `clamp(dt_max / (1 + c(‖u‖_{p+1}^{p−1} + ‖v‖_{r+1}^{r−1})), dt_min, dt_max)`.
pub fn adapt_dt(grid: &Grid, state: &State, params: &ModelParams, controls: &StepControls) -> Result<f64> {
    grid.check(&state.u)?;
    grid.check(&state.v)?;
    let lp1 = mesh::norm_lq(grid, &state.u, params.p + 1.0)?;
    let lr1 = mesh::norm_lq(grid, &state.v, params.r + 1.0)?;
    Ok(norm_based_dt(lp1, lr1, params, controls).clamp(controls.dt_min, controls.dt_max))
}

fn norm_based_dt(lp1_u: f64, lr1_v: f64, params: &ModelParams, controls: &StepControls) -> f64 {
    let growth = lp1_u.powf(params.p - 1.0) + lr1_v.powf(params.r - 1.0);
    controls.dt_max / (1.0 + controls.dt_gain * growth)
}

/// Stateful controller: the norm-based step times a scale that halves on
/// residual spikes and doubles (up to 1) after a run of compliant steps.
#[derive(Debug, Clone)]
pub struct DtController {
    pub controls: StepControls,
    scale: f64,
    compliant: usize,
}

impl DtController {
    pub fn new(controls: StepControls) -> DtController {
        DtController {
            controls,
            scale: 1.0,
            compliant: 0,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Halves the scale after a rejected step.
    pub fn reject(&mut self) {
        self.scale *= 0.5;
        self.compliant = 0;
    }

    /// Next step from the current norms and the last step's normalized residual.
    pub fn next(&mut self, lp1_u: f64, lr1_v: f64, params: &ModelParams, last_residual: Option<f64>) -> Result<f64> {
        if let Some(res) = last_residual {
            if !(res <= self.controls.residual_target) {
                self.scale *= 0.5;
                self.compliant = 0;
            } else {
                self.compliant += 1;
                if self.compliant >= self.controls.recovery_steps {
                    self.scale = (2.0 * self.scale).min(1.0);
                    self.compliant = 0;
                }
            }
        }
        let dt = self.scale * norm_based_dt(lp1_u, lr1_v, params, &self.controls);
        if !(dt >= self.controls.dt_min) {
            return Err(Error::NumericalFailure(format!(
                "time step {dt:.3e} fell below dt_min {:.3e}",
                self.controls.dt_min
            )));
        }
        Ok(dt.min(self.controls.dt_max))
    }
}

#[inline]
fn damping(v: f64, r: f64) -> f64 {
    if r == 1.0 {
        v
    } else {
        v.abs().powf(r - 1.0) * v
    }
}

#[inline]
fn damping_slope(v: f64, r: f64) -> f64 {
    if r == 1.0 {
        1.0
    } else {
        r * v.abs().powf(r - 1.0)
    }
}

#[inline]
fn source(u: f64, p: f64) -> f64 {
    u.abs().powf(p - 1.0) * u
}

/// `(f(b) − f(a))/(b − a)`, or `f'((a+b)/2)` when the difference is too small
/// to divide by safely.
#[inline]
fn discrete_gradient(a: f64, b: f64, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> f64 {
    let diff = b - a;
    if diff.abs() > 1e-6 * a.abs().max(b.abs()) {
        (f(b) - f(a)) / diff
    } else {
        df(0.5 * (a + b))
    }
}

/// Reusable buffers and operator diagonals for one grid.
pub struct Stepper<'a> {
    grid: &'a Grid,
    params: ModelParams,
    diag_b: Vec<f64>,
    diag_neg_l: Vec<f64>,
    cg: CgOptions,
    lu: Vec<f64>,
    bu: Vec<f64>,
    rhs: Vec<f64>,
    slope: Vec<f64>,
    diag: Vec<f64>,
    src: Vec<f64>,
    w: Vec<f64>,
    u_star: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
    s3: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(grid: &'a Grid, params: &ModelParams) -> Result<Stepper<'a>> {
        params.validate()?;
        let n = grid.len();
        Ok(Stepper {
            grid,
            params: *params,
            diag_b: Operator::ClampedBiharmonic.diagonal(grid),
            diag_neg_l: Operator::DirichletLaplacian.diagonal(grid),
            cg: CgOptions {
                rel_tol: 1e-10,
                max_iter: 20 * n + 1000,
            },
            lu: vec![0.0; n],
            bu: vec![0.0; n],
            rhs: vec![0.0; n],
            slope: vec![0.0; n],
            diag: vec![0.0; n],
            src: vec![0.0; n],
            w: vec![0.0; n],
            u_star: vec![0.0; n],
            s1: vec![0.0; n],
            s2: vec![0.0; n],
            s3: vec![0.0; n],
        })
    }

    fn kirchhoff_primitive(&self, s: f64) -> f64 {
        let ModelParams { beta, gamma, .. } = self.params;
        if beta == 0.0 {
            s
        } else {
            s + beta * s.powf(gamma + 1.0) / (gamma + 1.0)
        }
    }

    /// Solves for the midpoint velocity into `self.w`, with `self.src` holding
    /// the source and `w_ref` the linearization point of the damping.
    fn midpoint_solve(&mut self, u: &[f64], v: &[f64], w_ref: &[f64], m_star: f64, dt: f64) -> Result<()> {
        let grid = self.grid;
        let n = grid.len();
        let r = self.params.r;
        mesh::laplacian_into(grid, u, &mut self.lu);
        mesh::biharmonic_into(grid, u, &mut self.bu, &mut self.s1);
        let a = 0.25 * dt * dt;
        let hdt = 0.5 * dt;
        for i in 0..n {
            let k_u = self.bu[i] - m_star * self.lu[i];
            self.slope[i] = damping_slope(w_ref[i], r);
            self.rhs[i] = v[i] + hdt * (-k_u + self.src[i] - damping(w_ref[i], r) + self.slope[i] * w_ref[i]);
            self.diag[i] =
                1.0 + a * (self.diag_b[i] + m_star * self.diag_neg_l[i]) + hdt * self.diag_neg_l[i] + hdt * self.slope[i];
        }
        self.w.copy_from_slice(w_ref);
        let (s2, s3, slope) = (&mut self.s2, &mut self.s3, &self.slope);
        let apply = |x: &[f64], out: &mut [f64]| {
            mesh::biharmonic_into(grid, x, out, s2);
            mesh::laplacian_into(grid, x, s3);
            for i in 0..x.len() {
                out[i] = x[i] + a * (out[i] - m_star * s3[i]) - hdt * s3[i] + hdt * slope[i] * x[i];
            }
        };
        conjugate_gradient(apply, &self.rhs, &mut self.w, Some(&self.diag), self.cg)?;
        if !self.w.iter().all(|x| x.is_finite()) {
            return Err(Error::NumericalFailure("non-finite midpoint velocity".into()));
        }
        Ok(())
    }

    /// Advances `state` by `dt`.
    pub fn step(&mut self, state: &State, dt: f64) -> Result<State> {
        let fail = |reason: String| Error::SolverFailure { t: state.t, reason };
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("time step must be positive, got {dt}")));
        }
        self.grid.check(&state.u)?;
        self.grid.check(&state.v)?;
        let grid = self.grid;
        let n = grid.len();
        let ModelParams { p, .. } = self.params;
        let u = state.u.values();
        let v = state.v.values();

        // predictor: coefficients frozen at uⁿ, damping about vⁿ
        mesh::laplacian_into(grid, u, &mut self.s1);
        let g_n = -mesh::dot(grid, &self.s1, u);
        let m_n = kirchhoff_unchecked(g_n, &self.params);
        for i in 0..n {
            self.src[i] = source(u[i], p);
        }
        self.midpoint_solve(u, v, v, m_n, dt).map_err(|e| fail(format!("predictor: {e}")))?;
        for i in 0..n {
            self.u_star[i] = u[i] + dt * self.w[i];
        }

        // corrector: discrete gradients between uⁿ and the predicted state
        mesh::laplacian_into(grid, &self.u_star, &mut self.s1);
        let g_star = -mesh::dot(grid, &self.s1, &self.u_star);
        let m_star = discrete_gradient(
            g_n,
            g_star,
            |s| self.kirchhoff_primitive(s),
            |s| kirchhoff_unchecked(s.max(0.0), &self.params),
        );
        for i in 0..n {
            self.src[i] = discrete_gradient(
                u[i],
                self.u_star[i],
                |x| x.abs().powf(p + 1.0) / (p + 1.0),
                |x| source(x, p),
            );
        }
        let w_pred = self.w.clone();
        self.midpoint_solve(u, v, &w_pred, m_star, dt).map_err(|e| fail(format!("corrector: {e}")))?;

        let mut u_new = vec![0.0; n];
        let mut v_new = vec![0.0; n];
        for i in 0..n {
            u_new[i] = u[i] + dt * self.w[i];
            v_new[i] = 2.0 * self.w[i] - v[i];
        }
        if !u_new.iter().chain(&v_new).all(|x| x.is_finite()) {
            return Err(fail("non-finite state".into()));
        }
        Ok(State {
            t: state.t + dt,
            u: Field::from_vec(u_new),
            v: Field::from_vec(v_new),
            dt,
        })
    }
}

/// One step with freshly allocated buffers.
pub fn step(grid: &Grid, state: &State, params: &ModelParams, dt: f64) -> Result<State> {
    Stepper::new(grid, params)?.step(state, dt)
}

/// `‖v‖_{r+1}^{r+1} + ‖∇v‖²`, the energy dissipation rate.
pub fn dissipation_rate(grid: &Grid, v: &Field, params: &ModelParams) -> Result<f64> {
    grid.check(v)?;
    Ok(dissipation_rate_slice(grid, v.values(), params, &mut vec![0.0; v.len()]))
}

fn dissipation_rate_slice(grid: &Grid, v: &[f64], params: &ModelParams, scratch: &mut [f64]) -> f64 {
    mesh::laplacian_into(grid, v, scratch);
    mesh::lq_power_sum(grid, v, params.r + 1.0) - mesh::dot(grid, scratch, v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    TimeLimit,
    BlowupThreshold,
    SolverFailure,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::TimeLimit => "time_limit",
            Termination::BlowupThreshold => "blowup_threshold",
            Termination::SolverFailure => "solver_failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    /// Step that produced this state.
    pub dt: f64,
    pub functionals: FunctionalSnapshot,
    pub linf_u: f64,
    /// `(u, u_t)`
    pub inner_uv: f64,
    pub dissipation_rate: f64,
    /// Time integral of the dissipation rate since `t = 0`, by the trapezoid
    /// rule on every step.
    pub dissipated: f64,
    /// Energy balance defect since the previous snapshot.
    pub energy_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
    /// Last good state.
    pub final_state: State,
    pub steps: usize,
    /// Reason attached to a solver failure.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub t_max: f64,
    /// Bound on `‖u‖_∞`.
    pub blow_threshold: f64,
}

struct Tracker {
    pieces: NormPieces,
    rate: f64,
    linf: f64,
    lr1_v: f64,
    inner_uv: f64,
}

impl Tracker {
    fn of(grid: &Grid, s: &State, params: &ModelParams, op: &mut [f64], scratch: &mut [f64]) -> Tracker {
        let pieces = NormPieces::of_slices(grid, s.u.values(), Some(s.v.values()), params, op, scratch);
        Tracker {
            pieces,
            rate: dissipation_rate_slice(grid, s.v.values(), params, scratch),
            linf: s.u.max_abs(),
            lr1_v: mesh::lq_power_sum(grid, s.v.values(), params.r + 1.0).powf(1.0 / (params.r + 1.0)),
            inner_uv: mesh::dot(grid, s.u.values(), s.v.values()),
        }
    }

    fn snapshot(&self, t: f64, dt: f64, params: &ModelParams, dissipated: f64, residual: f64) -> Snapshot {
        Snapshot {
            t,
            dt,
            functionals: FunctionalSnapshot::from_pieces(&self.pieces, params),
            linf_u: self.linf,
            inner_uv: self.inner_uv,
            dissipation_rate: self.rate,
            dissipated,
            energy_residual: residual,
        }
    }
}

/// Integrates from `initial` until `t_max`, `‖u‖_∞ ≥ blow_threshold`, or a
/// solver failure; the latter ends the trajectory rather than erroring.
pub fn simulate(
    grid: &Grid,
    initial: &State,
    params: &ModelParams,
    controls: &StepControls,
    stop: &StopRule,
    output_every: usize,
) -> Result<Trajectory> {
    controls.validate()?;
    if output_every == 0 {
        return Err(Error::invalid("output_every must be >= 1"));
    }
    if !(stop.t_max > initial.t) || !(stop.blow_threshold > 0.0) {
        return Err(Error::invalid("stop rule needs t_max > t0 and a positive blow threshold"));
    }
    if !initial.u.is_finite() || !initial.v.is_finite() {
        return Err(Error::invalid("initial state is not finite"));
    }
    let mut stepper = Stepper::new(grid, params)?;
    let n = grid.len();
    let (mut op, mut scratch) = (vec![0.0; n], vec![0.0; n]);

    let mut state = initial.clone();
    let mut track = Tracker::of(grid, &state, params, &mut op, &mut scratch);
    let mut dissipated = 0.0;
    let mut snapshots = vec![track.snapshot(state.t, state.dt, params, 0.0, 0.0)];
    let mut last_snap = (track.pieces.energy(params), 0.0);
    let mut controller = DtController::new(*controls);
    let mut last_residual = None;
    let mut steps = 0usize;
    let mut failure = None;

    let termination = 'run: loop {
        if track.linf >= stop.blow_threshold {
            break Termination::BlowupThreshold;
        }
        if state.t >= stop.t_max {
            break Termination::TimeLimit;
        }
        let lp1 = track.pieces.source_pow.powf(1.0 / (params.p + 1.0));
        let e_old = track.pieces.energy(params);
        // a failed or grossly inaccurate step is retried at half the size
        let (next, next_track, dt, increment, e_new) = loop {
            let mut dt = match controller.next(lp1, track.lr1_v, params, last_residual.take()) {
                Ok(dt) => dt,
                Err(e) => {
                    failure = Some(failure.take().map_or(e.to_string(), |f| format!("{f}; {e}")));
                    break 'run Termination::SolverFailure;
                }
            };
            let clipped = state.t + dt >= stop.t_max;
            if clipped {
                dt = stop.t_max - state.t;
            }
            let mut next = match stepper.step(&state, dt) {
                Ok(s) => s,
                Err(e) => {
                    failure = Some(e.to_string());
                    controller.reject();
                    continue;
                }
            };
            if clipped {
                next.t = stop.t_max;
            }
            let next_track = Tracker::of(grid, &next, params, &mut op, &mut scratch);
            let e_new = next_track.pieces.energy(params);
            let increment = 0.5 * dt * (track.rate + next_track.rate);
            let residual = (e_new - e_old + increment).abs() / e_old.abs().max(1.0);
            if !(residual <= REJECT_FACTOR * controls.residual_target) {
                failure = Some(format!("step residual {residual:.3e} at t = {}", state.t));
                controller.reject();
                continue;
            }
            failure = None;
            last_residual = Some(residual);
            break (next, next_track, dt, increment, e_new);
        };
        dissipated += increment;
        state = next;
        track = next_track;
        steps += 1;
        if steps % output_every == 0 {
            let residual = e_new - last_snap.0 + (dissipated - last_snap.1);
            snapshots.push(track.snapshot(state.t, dt, params, dissipated, residual));
            last_snap = (e_new, dissipated);
        }
    };

    if snapshots.last().map(|s| s.t) != Some(state.t) {
        let e = track.pieces.energy(params);
        let residual = e - last_snap.0 + (dissipated - last_snap.1);
        snapshots.push(track.snapshot(state.t, state.dt, params, dissipated, residual));
    }
    Ok(Trajectory {
        snapshots,
        termination,
        final_state: state,
        steps,
        failure,
    })
}

/// Balance defects `r_k = E_{k+1} − E_k + ∫_{t_k}^{t_{k+1}} dissipation` between
/// consecutive snapshots, and `max |r_k| / max(1, |E_k|)`.
pub fn energy_residual(snapshots: &[Snapshot]) -> Result<(Vec<f64>, f64)> {
    if snapshots.len() < 2 {
        return Err(Error::invalid("energy residual needs at least two snapshots"));
    }
    let mut series = Vec::with_capacity(snapshots.len() - 1);
    let mut worst = 0.0f64;
    for pair in snapshots.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let r = b.functionals.e - a.functionals.e + (b.dissipated - a.dissipated);
        worst = worst.max(r.abs() / a.functionals.e.abs().max(1.0));
        series.push(r);
    }
    Ok((series, worst))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupEstimate {
    pub t_num: f64,
    pub uncertainty: f64,
    /// `(threshold, first crossing time)` for every threshold crossed.
    pub crossings: Vec<(f64, f64)>,
    pub detected: bool,
    /// Set when the tail was too short for a pole fit.
    pub coarse: bool,
    /// Fitted exponent `κ` in `K(T − t)^{−κ}`; NaN without a fit.
    pub exponent: f64,
}

pub const DEFAULT_THRESHOLDS: [f64; 4] = [1e2, 1e4, 1e6, 1e8];

/// Locates threshold crossings of `‖u‖_{p+1}` and fits a pole `K(T − t)^{−κ}`
/// to the tail after the first crossing.
pub fn detect_blowup(snapshots: &[Snapshot], thresholds: &[f64]) -> Result<BlowupEstimate> {
    let series: Vec<(f64, f64)> = snapshots.iter().map(|s| (s.t, s.functionals.lp1_u)).collect();
    detect_blowup_series(&series, thresholds)
}

/// [`detect_blowup`] on raw `(t, ‖u‖_{p+1})` samples.
pub fn detect_blowup_series(series: &[(f64, f64)], thresholds: &[f64]) -> Result<BlowupEstimate> {
    if thresholds.len() < 3 {
        return Err(Error::invalid("need at least three thresholds"));
    }
    if thresholds.windows(2).any(|w| !(w[0] < w[1])) || !(thresholds[0] > 0.0) {
        return Err(Error::invalid("thresholds must be positive and strictly ascending"));
    }
    let mut crossings = Vec::new();
    for &thr in thresholds {
        let Some(k) = series.iter().position(|&(_, y)| y >= thr) else {
            break;
        };
        let t = if k == 0 {
            series[0].0
        } else {
            let (t0, y0) = series[k - 1];
            let (t1, y1) = series[k];
            if y0 > 0.0 {
                let s = (thr.ln() - y0.ln()) / (y1.ln() - y0.ln());
                t0 + s * (t1 - t0)
            } else {
                t1
            }
        };
        crossings.push((thr, t));
    }
    let detected = crossings.len() == thresholds.len();
    if !detected {
        return Ok(BlowupEstimate {
            t_num: f64::NAN,
            uncertainty: f64::NAN,
            crossings,
            detected,
            coarse: false,
            exponent: f64::NAN,
        });
    }
    let last_cross = crossings.last().unwrap().1;
    let t_first = crossings[0].1;
    let tail: Vec<(f64, f64)> = series
        .iter()
        .filter(|&&(t, y)| t >= t_first && y > 0.0)
        .map(|&(t, y)| (t, y.ln()))
        .collect();
    if tail.len() < 5 {
        return Ok(BlowupEstimate {
            t_num: last_cross,
            uncertainty: 0.0,
            crossings,
            detected,
            coarse: true,
            exponent: f64::NAN,
        });
    }
    let t_last = tail.last().unwrap().0;
    let span = (t_last - tail[0].0).max(f64::EPSILON * t_last.abs().max(1.0));

    // least-squares fit of ln y = ln K − κ ln(T − t) for a candidate T
    let fit = |offset: f64| -> (f64, f64) {
        let big_t = t_last + offset;
        let m = tail.len() as f64;
        let xs: Vec<f64> = tail.iter().map(|&(t, _)| (big_t - t).ln()).collect();
        let mx = xs.iter().sum::<f64>() / m;
        let my = tail.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&tail).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let ssr = xs
            .iter()
            .zip(&tail)
            .map(|(x, p)| (p.1 - my - slope * (x - mx)).powi(2))
            .sum();
        (ssr, -slope)
    };
    // coarse scan in log offset, then golden section around the best cell
    let (lo, hi) = ((span * 1e-12).ln(), span.ln());
    let cells = 240;
    let at = |k: usize| lo + (hi - lo) * k as f64 / cells as f64;
    let best = (0..=cells)
        .min_by(|&a, &b| fit(at(a).exp()).0.total_cmp(&fit(at(b).exp()).0))
        .unwrap();
    let (mut a, mut b) = (at(best.saturating_sub(1)), at((best + 1).min(cells)));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (fit(c.exp()).0, fit(d.exp()).0);
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = fit(c.exp()).0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = fit(d.exp()).0;
        }
    }
    let offset = (0.5 * (a + b)).exp();
    let t_num = t_last + offset;
    Ok(BlowupEstimate {
        t_num,
        uncertainty: (t_num - last_cross).abs(),
        crossings,
        detected,
        coarse: false,
        exponent: fit(offset).1,
    })
}
