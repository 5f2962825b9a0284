//! Self-checks run by the `verify` command.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{full_report, thm31_constants, BoundOptions};
use crate::dynamics::{detect_blowup, energy_residual, simulate, State, StepControls, StopRule, DEFAULT_THRESHOLDS};
use crate::error::Result;
use crate::functionals::{lemma21_verdict, ModelParams, NormPieces};
use crate::mesh::{self, Field, Grid};
use crate::scenarios::{construct_energy_level, preset, InitialData, Preset};
use crate::spectra::{smallest_eigen, Operator, VariationalConstants};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn timed(name: &'static str, body: impl FnOnce() -> Result<(bool, String)>) -> SuiteResult {
    let start = Instant::now();
    let (passed, detail) = body().unwrap_or_else(|e| (false, format!("error: {e}")));
    SuiteResult {
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Operator under test in the Green-identity suite.
pub type BiharmonicFn = dyn Fn(&Grid, &Field) -> Result<Field> + Sync;

pub fn random_field(grid: &Grid, rng: &mut ChaCha8Rng) -> Result<Field> {
    Field::new(grid, (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

/// Worst relative defect of `(Bu, v) = (u, Bv)`, `(Bu, u) = ‖Δu‖²` by
/// differences and `(−Lu, u) = ‖∇u‖²` by differences.
pub fn green_defect(grid: &Grid, biharmonic: &BiharmonicFn, fields: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..fields {
        let u = random_field(grid, &mut rng)?;
        let v = random_field(grid, &mut rng)?;
        let (bu, bv) = (biharmonic(grid, &u)?, biharmonic(grid, &v)?);
        let scale = mesh::norm_lq(grid, &bu, 2.0)? * mesh::norm_lq(grid, &v, 2.0)?;
        let sym = (mesh::inner(grid, &bu, &v)? - mesh::inner(grid, &u, &bv)?).abs() / scale;
        let lap = mesh::inner(grid, &bu, &u)?;
        let lap_ref = mesh::lap_norm_sq_by_differences(grid, &u)?;
        let grad = mesh::grad_norm_sq(grid, &u)?;
        let grad_ref = mesh::grad_norm_sq_by_differences(grid, &u)?;
        worst = worst
            .max(sym)
            .max((lap - lap_ref).abs() / lap_ref)
            .max((grad - grad_ref).abs() / grad_ref);
    }
    Ok(worst)
}

pub const GREEN_TOL: f64 = 1e-13;

pub fn green_suite(biharmonic: &BiharmonicFn) -> SuiteResult {
    timed("green_identities", || {
        let line = Grid::line(1.0, 64)?;
        let rect = Grid::rect([1.0, 1.0], [16, 16])?;
        let d1 = green_defect(&line, biharmonic, 100, 11)?;
        let d2 = green_defect(&rect, biharmonic, 100, 12)?;
        Ok((
            d1 <= GREEN_TOL && d2 <= GREEN_TOL,
            format!("worst relative defect 1D {d1:.2e}, 2D {d2:.2e}"),
        ))
    })
}

/// Clamped-beam first eigenvalue `(4.73004074…)⁴` on the unit interval.
pub const CLAMPED_LAMBDA1: f64 = 500.563_901_740_6;

pub fn eigen_suite() -> SuiteResult {
    timed("eigenvalue_benchmark", || {
        let mut errs = Vec::new();
        for n in [32, 64, 128, 256] {
            let v = smallest_eigen(&Grid::line(1.0, n)?, Operator::ClampedBiharmonic)?.value;
            errs.push((n, v, (v - CLAMPED_LAMBDA1).abs()));
        }
        let (_, l256, e256) = errs[3];
        let order = (errs[2].2 / e256).log2();
        let ok = e256 / CLAMPED_LAMBDA1 < 5e-3 && (order - 2.0).abs() <= 0.3;
        Ok((ok, format!("lambda1(N=256) = {l256:.6}, observed order {order:.3}")))
    })
}

fn sine_bump_residual(dt: f64, output_every: usize) -> Result<f64> {
    let grid = Grid::line(1.0, 128)?;
    let params = ModelParams::new(3.0, 2.0, 0.5, 1.0, 1)?;
    let data = preset(&grid, &params, Preset::SineBump { amplitude: 1.0 })?;
    let state = State::new(&grid, data.u0, data.u1, dt)?;
    let stop = StopRule {
        t_max: 0.5,
        blow_threshold: 1e10,
    };
    let traj = simulate(&grid, &state, &params, &StepControls::new(dt), &stop, output_every)?;
    Ok(energy_residual(&traj.snapshots)?.1)
}

pub fn energy_suite() -> SuiteResult {
    timed("energy_residual_order", || {
        let coarse = sine_bump_residual(1e-4, 10)?;
        let fine = sine_bump_residual(5e-5, 20)?;
        let ratio = coarse / fine;
        let ok = coarse <= 1e-4 && (3.0..=5.0).contains(&ratio);
        Ok((ok, format!("residual {coarse:.3e} -> {fine:.3e}, ratio {ratio:.3}")))
    })
}

/// Fields `λu` with `J(λu) ≤ d`, drawn on both sides of the Nehari scaling.
pub fn sub_depth_fields(
    grid: &Grid,
    params: &ModelParams,
    d: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<Field>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = if rng.gen_bool(0.5) {
            random_field(grid, &mut rng)?
        } else {
            let coefs: Vec<f64> = (1..=6).map(|k| rng.gen_range(-1.0..1.0) / (k * k) as f64).collect();
            grid.sample(|c| {
                let s: f64 = coefs.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * std::f64::consts::PI * c[0]).sin()).sum();
                s * (std::f64::consts::PI * c[0]).sin()
            })
        };
        let base = NormPieces::of(grid, &u, None, params)?;
        if !(base.source_pow > 0.0) {
            continue;
        }
        let scaled = |l: f64| NormPieces {
            grad_sq: l * l * base.grad_sq,
            lap_sq: l * l * base.lap_sq,
            source_pow: l.powf(params.p + 1.0) * base.source_pow,
            l2_sq: 0.0,
            kinetic_sq: 0.0,
        };
        let j = |l: f64| scaled(l).potential(params);
        // Nehari scaling: the unique positive root of I(λu)
        let mut hi = 1.0;
        while scaled(hi).nehari(params) > 0.0 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if scaled(mid).nehari(params) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let ln = hi;
        let stable = rng.gen_bool(0.5);
        let target = if stable { d * rng.gen_range(0.0..1.0) } else { d * rng.gen_range(-1.0..1.0) };
        let mut l = if stable { ln * rng.gen_range(0.0..1.0) } else { ln * rng.gen_range(1.0..4.0) };
        if j(l) > d {
            // J increases below the Nehari scaling and decreases above it
            let (mut a, mut b) = if stable { (0.0, l) } else { (l, 2.0 * l) };
            if !stable {
                while j(b) > target {
                    b *= 2.0;
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let below = j(mid) <= target;
                if below == stable {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            l = if stable { a } else { b };
        }
        // rough fields put J ≤ d at a cancellation of huge terms; keep the
        // field only if its own J, not the scaled estimate, is below d
        let w = u.scaled(l);
        if crate::functionals::potential_j(grid, &w, params)? <= d {
            out.push(w);
        }
    }
    Ok(out)
}

pub fn lemma21_suite() -> SuiteResult {
    timed("lemma21_equivalence", || {
        let grid = Grid::line(1.0, 64)?;
        let params = ModelParams::new(3.0, 2.0, 0.5, 1.0, 1)?;
        let c = VariationalConstants::compute(&grid, &params, 1)?;
        let fields = sub_depth_fields(&grid, &params, c.well_depth_d, 1000, 21)?;
        let mut bad = 0;
        let mut unstable = 0;
        for u in &fields {
            let v = lemma21_verdict(&grid, u, &params, &c)?;
            bad += usize::from(!v.consistent);
            unstable += usize::from(v.i_neg);
        }
        Ok((bad == 0, format!("{bad} inconsistencies over {} fields ({unstable} with I < 0)", fields.len())))
    })
}

pub fn chain_suite() -> SuiteResult {
    timed("chain_consistency", || {
        let pi = std::f64::consts::PI;
        let reference = thm31_constants(&ModelParams::new(3.0, 1.0, 0.5, 1.0, 1)?, 1.0 / pi)?;
        let root = (-6.0 * pi * pi + (36.0 * pi.powi(4) + 3072.0 * pi * pi).sqrt()) / 128.0;
        let mut ok = (reference.delta3 - root).abs() < 1e-6;
        let mut worst_limit = 0.0f64;
        for (p, r, gamma, b1) in [(3.0, 1.0, 0.5, 1.0 / pi), (3.0, 2.0, 0.5, 0.3183), (4.0, 1.5, 1.0, 0.2), (6.0, 3.0, 2.0, 0.5)] {
            let chain = thm31_constants(&ModelParams::new(p, r, gamma, 1.0, 1)?, b1)?;
            ok &= chain.feasible
                && chain.g(chain.eps0) > 0.0
                && chain.h(chain.eps0) > 0.0
                && chain.b_of(chain.eps0) <= r / ((r + 1.0) * chain.eps0);
            let lim = chain.b_limit();
            worst_limit = worst_limit.max((chain.b_of(1e-6) - lim).abs() / lim);
        }
        ok &= worst_limit < 1e-3;
        Ok((
            ok,
            format!("delta3 {:.7} (root {root:.7}), worst limit defect {worst_limit:.2e}", reference.delta3),
        ))
    })
}

pub fn sandwich_suite() -> SuiteResult {
    timed("bound_sandwich", || {
        let grid = Grid::line(1.0, 128)?;
        let params = ModelParams::new(3.0, 2.0, 0.5, 1.0, 1)?;
        let c = VariationalConstants::compute(&grid, &params, 1)?;
        let chain = thm31_constants(&params, c.poincare_b1)?;
        let runs: [(&str, InitialData); 2] = [
            ("negative_energy", preset(&grid, &params, Preset::NegativeEnergy { factor: 1.25 })?),
            ("energy_10d", construct_energy_level(&grid, &params, 10.0 * c.well_depth_d, chain.b)?),
        ];
        let mut ok = true;
        let mut detail = Vec::new();
        for (name, data) in runs {
            let state = State::new(&grid, data.u0.clone(), data.u1.clone(), 1e-3)?;
            let stop = StopRule {
                t_max: 10.0,
                blow_threshold: 1e10,
            };
            let traj = simulate(&grid, &state, &params, &StepControls::new(1e-3), &stop, 10)?;
            let est = detect_blowup(&traj.snapshots, &DEFAULT_THRESHOLDS)?;
            let rep = full_report(&grid, &data.u0, &data.u1, &params, &c, Some((&traj, &est)), &BoundOptions::default())?;
            ok &= rep.detected && rep.sandwich_ok && rep.t_upper.is_finite();
            detail.push(format!("{name}: T_num {:.6} <= T_upper {:.4e}", rep.t_num, rep.t_upper));
        }
        Ok((ok, detail.join("; ")))
    })
}

pub fn all_suites() -> Vec<SuiteResult> {
    vec![
        green_suite(&mesh::biharmonic_clamped),
        eigen_suite(),
        energy_suite(),
        lemma21_suite(),
        chain_suite(),
        sandwich_suite(),
    ]
}

/// Prints one line per suite; returns the exit code.
pub fn run_verify() -> i32 {
    let results = all_suites();
    for r in &results {
        println!(
            "{} {} ({:.2} s): {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.seconds,
            r.detail
        );
    }
    if results.iter().all(|r| r.passed) {
        0
    } else {
        1
    }
}
