//! Discrete spectral and embedding constants.
//!
//! Every constant here is the best constant of the discrete space on a given
//! grid, not a certified bound on its continuum counterpart.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::ModelParams;
use crate::linsolve::{conjugate_gradient, CgOptions};
use crate::mesh::{self, Field, Grid};

/// Symmetric positive definite operators whose quadratic forms define the
/// energy norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    /// `Δ²` with clamped closure; form `‖Δu‖²`.
    ClampedBiharmonic,
    /// `−Δ` with Dirichlet closure; form `‖∇u‖²`.
    DirichletLaplacian,
    /// `Δ² − Δ`; form `‖u‖_H²`.
    Energy,
}

impl Operator {
    pub(crate) fn apply(&self, grid: &Grid, u: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        match self {
            Operator::ClampedBiharmonic => mesh::biharmonic_into(grid, u, out, scratch),
            Operator::DirichletLaplacian => {
                mesh::laplacian_into(grid, u, out);
                out.iter_mut().for_each(|o| *o = -*o);
            }
            Operator::Energy => {
                mesh::biharmonic_into(grid, u, out, scratch);
                mesh::laplacian_into(grid, u, scratch);
                for (o, s) in out.iter_mut().zip(scratch.iter()) {
                    *o -= s;
                }
            }
        }
    }

    /// Exact diagonal, extracted by probing with a 5-coloring per axis (the
    /// stencils reach two nodes).
    pub(crate) fn diagonal(&self, grid: &Grid) -> Vec<f64> {
        stencil_diagonal(grid, |u, out, scratch| self.apply(grid, u, out, scratch))
    }
}

pub(crate) fn stencil_diagonal(
    grid: &Grid,
    mut apply: impl FnMut(&[f64], &mut [f64], &mut [f64]),
) -> Vec<f64> {
    let n = grid.len();
    let nx = grid.n_interior(0);
    let colors_y = if grid.dim() == 2 { 5 } else { 1 };
    let mut diag = vec![0.0; n];
    let mut probe = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    for cy in 0..colors_y {
        for cx in 0..5 {
            let color = |idx: usize| (idx % nx) % 5 == cx && (idx / nx) % 5 == cy % 5;
            for (idx, pv) in probe.iter_mut().enumerate() {
                *pv = if color(idx) { 1.0 } else { 0.0 };
            }
            apply(&probe, &mut out, &mut scratch);
            for idx in 0..n {
                if color(idx) {
                    diag[idx] = out[idx];
                }
            }
        }
    }
    diag
}

/// A norm usable as numerator or denominator of an embedding ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    /// `‖u‖_q`
    Lq(f64),
    /// `‖∇u‖₂`
    Grad,
    /// `‖Δu‖₂`
    Lap,
    /// `‖u‖_H`
    H,
}

impl Norm {
    fn operator(&self) -> Option<Operator> {
        match self {
            Norm::Lq(_) => None,
            Norm::Grad => Some(Operator::DirichletLaplacian),
            Norm::Lap => Some(Operator::ClampedBiharmonic),
            Norm::H => Some(Operator::Energy),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Relative change of the Rayleigh quotient that counts as converged.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Tolerance of the inner solves.
    pub solve_tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            rel_tol: 1e-10,
            max_iter: 2000,
            solve_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Unit vector in the weighted `L²` norm.
    pub field: Field,
    /// Weighted `‖A e − λ e‖₂`.
    pub residual: f64,
    pub iterations: usize,
}

/// Smallest eigenpair of `op` in the weighted inner product.
pub fn smallest_eigen(grid: &Grid, op: Operator) -> Result<EigenPair> {
    smallest_eigen_with(grid, op, &[], EigenOptions::default())
}

fn project_out(grid: &Grid, x: &mut [f64], basis: &[&Field]) {
    for b in basis {
        let c = mesh::dot(grid, x, b.values()) / mesh::dot(grid, b.values(), b.values());
        for (xi, bi) in x.iter_mut().zip(b.values()) {
            *xi -= c * bi;
        }
    }
}

fn normalize(grid: &Grid, x: &mut [f64]) -> f64 {
    let nrm = mesh::dot(grid, x, x).sqrt();
    if nrm > 0.0 {
        x.iter_mut().for_each(|v| *v /= nrm);
    }
    nrm
}

/// Inverse power iteration restricted to the weighted orthogonal complement
/// of `deflate`.
///
/// Iterates until the Rayleigh quotient settles to `rel_tol` and the residual
/// stops improving, so the returned vector is as accurate as rounding allows.
pub fn smallest_eigen_with(
    grid: &Grid,
    op: Operator,
    deflate: &[&Field],
    opts: EigenOptions,
) -> Result<EigenPair> {
    let n = grid.len();
    if deflate.len() >= n {
        return Err(Error::invalid("deflation space exhausts the grid"));
    }
    for d in deflate {
        grid.check(d)?;
    }
    let diag = op.diagonal(grid);
    let mut scratch = vec![0.0; n];
    let mut ax = vec![0.0; n];

    // ones for the ground state, a centered ramp along the longest axis otherwise
    let axis = if grid.dim() == 2 && grid.extent(1) > grid.extent(0) { 1 } else { 0 };
    let center = 0.5 * grid.extent(axis);
    let mut x: Vec<f64> = (0..n)
        .map(|i| {
            if deflate.is_empty() {
                1.0
            } else {
                let c = grid.coords(i);
                (c[axis] - center) + 0.01 * (c[1 - axis] - 0.5 * grid.extent(1 - axis))
            }
        })
        .collect();
    let start = x.clone();
    project_out(grid, &mut x, deflate);
    if normalize(grid, &mut x) == 0.0 {
        return Err(Error::invalid("start vector vanishes after deflation"));
    }

    let cg = CgOptions {
        rel_tol: opts.solve_tol,
        max_iter: 20 * n + 1000,
    };
    let rayleigh = |x: &[f64], ax: &mut [f64], scratch: &mut [f64]| {
        op.apply(grid, x, ax, scratch);
        mesh::dot(grid, ax, x)
    };
    let mut lambda = rayleigh(&x, &mut ax, &mut scratch);
    let mut residual = f64::INFINITY;
    let mut settled = false;
    let mut y = vec![0.0; n];
    let mut cg_scratch = vec![0.0; n];
    for it in 1..=opts.max_iter {
        // warm start from the fixed point A⁻¹x ≈ x/λ
        for i in 0..n {
            y[i] = x[i] / lambda;
        }
        conjugate_gradient(
            |v, out| op.apply(grid, v, out, &mut cg_scratch),
            &x,
            &mut y,
            Some(&diag),
            cg,
        )?;
        project_out(grid, &mut y, deflate);
        normalize(grid, &mut y);
        std::mem::swap(&mut x, &mut y);

        let next = rayleigh(&x, &mut ax, &mut scratch);
        let res = (0..n)
            .map(|i| (ax[i] - next * x[i]).powi(2))
            .sum::<f64>()
            .sqrt()
            * grid.weight().sqrt();
        let change = (next - lambda).abs() / next.abs();
        lambda = next;
        if change <= opts.rel_tol {
            if settled && res > 0.5 * residual {
                residual = res.min(residual);
                let mut field = x;
                if mesh::dot(grid, &field, &start) < 0.0 {
                    field.iter_mut().for_each(|v| *v = -*v);
                }
                return Ok(EigenPair {
                    value: lambda,
                    field: Field::from_vec(field),
                    residual,
                    iterations: it,
                });
            }
            settled = true;
        }
        residual = res;
    }
    Err(Error::ConvergenceFailure {
        what: "inverse power iteration".into(),
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedOptions {
    /// Random restarts in addition to the eigenfield start.
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Converged when the ratio gains less than `stall_tol` (relative) over
    /// `stall_window` iterations.
    pub stall_window: usize,
    pub stall_tol: f64,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        EmbedOptions {
            restarts: 8,
            seed: 0x5eed,
            max_iter: 20_000,
            stall_window: 50,
            stall_tol: 1e-11,
        }
    }
}

/// Best constant `K` in `num(u) ≤ K·den(u)` over nonzero grid fields.
pub fn embedding_constant(grid: &Grid, num: Norm, den: Norm) -> Result<f64> {
    embedding_constant_with(grid, num, den, EmbedOptions::default())
}

pub fn embedding_constant_with(grid: &Grid, num: Norm, den: Norm, opts: EmbedOptions) -> Result<f64> {
    let den_op = den
        .operator()
        .ok_or_else(|| Error::invalid("denominator must be a gradient, Laplacian or H norm"))?;
    if let Norm::Lq(q) = num {
        if !(q >= 2.0 && q.is_finite()) {
            return Err(Error::invalid(format!("numerator exponent must be finite and >= 2, got {q}")));
        }
    }
    if num == den {
        return Ok(1.0);
    }

    let ground = smallest_eigen(grid, den_op)?;
    let mut starts = vec![ground.field.into_vec()];
    for k in 0..opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(k as u64));
        starts.push((0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    let diag = den_op.diagonal(grid);
    let results: Vec<Result<f64>> = starts
        .into_par_iter()
        .map(|x0| ascend(grid, num, den_op, &diag, x0, &opts))
        .collect();

    let mut best: Option<f64> = None;
    let mut last_err = None;
    for r in results {
        match r {
            Ok(v) => best = Some(best.map_or(v, |b: f64| b.max(v))),
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| {
        last_err.unwrap_or(Error::ConvergenceFailure {
            what: "embedding constant".into(),
            residual: f64::NAN,
        })
    })
}

/// Fixed-point ascent `u ← A⁻¹∇f(u)`, renormalized to `(Au, u) = 1`; the
/// ratio is nondecreasing because the numerator is convex.
fn ascend(grid: &Grid, num: Norm, den: Operator, diag: &[f64], x0: Vec<f64>, opts: &EmbedOptions) -> Result<f64> {
    let n = grid.len();
    let mut scratch = vec![0.0; n];
    let mut au = vec![0.0; n];
    let mut u = x0;
    let energy = |u: &[f64], au: &mut [f64], scratch: &mut [f64]| {
        den.apply(grid, u, au, scratch);
        mesh::dot(grid, au, u)
    };
    let e = energy(&u, &mut au, &mut scratch);
    if !(e > 0.0) {
        return Err(Error::invalid("start field has zero energy"));
    }
    u.iter_mut().for_each(|v| *v /= e.sqrt());

    let num_op = num.operator();
    let mut g = vec![0.0; n];
    let ratio_of = |u: &[f64], g: &mut [f64], scratch: &mut [f64]| -> f64 {
        match (num, num_op) {
            (Norm::Lq(q), _) => {
                for (gi, ui) in g.iter_mut().zip(u) {
                    *gi = ui.abs().powf(q - 2.0) * ui;
                }
                mesh::lq_power_sum(grid, u, q).powf(1.0 / q)
            }
            (_, Some(op)) => {
                op.apply(grid, u, g, scratch);
                mesh::dot(grid, g, u).sqrt()
            }
            _ => unreachable!(),
        }
    };

    let cg = CgOptions {
        rel_tol: 1e-12,
        max_iter: 20 * n + 1000,
    };
    let mut history = Vec::with_capacity(opts.max_iter.min(4096));
    let mut ratio = ratio_of(&u, &mut g, &mut scratch);
    history.push(ratio);
    let mut w = vec![0.0; n];
    let mut cg_scratch = vec![0.0; n];
    for it in 1..=opts.max_iter {
        // the fixed point satisfies A⁻¹g = (g, u)·u when (Au, u) = 1
        let scale = mesh::dot(grid, &g, &u);
        for i in 0..n {
            w[i] = scale * u[i];
        }
        conjugate_gradient(
            |v, out| den.apply(grid, v, out, &mut cg_scratch),
            &g,
            &mut w,
            Some(diag),
            cg,
        )?;
        let e = energy(&w, &mut au, &mut scratch);
        if !(e > 0.0 && e.is_finite()) {
            return Err(Error::NumericalFailure("embedding ascent lost positivity".into()));
        }
        for i in 0..n {
            u[i] = w[i] / e.sqrt();
        }
        ratio = ratio_of(&u, &mut g, &mut scratch);
        history.push(ratio);
        if it >= opts.stall_window {
            let before = history[it - opts.stall_window];
            if ratio - before <= opts.stall_tol * ratio {
                return Ok(history.iter().cloned().fold(f64::MIN, f64::max));
            }
        }
    }
    Err(Error::ConvergenceFailure {
        what: "embedding constant ascent".into(),
        residual: ratio - history[history.len().saturating_sub(opts.stall_window + 1)],
    })
}

/// Potential well depth `d` and the matching norm radius `λ*`.
///
/// `d = ((p−1)/(2(p+1)))·C^{−2(p+1)/(p−1)}`, so `λ* = C^{−(p+1)/(p−1)}` is
/// the radius with `d = ((p−1)/(2(p+1)))·λ*²`.
pub fn well_depth(params: &ModelParams, embed_c: f64) -> Result<(f64, f64)> {
    let p = params.p;
    if !(p > 1.0) {
        return Err(Error::invalid(format!("well depth needs p > 1, got {p}")));
    }
    if !(embed_c > 0.0 && embed_c.is_finite()) {
        return Err(Error::invalid(format!("embedding constant must be positive, got {embed_c}")));
    }
    let lambda_star = embed_c.powf(-(p + 1.0) / (p - 1.0));
    let d = (p - 1.0) / (2.0 * (p + 1.0)) * lambda_star * lambda_star;
    Ok((d, lambda_star))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalConstants {
    pub lambda1: f64,
    /// `‖u‖₂ ≤ B₁‖∇u‖₂`
    pub poincare_b1: f64,
    /// `‖u‖_{p+1} ≤ C‖u‖_H`
    pub embed_c: f64,
    /// `‖u‖_{2p} ≤ B*‖Δu‖₂`
    pub embed_bstar: f64,
    /// `‖w‖_{p+1} ≤ C_a‖∇w‖₂`
    pub embed_ca: f64,
    /// `‖u‖_{p+1} ≤ C_b‖Δu‖₂`
    pub embed_cb: f64,
    pub well_depth_d: f64,
    pub lambda_star: f64,
}

impl VariationalConstants {
    pub fn compute(grid: &Grid, params: &ModelParams, seed: u64) -> Result<VariationalConstants> {
        let p = params.p;
        let opts = EmbedOptions {
            seed,
            ..EmbedOptions::default()
        };
        let lambda1 = smallest_eigen(grid, Operator::ClampedBiharmonic)?.value;
        let lambda_d = smallest_eigen(grid, Operator::DirichletLaplacian)?.value;
        let embed_c = embedding_constant_with(grid, Norm::Lq(p + 1.0), Norm::H, opts)?;
        let embed_bstar = embedding_constant_with(grid, Norm::Lq(2.0 * p), Norm::Lap, opts)?;
        let embed_ca = embedding_constant_with(grid, Norm::Lq(p + 1.0), Norm::Grad, opts)?;
        let embed_cb = embedding_constant_with(grid, Norm::Lq(p + 1.0), Norm::Lap, opts)?;
        let (well_depth_d, lambda_star) = well_depth(params, embed_c)?;
        Ok(VariationalConstants {
            lambda1,
            poincare_b1: lambda_d.powf(-0.5),
            embed_c,
            embed_bstar,
            embed_ca,
            embed_cb,
            well_depth_d,
            lambda_star,
        })
    }

    /// `key=value` lines in a fixed order.
    pub fn to_key_values(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("lambda1", self.lambda1),
            ("poincare_B1", self.poincare_b1),
            ("embed_C", self.embed_c),
            ("embed_Bstar", self.embed_bstar),
            ("embed_Ca", self.embed_ca),
            ("embed_Cb", self.embed_cb),
            ("well_depth_d", self.well_depth_d),
            ("lambda_star", self.lambda_star),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matches_unit_probes() {
        for grid in [Grid::line(1.0, 13).unwrap(), Grid::rect([1.0, 1.5], [7, 6]).unwrap()] {
            for op in [Operator::ClampedBiharmonic, Operator::DirichletLaplacian, Operator::Energy] {
                let diag = op.diagonal(&grid);
                let n = grid.len();
                let mut e = vec![0.0; n];
                let mut out = vec![0.0; n];
                let mut s = vec![0.0; n];
                for i in 0..n {
                    e[i] = 1.0;
                    op.apply(&grid, &e, &mut out, &mut s);
                    assert_eq!(out[i], diag[i], "{op:?} node {i}");
                    e[i] = 0.0;
                }
            }
        }
    }

    #[test]
    fn laplacian_ground_state_is_pi_squared() {
        let g = Grid::line(1.0, 255).unwrap();
        let pair = smallest_eigen(&g, Operator::DirichletLaplacian).unwrap();
        let h = g.spacing(0);
        // exact discrete eigenvalue of the 3-point stencil
        let exact = 4.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
        assert!((pair.value - exact).abs() < 1e-9 * exact);
        let norm = mesh::norm_lq(&g, &pair.field, 2.0).unwrap();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn second_laplacian_mode_by_deflation() {
        let g = Grid::line(1.0, 63).unwrap();
        let first = smallest_eigen(&g, Operator::DirichletLaplacian).unwrap();
        let second =
            smallest_eigen_with(&g, Operator::DirichletLaplacian, &[&first.field], EigenOptions::default()).unwrap();
        let h = g.spacing(0);
        let exact = 4.0 / (h * h) * (std::f64::consts::PI * h).sin().powi(2);
        assert!((second.value - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn small_grid_eigen_residual() {
        let g = Grid::line(1.0, 32).unwrap();
        let pair = smallest_eigen(&g, Operator::ClampedBiharmonic).unwrap();
        assert!(pair.residual <= 1e-8, "residual {}", pair.residual);
    }

    #[test]
    fn clamped_not_hinged() {
        let g = Grid::line(1.0, 64).unwrap();
        let l = smallest_eigen(&g, Operator::ClampedBiharmonic).unwrap().value;
        assert!((l - 500.564).abs() < 0.01 * 500.564, "{l}");
        assert!((l - std::f64::consts::PI.powi(4)).abs() > 100.0);
    }

    #[test]
    fn quadratic_embedding_matches_eigenvalue() {
        let g = Grid::line(1.0, 40).unwrap();
        let l = smallest_eigen(&g, Operator::ClampedBiharmonic).unwrap().value;
        let k = embedding_constant(&g, Norm::Lq(2.0), Norm::Lap).unwrap();
        assert!((k - l.powf(-0.5)).abs() < 1e-8 * k);
        assert_eq!(embedding_constant(&g, Norm::H, Norm::H).unwrap(), 1.0);
    }

    #[test]
    fn embedding_argument_errors() {
        let g = Grid::line(1.0, 10).unwrap();
        assert!(embedding_constant(&g, Norm::Lq(1.5), Norm::H).is_err());
        assert!(embedding_constant(&g, Norm::Lq(f64::INFINITY), Norm::H).is_err());
        assert!(embedding_constant(&g, Norm::Lq(4.0), Norm::Lq(2.0)).is_err());
    }

    #[test]
    fn well_depth_examples() {
        let mp = ModelParams::new(3.0, 2.0, 0.5, 1.0, 1).unwrap();
        let (d, ls) = well_depth(&mp, 1.0).unwrap();
        assert_eq!((d, ls), (0.25, 1.0));
        let (d, ls) = well_depth(&mp, 2.0).unwrap();
        assert!((ls - 0.25).abs() < 1e-15);
        assert!((d - 0.015625).abs() < 1e-15);
        assert!(well_depth(&mp, 0.0).is_err());
    }
}
