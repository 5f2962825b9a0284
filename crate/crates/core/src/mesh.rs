//! Uniform tensor-product grids on clamped rectangles and the discrete
//! operators that act on nodal fields.
//!
//! Unknowns live on interior nodes only. The Laplacian uses the 3-point
//! (1D) / 5-point (2D) stencil with zero Dirichlet closure. The biharmonic
//! uses the 5-point (1D) / 13-point (2D) stencil with clamped closure:
//! boundary values are zero and the ghost node one spacing outside the
//! boundary mirrors the interior node one spacing inside, which encodes a
//! vanishing normal derivative.
//!
//! Both operators are symmetric in the weighted inner product
//! `(u, w) = Σ weight·u_i·w_i`, the Laplacian negative definite and the
//! biharmonic positive definite. The discrete norms `‖∇u‖²` and `‖Δu‖²` are
//! defined as `(−L u, u)` and `(B u, u)`, so the discrete Green identities hold
//! by construction; [`grad_norm_sq_by_differences`] and
//! [`lap_norm_sq_by_differences`] evaluate the same quantities through
//! summation-by-parts sums of squared differences.

use crate::error::{Error, Result};

/// Uniform grid of interior nodes on an axis-aligned interval or rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    extent: [f64; 2],
    n: [usize; 2],
    h: [f64; 2],
    weight: f64,
}

impl Grid {
    /// Builds a grid from per-axis extents and interior node counts.
    ///
    /// A single value is broadcast to every axis.
    pub fn new(dim: usize, extent: &[f64], n_interior: &[usize]) -> Result<Grid> {
        if dim != 1 && dim != 2 {
            return Err(Error::invalid(format!("dimension must be 1 or 2, got {dim}")));
        }
        let pick_f = |v: &[f64], axis: usize| -> Result<f64> {
            match v.len() {
                1 => Ok(v[0]),
                l if l == dim => Ok(v[axis]),
                l => Err(Error::invalid(format!(
                    "expected 1 or {dim} extents, got {l}"
                ))),
            }
        };
        let pick_n = |v: &[usize], axis: usize| -> Result<usize> {
            match v.len() {
                1 => Ok(v[0]),
                l if l == dim => Ok(v[axis]),
                l => Err(Error::invalid(format!(
                    "expected 1 or {dim} node counts, got {l}"
                ))),
            }
        };
        let mut extent_arr = [1.0; 2];
        let mut n_arr = [1usize; 2];
        let mut h_arr = [1.0; 2];
        for axis in 0..dim {
            let e = pick_f(extent, axis)?;
            let n = pick_n(n_interior, axis)?;
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::invalid(format!("extent must be positive, got {e}")));
            }
            if n == 0 {
                return Err(Error::invalid("interior node count must be at least 1"));
            }
            extent_arr[axis] = e;
            n_arr[axis] = n;
            h_arr[axis] = e / (n as f64 + 1.0);
        }
        let weight = h_arr[..dim].iter().product();
        Ok(Grid {
            dim,
            extent: extent_arr,
            n: n_arr,
            h: h_arr,
            weight,
        })
    }

    pub fn line(extent: f64, n_interior: usize) -> Result<Grid> {
        Grid::new(1, &[extent], &[n_interior])
    }

    pub fn rect(extent: [f64; 2], n_interior: [usize; 2]) -> Result<Grid> {
        Grid::new(2, &extent, &n_interior)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extent[axis]
    }

    pub fn n_interior(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    /// Quadrature weight attached to every node (product of spacings).
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Total number of interior nodes.
    pub fn len(&self) -> usize {
        self.n[..self.dim].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Measure of the domain, `|Ω|`.
    pub fn volume(&self) -> f64 {
        self.extent[..self.dim].iter().product()
    }

    /// Physical coordinates of node `idx` (second entry is 0 in 1D).
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let i = idx % self.n[0];
        let j = idx / self.n[0];
        let x = (i as f64 + 1.0) * self.h[0];
        let y = if self.dim == 2 {
            (j as f64 + 1.0) * self.h[1]
        } else {
            0.0
        };
        [x, y]
    }

    /// Samples `f` at every interior node.
    pub fn sample(&self, f: impl Fn([f64; 2]) -> f64) -> Field {
        Field((0..self.len()).map(|k| f(self.coords(k))).collect())
    }

    pub fn zeros(&self) -> Field {
        Field(vec![0.0; self.len()])
    }

    pub(crate) fn check(&self, u: &Field) -> Result<()> {
        if u.len() != self.len() {
            return Err(Error::invalid(format!(
                "field has {} values, grid has {} interior nodes",
                u.len(),
                self.len()
            )));
        }
        Ok(())
    }
}

/// Spec-named constructor; see [`Grid::new`].
pub fn make_grid(dim: usize, extent: &[f64], n_interior: &[usize]) -> Result<Grid> {
    Grid::new(dim, extent, n_interior)
}

/// Real values on the interior nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field(Vec<f64>);

impl Field {
    /// Wraps `values`, rejecting length mismatches and non-finite entries.
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Field> {
        let f = Field(values);
        grid.check(&f)?;
        if let Some(k) = f.0.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at node {k}")));
        }
        Ok(f)
    }

    pub(crate) fn from_vec(values: Vec<f64>) -> Field {
        Field(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Field {
        Field(self.0.iter().map(|v| a * v).collect())
    }

    /// `a·self + b·other`
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Field {
        Field(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

// ---------------------------------------------------------------------------
// slice-level kernels

#[inline]
fn axis_layout(grid: &Grid, axis: usize, idx: usize) -> (usize, usize, usize) {
    let nx = grid.n[0];
    if axis == 0 {
        (idx % nx, grid.n[0], 1)
    } else {
        (idx / nx, grid.n[1], nx)
    }
}

/// Value at `pos + off` along an axis line, with zero boundary and mirror ghosts.
#[inline]
fn clamped_value(u: &[f64], idx: usize, pos: usize, n: usize, stride: usize, off: isize) -> f64 {
    let target = pos as isize + off;
    let base = idx - pos * stride;
    if target >= 0 && (target as usize) < n {
        u[base + target as usize * stride]
    } else if target == -1 || target == n as isize {
        0.0
    } else if target == -2 {
        u[base]
    } else if target == n as isize + 1 {
        u[base + (n - 1) * stride]
    } else {
        unreachable!("stencil reaches beyond the ghost layer")
    }
}

#[inline]
fn dirichlet_value(u: &[f64], idx: usize, pos: usize, n: usize, stride: usize, off: isize) -> f64 {
    let target = pos as isize + off;
    if target >= 0 && (target as usize) < n {
        u[idx - pos * stride + target as usize * stride]
    } else {
        0.0
    }
}

fn add_second_difference(grid: &Grid, axis: usize, u: &[f64], out: &mut [f64], scale: f64) {
    let c = scale / (grid.h[axis] * grid.h[axis]);
    for idx in 0..u.len() {
        let (pos, n, stride) = axis_layout(grid, axis, idx);
        let left = dirichlet_value(u, idx, pos, n, stride, -1);
        let right = dirichlet_value(u, idx, pos, n, stride, 1);
        out[idx] += c * (left - 2.0 * u[idx] + right);
    }
}

fn add_fourth_difference_clamped(grid: &Grid, axis: usize, u: &[f64], out: &mut [f64]) {
    let h2 = grid.h[axis] * grid.h[axis];
    let c = 1.0 / (h2 * h2);
    for idx in 0..u.len() {
        let (pos, n, stride) = axis_layout(grid, axis, idx);
        let v = |off| clamped_value(u, idx, pos, n, stride, off);
        out[idx] += c * (v(-2) - 4.0 * v(-1) + 6.0 * u[idx] - 4.0 * v(1) + v(2));
    }
}

/// `out = L_D u` on raw slices.
pub fn laplacian_into(grid: &Grid, u: &[f64], out: &mut [f64]) {
    debug_assert_eq!(u.len(), grid.len());
    out.iter_mut().for_each(|o| *o = 0.0);
    for axis in 0..grid.dim {
        add_second_difference(grid, axis, u, out, 1.0);
    }
}

/// `out = B_c u` on raw slices; `scratch` must have the grid length (unused in 1D).
pub fn biharmonic_into(grid: &Grid, u: &[f64], out: &mut [f64], scratch: &mut [f64]) {
    debug_assert_eq!(u.len(), grid.len());
    out.iter_mut().for_each(|o| *o = 0.0);
    for axis in 0..grid.dim {
        add_fourth_difference_clamped(grid, axis, u, out);
    }
    if grid.dim == 2 {
        scratch.iter_mut().for_each(|s| *s = 0.0);
        add_second_difference(grid, 0, u, scratch, 1.0);
        add_second_difference(grid, 1, scratch, out, 2.0);
    }
}

/// Weighted inner product on raw slices.
pub fn dot(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    grid.weight * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// `Σ weight·|u|^q` without the final root.
pub fn lq_power_sum(grid: &Grid, u: &[f64], q: f64) -> f64 {
    grid.weight * u.iter().map(|v| v.abs().powf(q)).sum::<f64>()
}

// ---------------------------------------------------------------------------
// checked public operations

pub fn laplacian_dirichlet(grid: &Grid, u: &Field) -> Result<Field> {
    grid.check(u)?;
    let mut out = vec![0.0; u.len()];
    laplacian_into(grid, &u.0, &mut out);
    Ok(Field(out))
}

pub fn biharmonic_clamped(grid: &Grid, u: &Field) -> Result<Field> {
    grid.check(u)?;
    let mut out = vec![0.0; u.len()];
    let mut scratch = vec![0.0; u.len()];
    biharmonic_into(grid, &u.0, &mut out, &mut scratch);
    Ok(Field(out))
}

/// Discrete `L^q` norm; `q = f64::INFINITY` gives the max norm.
pub fn norm_lq(grid: &Grid, u: &Field, q: f64) -> Result<f64> {
    grid.check(u)?;
    if q.is_nan() || q < 1.0 {
        return Err(Error::invalid(format!("norm exponent must be >= 1, got {q}")));
    }
    if q.is_infinite() {
        return Ok(u.max_abs());
    }
    if q == 2.0 {
        return Ok(dot(grid, &u.0, &u.0).sqrt());
    }
    Ok(lq_power_sum(grid, &u.0, q).powf(1.0 / q))
}

pub fn inner(grid: &Grid, u: &Field, w: &Field) -> Result<f64> {
    grid.check(u)?;
    grid.check(w)?;
    Ok(dot(grid, &u.0, &w.0))
}

/// `‖∇u‖² := (−L_D u, u)`.
pub fn grad_norm_sq(grid: &Grid, u: &Field) -> Result<f64> {
    let lu = laplacian_dirichlet(grid, u)?;
    Ok(-dot(grid, &lu.0, &u.0))
}

/// `‖Δu‖² := (B_c u, u)`.
pub fn lap_norm_sq(grid: &Grid, u: &Field) -> Result<f64> {
    let bu = biharmonic_clamped(grid, u)?;
    Ok(dot(grid, &bu.0, &u.0))
}

/// `‖∇u‖²` as a weighted sum of squared forward differences over every grid
/// edge, boundary edges included.
pub fn grad_norm_sq_by_differences(grid: &Grid, u: &Field) -> Result<f64> {
    grid.check(u)?;
    let mut total = 0.0;
    for axis in 0..grid.dim {
        let h = grid.h[axis];
        let mut sum = 0.0;
        for idx in 0..u.len() {
            let (pos, n, stride) = axis_layout(grid, axis, idx);
            // edge to the right of every node, plus the leftmost boundary edge
            let right = dirichlet_value(&u.0, idx, pos, n, stride, 1);
            let d = (right - u.0[idx]) / h;
            sum += d * d;
            if pos == 0 {
                let d0 = u.0[idx] / h;
                sum += d0 * d0;
            }
        }
        total += grid.weight * sum;
    }
    Ok(total)
}

/// `‖Δu‖²` as a summation-by-parts sum: squared second differences at
/// interior nodes, half-weighted squared second differences at boundary
/// nodes (where the mirror ghost makes them `2u_adjacent/h²`), and in 2D
/// twice the squared mixed differences over every cell.
pub fn lap_norm_sq_by_differences(grid: &Grid, u: &Field) -> Result<f64> {
    grid.check(u)?;
    let w = grid.weight;
    let mut total = 0.0;
    for axis in 0..grid.dim {
        let h2 = grid.h[axis] * grid.h[axis];
        let mut sum = 0.0;
        for idx in 0..u.len() {
            let (pos, n, stride) = axis_layout(grid, axis, idx);
            let left = dirichlet_value(&u.0, idx, pos, n, stride, -1);
            let right = dirichlet_value(&u.0, idx, pos, n, stride, 1);
            let d2 = (left - 2.0 * u.0[idx] + right) / h2;
            sum += w * d2 * d2;
            if pos == 0 {
                let b = 2.0 * u.0[idx] / h2;
                sum += 0.5 * w * b * b;
            }
            if pos == n - 1 {
                let b = 2.0 * u.0[idx] / h2;
                sum += 0.5 * w * b * b;
            }
        }
        total += sum;
    }
    if grid.dim == 2 {
        let (nx, ny) = (grid.n[0], grid.n[1]);
        let hxy = grid.h[0] * grid.h[1];
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
                0.0
            } else {
                u.0[i as usize + nx * j as usize]
            }
        };
        let mut sum = 0.0;
        // cells (i, j) span nodes i-1..i and j-1..j in interior indexing
        for j in 0..=ny as isize {
            for i in 0..=nx as isize {
                let m = (at(i, j) - at(i - 1, j) - at(i, j - 1) + at(i - 1, j - 1)) / hxy;
                sum += m * m;
            }
        }
        total += 2.0 * w * sum;
    }
    Ok(total)
}
