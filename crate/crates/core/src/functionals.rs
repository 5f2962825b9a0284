//! Potential, Nehari and energy functionals on discrete fields, and the
//! potential-well classification built on them.

use crate::error::{Error, Result};
use crate::mesh::{self, Field, Grid};
use crate::spectra::VariationalConstants;

/// Exponents and Kirchhoff coefficient of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Source exponent.
    pub p: f64,
    /// Weak damping exponent.
    pub r: f64,
    /// Kirchhoff exponent.
    pub gamma: f64,
    /// Kirchhoff coefficient.
    pub beta: f64,
    pub dim: usize,
}

impl ModelParams {
    /// Validates `1 ≤ r < p`, `2γ + 1 < p`, `γ ≥ 0`, `β ≥ 0` and `dim ∈ {1, 2}`.
    pub fn new(p: f64, r: f64, gamma: f64, beta: f64, dim: usize) -> Result<ModelParams> {
        let mp = ModelParams {
            p,
            r,
            gamma,
            beta,
            dim,
        };
        mp.validate()?;
        Ok(mp)
    }

    pub fn validate(&self) -> Result<()> {
        let ModelParams {
            p,
            r,
            gamma,
            beta,
            dim,
        } = *self;
        if ![p, r, gamma, beta].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("model parameters must be finite"));
        }
        if !(1.0 <= r && r < p) {
            return Err(Error::invalid(format!("need 1 <= r < p, got r = {r}, p = {p}")));
        }
        if gamma < 0.0 {
            return Err(Error::invalid(format!("need gamma >= 0, got {gamma}")));
        }
        if 2.0 * gamma + 1.0 >= p {
            return Err(Error::invalid(format!(
                "need 2*gamma + 1 < p, got gamma = {gamma}, p = {p}"
            )));
        }
        if beta < 0.0 {
            return Err(Error::invalid(format!("need beta >= 0, got {beta}")));
        }
        if dim != 1 && dim != 2 {
            return Err(Error::invalid(format!("dimension must be 1 or 2, got {dim}")));
        }
        Ok(())
    }
}

/// Kirchhoff stiffness `M(s) = 1 + β s^γ`.
pub fn kirchhoff(s: f64, params: &ModelParams) -> Result<f64> {
    if s.is_nan() || s < 0.0 {
        return Err(Error::invalid(format!("kirchhoff argument must be >= 0, got {s}")));
    }
    Ok(kirchhoff_unchecked(s, params))
}

#[inline]
pub(crate) fn kirchhoff_unchecked(s: f64, params: &ModelParams) -> f64 {
    if params.beta == 0.0 {
        1.0
    } else {
        1.0 + params.beta * s.powf(params.gamma)
    }
}

/// The norm pieces every functional is assembled from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormPieces {
    /// `‖∇u‖²`
    pub grad_sq: f64,
    /// `‖Δu‖²`
    pub lap_sq: f64,
    /// `‖u‖_{p+1}^{p+1}`
    pub source_pow: f64,
    /// `‖u‖₂²`
    pub l2_sq: f64,
    /// `‖u_t‖₂²`
    pub kinetic_sq: f64,
}

impl NormPieces {
    pub fn of(grid: &Grid, u: &Field, v: Option<&Field>, params: &ModelParams) -> Result<NormPieces> {
        grid.check(u)?;
        if let Some(v) = v {
            grid.check(v)?;
        }
        let mut scratch = vec![0.0; u.len()];
        let mut op = vec![0.0; u.len()];
        Ok(Self::of_slices(
            grid,
            u.values(),
            v.map(|f| f.values()),
            params,
            &mut op,
            &mut scratch,
        ))
    }

    pub(crate) fn of_slices(
        grid: &Grid,
        u: &[f64],
        v: Option<&[f64]>,
        params: &ModelParams,
        op: &mut [f64],
        scratch: &mut [f64],
    ) -> NormPieces {
        mesh::laplacian_into(grid, u, op);
        let grad_sq = -mesh::dot(grid, op, u);
        mesh::biharmonic_into(grid, u, op, scratch);
        let lap_sq = mesh::dot(grid, op, u);
        NormPieces {
            grad_sq,
            lap_sq,
            source_pow: mesh::lq_power_sum(grid, u, params.p + 1.0),
            l2_sq: mesh::dot(grid, u, u),
            kinetic_sq: v.map_or(0.0, |v| mesh::dot(grid, v, v)),
        }
    }

    /// `‖u‖_H² = ‖∇u‖² + ‖Δu‖²`
    pub fn h_sq(&self) -> f64 {
        self.grad_sq + self.lap_sq
    }

    /// `β‖∇u‖^{2γ+2}`
    pub fn kirchhoff_energy(&self, params: &ModelParams) -> f64 {
        if params.beta == 0.0 {
            0.0
        } else {
            params.beta * self.grad_sq.powf(params.gamma + 1.0)
        }
    }

    pub fn potential(&self, params: &ModelParams) -> f64 {
        0.5 * self.h_sq() + self.kirchhoff_energy(params) / (2.0 * (params.gamma + 1.0))
            - self.source_pow / (params.p + 1.0)
    }

    pub fn nehari(&self, params: &ModelParams) -> f64 {
        self.h_sq() + self.kirchhoff_energy(params) - self.source_pow
    }

    pub fn energy(&self, params: &ModelParams) -> f64 {
        0.5 * self.kinetic_sq + self.potential(params)
    }
}

pub fn potential_j(grid: &Grid, u: &Field, params: &ModelParams) -> Result<f64> {
    Ok(NormPieces::of(grid, u, None, params)?.potential(params))
}

pub fn nehari_i(grid: &Grid, u: &Field, params: &ModelParams) -> Result<f64> {
    Ok(NormPieces::of(grid, u, None, params)?.nehari(params))
}

/// Total energy of the pair `(u, u_t)`.
pub fn energy_e(grid: &Grid, u: &Field, ut: &Field, params: &ModelParams) -> Result<f64> {
    Ok(NormPieces::of(grid, u, Some(ut), params)?.energy(params))
}

/// Position of a field relative to the Nehari manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WellClass {
    StableW,
    UnstableV,
    NearNehari,
    Indeterminate,
}

impl WellClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            WellClass::StableW => "stable_W",
            WellClass::UnstableV => "unstable_V",
            WellClass::NearNehari => "near_nehari",
            WellClass::Indeterminate => "indeterminate",
        }
    }
}

/// Default relative band for [`classify`].
pub const CLASSIFY_TOL: f64 = 1e-9;

fn classify_pieces(pieces: &NormPieces, params: &ModelParams, tol: f64) -> WellClass {
    let i = pieces.nehari(params);
    let scale = pieces.h_sq() + pieces.source_pow;
    if !i.is_finite() || !scale.is_finite() {
        return WellClass::Indeterminate;
    }
    if scale == 0.0 {
        return WellClass::StableW;
    }
    if i > tol * scale {
        WellClass::StableW
    } else if i < -tol * scale {
        WellClass::UnstableV
    } else {
        WellClass::NearNehari
    }
}

/// Classifies `u` by the sign of `I(u)` relative to `‖u‖_H² + ‖u‖_{p+1}^{p+1}`.
pub fn classify(grid: &Grid, u: &Field, params: &ModelParams, tol: f64) -> Result<WellClass> {
    if !(tol > 0.0) {
        return Err(Error::invalid("classification tolerance must be positive"));
    }
    let pieces = NormPieces::of(grid, u, None, params)?;
    Ok(classify_pieces(&pieces, params, tol))
}

/// All functional values and norms of a state `(u, u_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalSnapshot {
    pub j: f64,
    pub i: f64,
    pub e: f64,
    pub l2_u: f64,
    pub lp1_u: f64,
    pub grad_u_sq: f64,
    pub lap_u_sq: f64,
    pub l2_v: f64,
    pub classification: WellClass,
}

impl FunctionalSnapshot {
    pub fn from_pieces(pieces: &NormPieces, params: &ModelParams) -> FunctionalSnapshot {
        FunctionalSnapshot {
            j: pieces.potential(params),
            i: pieces.nehari(params),
            e: pieces.energy(params),
            l2_u: pieces.l2_sq.sqrt(),
            lp1_u: pieces.source_pow.powf(1.0 / (params.p + 1.0)),
            grad_u_sq: pieces.grad_sq,
            lap_u_sq: pieces.lap_sq,
            l2_v: pieces.kinetic_sq.sqrt(),
            classification: classify_pieces(pieces, params, CLASSIFY_TOL),
        }
    }
}

pub fn snapshot(grid: &Grid, u: &Field, ut: &Field, params: &ModelParams) -> Result<FunctionalSnapshot> {
    let pieces = NormPieces::of(grid, u, Some(ut), params)?;
    Ok(FunctionalSnapshot::from_pieces(&pieces, params))
}

/// Both sides of the equivalence "for `J(u) ≤ d`: `I(u) < 0` iff `‖u‖_H > λ*`".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lemma21Verdict {
    pub j_le_d: bool,
    pub i_neg: bool,
    pub h_norm_gt_lambda_star: bool,
    pub consistent: bool,
}

/// Relative band applied to the strict comparisons of [`lemma21_verdict`].
pub const LEMMA_BAND: f64 = 1e-9;

pub fn lemma21_verdict(
    grid: &Grid,
    u: &Field,
    params: &ModelParams,
    constants: &VariationalConstants,
) -> Result<Lemma21Verdict> {
    let pieces = NormPieces::of(grid, u, None, params)?;
    let j = pieces.potential(params);
    let i = pieces.nehari(params);
    let h = pieces.h_sq().sqrt();
    let d = constants.well_depth_d;
    let ls = constants.lambda_star;
    let band = LEMMA_BAND;

    let j_le_d = j <= d + band * d.abs();
    let i_scale = pieces.h_sq() + pieces.source_pow;
    let i_clearly_neg = i < -band * i_scale;
    let i_clearly_nonneg = i > band * i_scale;
    let h_clearly_gt = h > ls * (1.0 + band);
    let h_clearly_le = h < ls * (1.0 - band);

    // I < 0 forces ‖u‖_H > λ* unconditionally; the converse needs J ≤ d
    let forward_broken = i_clearly_neg && h_clearly_le;
    let converse_broken = j_le_d && h_clearly_gt && i_clearly_nonneg;

    Ok(Lemma21Verdict {
        j_le_d,
        i_neg: i < 0.0,
        h_norm_gt_lambda_star: h > ls,
        consistent: !(forward_broken || converse_broken),
    })
}
