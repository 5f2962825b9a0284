//! Blow-up criteria and blow-up time bounds.
//!
//! The constant chains are evaluated with the discrete constants of
//! [`crate::spectra`], so each differential inequality holds for the
//! semi-discrete system that [`crate::dynamics`] integrates. Free parameters
//! left as "sufficiently small" are fixed at half their binding value.

use crate::dynamics::{BlowupEstimate, State, Trajectory};
use crate::error::{Error, Result};
use crate::functionals::{ModelParams, NormPieces};
use crate::mesh::{self, Field, Grid};
use crate::spectra::VariationalConstants;

// ---------------------------------------------------------------------------
// exponential growth of (u, u_t) − B E

/// Constants `A`, `B` of the growth inequality `F' ≥ A F`, `F = (u, u_t) − B E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thm31Chain {
    pub p: f64,
    pub r: f64,
    pub b1: f64,
    pub s: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub eps0: f64,
    pub a: f64,
    pub b: f64,
    /// False when `g` or `h` is never positive; `a`, `b` are then NaN.
    pub feasible: bool,
}

impl Thm31Chain {
    pub fn theta(&self, eps: f64) -> f64 {
        eps.powf(self.r) * (1.0 - self.s) / (self.r + 1.0)
    }

    pub fn g(&self, eps: f64) -> f64 {
        (self.p + 1.0) * (1.0 - self.theta(eps)) - 2.0 - eps
    }

    pub fn h(&self, eps: f64) -> f64 {
        0.5 * self.g(eps) / (self.b1 * self.b1) - self.theta(eps)
    }

    pub fn a_of(&self, eps: f64) -> f64 {
        let k = (self.p + 1.0) * (1.0 - self.theta(eps));
        (2.0 * (k + 2.0) * self.h(eps)).sqrt()
    }

    /// `B(ε) = (p+1)(1−θ)/A(ε)`.
    pub fn b_of(&self, eps: f64) -> f64 {
        (self.p + 1.0) * (1.0 - self.theta(eps)) / self.a_of(eps)
    }

    /// `lim_{ε→0} B(ε) = (p+1)B₁/√((p+3)(p−1))`.
    pub fn b_limit(&self) -> f64 {
        (self.p + 1.0) * self.b1 / ((self.p + 3.0) * (self.p - 1.0)).sqrt()
    }

    fn admissible(&self, eps: f64) -> bool {
        self.b_of(eps) <= self.r / ((self.r + 1.0) * eps)
    }
}

/// Largest `ε ∈ (0, hi]` with `f > 0` on `(0, ε]`, for `f` decreasing.
fn last_positive(f: impl Fn(f64) -> f64, hi: f64) -> f64 {
    if f(hi) > 0.0 {
        return hi;
    }
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn thm31_constants(params: &ModelParams, b1: f64) -> Result<Thm31Chain> {
    params.validate()?;
    if !(b1 > 0.0 && b1.is_finite()) {
        return Err(Error::invalid(format!("B1 must be positive, got {b1}")));
    }
    let ModelParams { p, r, gamma, .. } = *params;
    let s = (p - r) / (p - 1.0);
    let delta0 = if r == 1.0 || s >= 1.0 {
        1.0
    } else {
        (((p - 2.0 * gamma - 1.0) * (r + 1.0)) / ((p + 1.0) * (1.0 - s)))
            .powf(1.0 / r)
            .min(1.0)
    };
    let mut chain = Thm31Chain {
        p,
        r,
        b1,
        s,
        delta0,
        delta1: f64::NAN,
        delta2: f64::NAN,
        delta3: f64::NAN,
        eps0: f64::NAN,
        a: f64::NAN,
        b: f64::NAN,
        feasible: false,
    };
    let tiny = 1e-12 * delta0;
    if !(chain.g(tiny) > 0.0) {
        return Ok(chain);
    }
    chain.delta1 = last_positive(|e| chain.g(e), delta0);
    if !(chain.h(tiny) > 0.0) {
        return Ok(chain);
    }
    chain.delta2 = last_positive(|e| chain.h(e), chain.delta1);

    // scan for the first failure of B(ε) ≤ r/((r+1)ε), then bisect
    let cells = 1000;
    let mut good = 0.0;
    let mut bad = None;
    for k in 1..=cells {
        let e = chain.delta2 * k as f64 / cells as f64;
        if chain.admissible(e) {
            good = e;
        } else {
            bad = Some(e);
            break;
        }
    }
    chain.delta3 = match bad {
        None => chain.delta2,
        Some(mut hi) => {
            if good == 0.0 {
                // fails already on the first cell; search below it
                let mut lo = hi;
                while !chain.admissible(lo) && lo > tiny {
                    hi = lo;
                    lo *= 0.5;
                }
                good = lo;
            }
            let mut lo = good;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if chain.admissible(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        }
    };
    chain.eps0 = 0.5 * chain.delta3;
    chain.a = chain.a_of(chain.eps0);
    chain.b = r / ((r + 1.0) * chain.eps0);
    chain.feasible = chain.g(chain.eps0) > 0.0 && chain.h(chain.eps0) > 0.0 && chain.a > 0.0;
    Ok(chain)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Thm31Verdict {
    /// `E(0) < 0`
    CaseI,
    /// `0 ≤ E(0) < (u₀, u₁)/B`
    CaseII,
    NotApplicable,
}

impl Thm31Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Thm31Verdict::CaseI => "case_i",
            Thm31Verdict::CaseII => "case_ii",
            Thm31Verdict::NotApplicable => "not_applicable",
        }
    }
}

pub fn thm31_check(
    grid: &Grid,
    u0: &Field,
    u1: &Field,
    chain: &Thm31Chain,
    e0: f64,
) -> Result<Thm31Verdict> {
    let inner = mesh::inner(grid, u0, u1)?;
    Ok(if e0 < 0.0 {
        Thm31Verdict::CaseI
    } else if chain.feasible && e0 < inner / chain.b {
        Thm31Verdict::CaseII
    } else {
        Thm31Verdict::NotApplicable
    })
}

/// `(u, u_t) − B·E`.
pub fn growth_functional(grid: &Grid, state: &State, chain: &Thm31Chain, energy: f64) -> Result<f64> {
    Ok(mesh::inner(grid, &state.u, &state.v)? - chain.b * energy)
}

// ---------------------------------------------------------------------------
// upper bounds

/// User-tunable free parameters of the upper-bound chains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundOptions {
    /// Slack `μ > 0` in the initial-data condition of the positive-energy bound.
    pub mu: f64,
    pub alpha_override: Option<f64>,
    pub eps_override: Option<f64>,
    /// Multiple of the critical `M` actually used.
    pub m_safety: f64,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions {
            mu: 1.0,
            alpha_override: None,
            eps_override: None,
            m_safety: 2.0,
        }
    }
}

impl BoundOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(Error::invalid("mu must be positive"));
        }
        if !(self.m_safety > 1.0) {
            return Err(Error::invalid("M_safety must exceed 1"));
        }
        if self.alpha_override.is_some_and(|a| !(a > 0.0 && a < 0.5)) {
            return Err(Error::invalid("alpha_override must lie in (0, 1/2)"));
        }
        if self.eps_override.is_some_and(|e| !(e > 0.0)) {
            return Err(Error::invalid("eps_override must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChainVerdict {
    Applicable,
    NotApplicable(String),
    HypothesesUnmet(String),
}

impl ChainVerdict {
    pub fn is_applicable(&self) -> bool {
        matches!(self, ChainVerdict::Applicable)
    }

    pub fn label(&self) -> &'static str {
        match self {
            ChainVerdict::Applicable => "applicable",
            ChainVerdict::NotApplicable(_) => "not_applicable",
            ChainVerdict::HypothesesUnmet(_) => "hypotheses_unmet",
        }
    }

    pub fn reason(&self) -> &str {
        match self {
            ChainVerdict::Applicable => "",
            ChainVerdict::NotApplicable(r) | ChainVerdict::HypothesesUnmet(r) => r,
        }
    }
}

/// `sup_{x>0} x^{2/(1−α)} / (x² + x^{2(γ+1)})`, by golden section in `ln x`
/// where the logarithm of the ratio is concave.
pub fn gradient_power_constant(alpha: f64, gamma: f64) -> f64 {
    let m = 2.0 / (1.0 - alpha);
    let log_ratio = |y: f64| {
        let (a, b) = (2.0 * y, 2.0 * (gamma + 1.0) * y);
        let hi = a.max(b);
        m * y - hi - ((a - hi).exp() + (b - hi).exp()).ln()
    };
    let (mut lo, mut hi) = (-200.0f64, 200.0f64);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (log_ratio(c), log_ratio(d));
    for _ in 0..300 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = log_ratio(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = log_ratio(d);
        }
    }
    log_ratio(0.5 * (lo + hi)).exp()
}

/// `C₁ = ((1−2α)/(2(1−α)))·|Ω|^{((p−1)/(p+1))/(1−2α)}`.
fn holder_young_c1(alpha: f64, p: f64, volume: f64) -> f64 {
    (1.0 - 2.0 * alpha) / (2.0 * (1.0 - alpha)) * volume.powf((p - 1.0) / (p + 1.0) / (1.0 - 2.0 * alpha))
}

/// Blow-up time from `L' ≥ k L^{1/(1−α)}`: `(1/k)((1−α)/α) L₀^{−α/(1−α)}`.
fn blowup_time(k: f64, alpha: f64, l0: f64) -> f64 {
    (1.0 - alpha) / alpha * l0.powf(-alpha / (1.0 - alpha)) / k
}

/// Upper bound for positive initial energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Thm32Chain {
    pub alpha: f64,
    pub mu: f64,
    pub m_crit: f64,
    pub m: f64,
    pub mu0: f64,
    pub zeta: f64,
    pub eps: f64,
    pub c1: f64,
    pub s0: f64,
    pub c2: f64,
    pub mu1: f64,
    /// Includes the coefficient of `H(t)` in the `L^{1/(1−α)}` estimate.
    pub mu2: f64,
    /// The maximum as printed, without the `H(t)` coefficient.
    pub mu2_as_printed: f64,
    pub l0: f64,
    /// `‖u₀‖₂²` and `(p+2γ+3+μ)E(0)/(2μ₀)`.
    pub cond_lhs: f64,
    pub cond_rhs: f64,
    pub t_upper: f64,
    /// `(μ₁/μ₂)((1−α)/α)L₀^{−α/(1−α)}` with the printed `μ₂`.
    pub t_upper_as_printed: f64,
    pub verdict: ChainVerdict,
}

impl Thm32Chain {
    fn empty(verdict: ChainVerdict) -> Thm32Chain {
        let nan = f64::NAN;
        Thm32Chain {
            alpha: nan,
            mu: nan,
            m_crit: nan,
            m: nan,
            mu0: nan,
            zeta: nan,
            eps: nan,
            c1: nan,
            s0: nan,
            c2: nan,
            mu1: nan,
            mu2: nan,
            mu2_as_printed: nan,
            l0: nan,
            cond_lhs: nan,
            cond_rhs: nan,
            t_upper: nan,
            t_upper_as_printed: nan,
            verdict,
        }
    }
}

pub fn thm32_upper(
    grid: &Grid,
    u0: &Field,
    u1: &Field,
    params: &ModelParams,
    constants: &VariationalConstants,
    opts: &BoundOptions,
) -> Result<Thm32Chain> {
    opts.validate()?;
    let ModelParams {
        p,
        r,
        gamma,
        beta,
        ..
    } = *params;
    if gamma == 0.0 || beta == 0.0 {
        return Ok(Thm32Chain::empty(ChainVerdict::NotApplicable(
            "needs gamma > 0 and beta > 0".into(),
        )));
    }
    let pieces = NormPieces::of(grid, u0, Some(u1), params)?;
    let e0 = pieces.energy(params);
    if e0 == 0.0 {
        return Ok(Thm32Chain::empty(ChainVerdict::NotApplicable("E(0) = 0".into())));
    }
    if e0 < 0.0 {
        return Ok(Thm32Chain::empty(ChainVerdict::HypothesesUnmet("E(0) < 0".into())));
    }

    let alpha_max = ((p - 1.0) / (2.0 * (p + 1.0))).min(gamma / (gamma + 1.0));
    let alpha = opts.alpha_override.map_or(alpha_max, |a| a.min(alpha_max));
    let s = (p - r) / (p - 1.0);
    let lambda1 = constants.lambda1;
    let q = r.powf(r) * e0.powf(alpha * r) / (r + 1.0).powf(r + 1.0);
    let base_mu0 = (p + 2.0 * gamma - 1.0) / 4.0 * lambda1;
    let base_zeta = (p - 2.0 * gamma - 1.0) / (2.0 * (p + 1.0));
    let m_crit = (q * (s / base_mu0).max((1.0 - s) / base_zeta)).powf(1.0 / r);
    let m = opts.m_safety * m_crit;
    let mu0 = base_mu0 - q * s / m.powf(r);
    let zeta = base_zeta - q * (1.0 - s) / m.powf(r);
    let eps = opts.eps_override.unwrap_or((1.0 - alpha) / (2.0 * m));
    let mu = opts.mu;

    let mu1 = eps
        * [
            (p + 2.0 * gamma - 1.0) / 4.0,
            (p - 2.0 * gamma - 1.0) / (2.0 * (gamma + 1.0)) * beta,
            (p + 2.0 * gamma + 3.0) / 2.0,
            zeta,
            0.5 * mu * e0,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let c1 = holder_young_c1(alpha, p, grid.volume());
    let s0 = 2.0 / (1.0 - 2.0 * alpha);
    let c2 = gradient_power_constant(alpha, gamma);
    let k = 1.0 / (1.0 - alpha);
    let printed = [
        eps.powf(k) / (2.0 * (1.0 - alpha)),
        eps.powf(k) * c1 * s0 / (p + 1.0),
        eps.powf(k) * (p + 1.0 - s0) / (p + 1.0) * c1,
        (0.5 * eps).powf(k) * c2,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let lift = 2f64.powf(2.0 * alpha / (1.0 - alpha));
    let mu2_as_printed = lift * printed;
    let mu2 = lift * printed.max(1.0);

    let inner = mesh::inner(grid, u0, u1)?;
    let l0 = eps * (inner + 0.5 * pieces.grad_sq);
    let cond_lhs = pieces.l2_sq;
    let cond_rhs = (p + 2.0 * gamma + 3.0 + mu) / (2.0 * mu0) * e0;

    let thm31 = thm31_constants(params, constants.poincare_b1)?;
    let case = thm31_check(grid, u0, u1, &thm31, e0)?;
    let verdict = if !(mu0 > 0.0 && zeta > 0.0) {
        ChainVerdict::HypothesesUnmet("mu0 or zeta not positive".into())
    } else if case != Thm31Verdict::CaseII {
        ChainVerdict::HypothesesUnmet("growth criterion case (ii) does not hold".into())
    } else if !(cond_lhs >= cond_rhs) {
        ChainVerdict::HypothesesUnmet("initial L2 mass condition fails".into())
    } else if !(l0 > 0.0) {
        ChainVerdict::HypothesesUnmet("L(0) <= 0".into())
    } else if !(1.0 - alpha - eps * m >= 0.0) {
        ChainVerdict::HypothesesUnmet("eps exceeds (1 - alpha)/M".into())
    } else {
        ChainVerdict::Applicable
    };
    let (t_upper, t_upper_as_printed) = if l0 > 0.0 {
        (
            blowup_time(mu1 / mu2, alpha, l0),
            blowup_time(mu2_as_printed / mu1, alpha, l0),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(Thm32Chain {
        alpha,
        mu,
        m_crit,
        m,
        mu0,
        zeta,
        eps,
        c1,
        s0,
        c2,
        mu1,
        mu2,
        mu2_as_printed,
        l0,
        cond_lhs,
        cond_rhs,
        t_upper,
        t_upper_as_printed,
        verdict,
    })
}

/// Upper bound for negative initial energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Thm33Chain {
    pub alpha: f64,
    pub h0: f64,
    pub delta: f64,
    pub c3: f64,
    pub eps: f64,
    pub margin_source: f64,
    pub margin_energy: f64,
    pub c1: f64,
    pub c2: f64,
    pub mu3: f64,
    pub mu4: f64,
    /// `μ₄` with the printed `1/(p+1)` in its middle entry.
    pub mu4_as_printed: f64,
    pub l0: f64,
    pub t_upper: f64,
    /// `(μ₃/μ₄)((1−α)/α)L₀^{−α/(1−α)}` with the printed `μ₄`.
    pub t_upper_as_printed: f64,
    pub verdict: ChainVerdict,
}

impl Thm33Chain {
    fn empty(verdict: ChainVerdict) -> Thm33Chain {
        let nan = f64::NAN;
        Thm33Chain {
            alpha: nan,
            h0: nan,
            delta: nan,
            c3: nan,
            eps: nan,
            margin_source: nan,
            margin_energy: nan,
            c1: nan,
            c2: nan,
            mu3: nan,
            mu4: nan,
            mu4_as_printed: nan,
            l0: nan,
            t_upper: nan,
            t_upper_as_printed: nan,
            verdict,
        }
    }
}

pub fn thm33_upper(
    grid: &Grid,
    u0: &Field,
    u1: &Field,
    params: &ModelParams,
    opts: &BoundOptions,
) -> Result<Thm33Chain> {
    opts.validate()?;
    let ModelParams {
        p,
        r,
        gamma,
        beta,
        ..
    } = *params;
    if gamma == 0.0 || beta == 0.0 {
        return Ok(Thm33Chain::empty(ChainVerdict::NotApplicable(
            "needs gamma > 0 and beta > 0".into(),
        )));
    }
    let pieces = NormPieces::of(grid, u0, Some(u1), params)?;
    let e0 = pieces.energy(params);
    if !(e0 < 0.0) {
        return Ok(Thm33Chain::empty(ChainVerdict::HypothesesUnmet("E(0) >= 0".into())));
    }
    let h0 = -e0;
    let alpha_max = ((p - r) / ((p + 1.0) * r))
        .min((p - 1.0) / (2.0 * (p + 1.0)))
        .min(gamma / (gamma + 1.0));
    let alpha = opts.alpha_override.map_or(alpha_max, |a| a.min(alpha_max));
    let volume = grid.volume();
    let c3 = (1.0 + 1.0 / h0) * volume.powf((p - r - (p + 1.0) * alpha * r) / (p + 1.0)) / (r + 1.0)
        * (p + 1.0).powf(-alpha * r);
    let source_full = (p - 2.0 * gamma - 1.0) / (2.0 * (p + 1.0));
    let energy_full = (p + 2.0 * gamma + 3.0) / 2.0;
    // halve the tighter margin; the other stays above half
    let delta = (0.5 * source_full.min(energy_full) / c3).powf(1.0 / r);
    let margin_source = source_full - c3 * delta.powf(r);
    let margin_energy = energy_full - c3 * delta.powf(r);

    let inner = mesh::inner(grid, u0, u1)?;
    let x = inner + 0.5 * pieces.grad_sq;
    let h_pow = h0.powf(1.0 - alpha);
    let eps_damping = (1.0 - alpha) * (r + 1.0) * delta / r;
    let eps_positive = if x < 0.0 { h_pow / -x } else { f64::INFINITY };
    let eps = opts.eps_override.unwrap_or(0.5 * eps_damping.min(eps_positive));

    let mu3 = eps
        * [
            (p + 2.0 * gamma - 1.0) / 4.0,
            (p - 2.0 * gamma - 1.0) / (2.0 * (gamma + 1.0)) * beta,
            margin_source,
            margin_energy,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let c1 = holder_young_c1(alpha, p, volume);
    let c2 = gradient_power_constant(alpha, gamma);
    let k = 1.0 / (1.0 - alpha);
    let lift = 2f64.powf(2.0 * alpha / (1.0 - alpha));
    let entries = |middle_scale: f64| {
        [
            eps.powf(k) / (2.0 * (1.0 - alpha)),
            1.0 + eps.powf(k) * c1 * (1.0 + 1.0 / h0) * middle_scale,
            (0.5 * eps).powf(k) * c2,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    };
    let mu4 = lift * entries(1.0);
    let mu4_as_printed = lift * entries(1.0 / (p + 1.0));
    let l0 = h_pow + eps * x;

    let verdict = if !(margin_source > 0.0 && margin_energy > 0.0) {
        ChainVerdict::HypothesesUnmet("damping margins not positive".into())
    } else if !(l0 > 0.0) {
        ChainVerdict::HypothesesUnmet("L(0) <= 0".into())
    } else if !(1.0 - alpha - eps * r / ((r + 1.0) * delta) >= 0.0) {
        ChainVerdict::HypothesesUnmet("eps too large for the damping split".into())
    } else {
        ChainVerdict::Applicable
    };
    let (t_upper, t_upper_as_printed) = if l0 > 0.0 {
        (
            blowup_time(mu3 / mu4, alpha, l0),
            blowup_time(mu4_as_printed / mu3, alpha, l0),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(Thm33Chain {
        alpha,
        h0,
        delta,
        c3,
        eps,
        margin_source,
        margin_energy,
        c1,
        c2,
        mu3,
        mu4,
        mu4_as_printed,
        l0,
        t_upper,
        t_upper_as_printed,
        verdict,
    })
}

// ---------------------------------------------------------------------------
// lower bounds

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceGrowthBound {
    pub f0: f64,
    pub varpi: f64,
    pub k1: f64,
    pub k2: f64,
    /// `∫_{F0}^{Y} dy/(K₁ + y + K₂yᵖ)`
    pub truncated: f64,
    /// Truncated value plus the tail bound `Y^{1−p}/((p−1)K₂)`.
    pub with_tail: f64,
    pub cutoff: f64,
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if !delta.is_finite() {
            return Err(Error::NumericalFailure("non-finite quadrature value".into()));
        }
        if delta.abs() <= 15.0 * tol || depth == 0 {
            if depth == 0 && delta.abs() > 15.0 * tol {
                return Err(Error::NumericalFailure("quadrature recursion limit".into()));
            }
            return Ok(left + right + delta / 15.0);
        }
        Ok(rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `∫_{F0}^{∞} dy/(K₁ + y + K₂yᵖ)`, integrated in `ln y` on doubling
/// windows until the analytic tail drops below `1e−8` of the partial sum.
pub fn source_growth_integral(f0: f64, k1: f64, k2: f64, p: f64) -> Result<(f64, f64, f64)> {
    if !(k2 > 0.0 && p > 1.0 && k1 >= 0.0 && f0 >= 0.0) {
        return Err(Error::invalid("need K2 > 0, K1 >= 0, F0 >= 0 and p > 1"));
    }
    if f0 == 0.0 && k1 == 0.0 {
        return Ok((f64::INFINITY, f64::INFINITY, f64::INFINITY));
    }
    let integrand = |z: f64| {
        let y = z.exp();
        y / (k1 + y + k2 * y.powf(p))
    };
    let tail = |y: f64| y.powf(1.0 - p) / ((p - 1.0) * k2);
    // start below F0 = 0 at a point where K₁ dominates
    let mut lo = if f0 > 0.0 { f0 } else { 1e-6 * k1.min(1.0) };
    let mut partial = if f0 > 0.0 { 0.0 } else { lo / k1 };
    let mut hi = 2.0 * lo;
    for _ in 0..2000 {
        let piece = adaptive_simpson(&integrand, lo.ln(), hi.ln(), 1e-15 * partial.max(1e-300).max(tail(hi)))?;
        partial += piece;
        if tail(hi) < 1e-8 * partial {
            return Ok((partial, partial + tail(hi), hi));
        }
        lo = hi;
        hi *= 2.0;
    }
    Err(Error::NumericalFailure("tail bound did not converge".into()))
}

/// Lower bound from the growth of `F = ‖u‖_{p+1}^{p+1}`.
pub fn thm34_lower(grid: &Grid, u0: &Field, u1: &Field, params: &ModelParams, bstar: f64) -> Result<SourceGrowthBound> {
    if !(bstar > 0.0) {
        return Err(Error::invalid("B* must be positive"));
    }
    let pieces = NormPieces::of(grid, u0, Some(u1), params)?;
    let varpi = pieces.energy(params);
    source_growth_bound(pieces.source_pow, varpi, params.p, bstar)
}

/// The bound from `F0`, `ϖ = E(0)`, `p` and `B*` alone.
pub fn source_growth_bound(f0: f64, varpi: f64, p: f64, bstar: f64) -> Result<SourceGrowthBound> {
    let b2p = bstar.powf(2.0 * p);
    let k1 = if varpi > 0.0 {
        (p + 1.0) * (varpi + b2p * 2f64.powf(p - 2.0) * (2.0 * varpi).powf(p))
    } else {
        0.0
    };
    let k2 = b2p * 2f64.powf(2.0 * p - 2.0) * (p + 1.0).powf(-p);
    let (truncated, with_tail, cutoff) = source_growth_integral(f0, k1, k2, p)?;
    Ok(SourceGrowthBound {
        f0,
        varpi,
        k1,
        k2,
        truncated,
        with_tail,
        cutoff,
    })
}

/// Lower bound from the growth of the energy-like quantity `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongDampingBound {
    pub g0: f64,
    pub c_eff: f64,
    pub t_lower: f64,
}

pub fn thm35_lower(
    grid: &Grid,
    u0: &Field,
    u1: &Field,
    params: &ModelParams,
    embed_ca: f64,
    embed_cb: f64,
) -> Result<StrongDampingBound> {
    if !(embed_ca > 0.0 && embed_cb > 0.0) {
        return Err(Error::invalid("embedding constants must be positive"));
    }
    let pieces = NormPieces::of(grid, u0, Some(u1), params)?;
    let p = params.p;
    let g0 = 0.5 * pieces.kinetic_sq
        + 0.5 * pieces.h_sq()
        + pieces.kirchhoff_energy(params) / (2.0 * (params.gamma + 1.0));
    let c_eff = (embed_ca * embed_cb.powf(p)).powi(2) * 2f64.powf(p - 2.0);
    let t_lower = if g0 > 0.0 {
        g0.powf(1.0 - p) / ((p - 1.0) * c_eff)
    } else {
        f64::INFINITY
    };
    Ok(StrongDampingBound { g0, c_eff, t_lower })
}

// ---------------------------------------------------------------------------
// aggregation

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub constants: VariationalConstants,
    pub e0: f64,
    pub inner0: f64,
    pub thm31: Thm31Chain,
    pub thm31_verdict: Thm31Verdict,
    pub thm32: Thm32Chain,
    pub thm33: Thm33Chain,
    pub lower34: Option<SourceGrowthBound>,
    /// Source-growth truncated integral with the derivation-consistent `K₂ = B*^{2p}2^{2p−2}(p+1)^{1−p}`.
    pub lower34_corrected: f64,
    pub lower35: StrongDampingBound,
    pub detected: bool,
    pub t_num: f64,
    pub uncertainty: f64,
    pub t_final: f64,
    pub t_upper: f64,
    pub sandwich_ok: bool,
}

/// Assembles every chain and the sandwich verdict; chain failures become
/// non-applicable entries instead of errors.
pub fn full_report(
    grid: &Grid,
    u0: &Field,
    u1: &Field,
    params: &ModelParams,
    constants: &VariationalConstants,
    trajectory: Option<(&Trajectory, &BlowupEstimate)>,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    let pieces = NormPieces::of(grid, u0, Some(u1), params)?;
    let e0 = pieces.energy(params);
    let inner0 = mesh::inner(grid, u0, u1)?;
    let thm31 = thm31_constants(params, constants.poincare_b1)?;
    let is_zero = u0.max_abs() == 0.0 && u1.max_abs() == 0.0;
    let thm31_verdict = if is_zero {
        Thm31Verdict::NotApplicable
    } else {
        thm31_check(grid, u0, u1, &thm31, e0)?
    };
    let thm32 = if is_zero {
        Thm32Chain::empty(ChainVerdict::NotApplicable("zero data".into()))
    } else {
        thm32_upper(grid, u0, u1, params, constants, opts)
            .unwrap_or_else(|e| Thm32Chain::empty(ChainVerdict::NotApplicable(e.to_string())))
    };
    let thm33 = if is_zero {
        Thm33Chain::empty(ChainVerdict::NotApplicable("zero data".into()))
    } else {
        thm33_upper(grid, u0, u1, params, opts)
            .unwrap_or_else(|e| Thm33Chain::empty(ChainVerdict::NotApplicable(e.to_string())))
    };
    let lower34 = thm34_lower(grid, u0, u1, params, constants.embed_bstar).ok();
    let lower34_corrected = lower34
        .and_then(|l| {
            let k2 = l.k2 * (params.p + 1.0);
            source_growth_integral(l.f0, l.k1, k2, params.p).ok()
        })
        .map_or(f64::NAN, |v| v.0);
    let lower35 = thm35_lower(grid, u0, u1, params, constants.embed_ca, constants.embed_cb)?;

    let (detected, t_num, uncertainty, t_final) = match trajectory {
        Some((traj, est)) => (est.detected, est.t_num, est.uncertainty, traj.final_state.t),
        None => (false, f64::NAN, f64::NAN, f64::NAN),
    };
    let uppers = [
        (thm32.verdict.is_applicable(), thm32.t_upper),
        (thm33.verdict.is_applicable(), thm33.t_upper),
    ];
    let t_upper = uppers
        .iter()
        .filter(|(ok, t)| *ok && t.is_finite())
        .map(|(_, t)| *t)
        .fold(f64::INFINITY, f64::min);
    let lowers = [lower34.map_or(f64::NAN, |l| l.truncated), lower35.t_lower];
    let sandwich_ok = sandwich(detected, t_num, t_final, &lowers, t_upper);
    Ok(BoundReport {
        constants: *constants,
        e0,
        inner0,
        thm31,
        thm31_verdict,
        thm32,
        thm33,
        lower34,
        lower34_corrected,
        lower35,
        detected,
        t_num,
        uncertainty,
        t_final,
        t_upper,
        sandwich_ok,
    })
}

/// Every finite lower bound at most `T_num`, and `T_num` at most the upper
/// bound; an undetected run only fails by outliving the upper bound.
pub fn sandwich(detected: bool, t_num: f64, t_final: f64, lowers: &[f64], t_upper: f64) -> bool {
    if !detected {
        return !(t_upper.is_finite() && t_final.is_finite() && t_final > t_upper);
    }
    lowers.iter().filter(|l| l.is_finite()).all(|&l| l <= t_num) && (!t_upper.is_finite() || t_num <= t_upper)
}

impl BoundReport {
    /// Every field as an ordered `key=value` list, each key once.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        fn num(v: f64) -> String {
            format!("{v:.16e}")
        }
        let mut kv: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| kv.push((k.to_string(), v));
        for (k, v) in self.constants.to_key_values() {
            put(k, num(v));
        }
        put("E0", num(self.e0));
        put("inner_u0_u1", num(self.inner0));
        let c = &self.thm31;
        put("thm31_s", num(c.s));
        put("thm31_delta0", num(c.delta0));
        put("thm31_delta1", num(c.delta1));
        put("thm31_delta2", num(c.delta2));
        put("thm31_delta3", num(c.delta3));
        put("thm31_eps0", num(c.eps0));
        put("thm31_theta_eps0", num(c.theta(c.eps0)));
        put("thm31_A", num(c.a));
        put("thm31_B", num(c.b));
        put("thm31_feasible", c.feasible.to_string());
        put("thm31_case_i", (self.thm31_verdict == Thm31Verdict::CaseI).to_string());
        put("thm31_case_ii", (self.thm31_verdict == Thm31Verdict::CaseII).to_string());
        put("thm31_verdict", self.thm31_verdict.as_str().into());
        let c = &self.thm32;
        put("thm32_applicable", c.verdict.is_applicable().to_string());
        put("thm32_verdict", c.verdict.label().into());
        put("thm32_reason", c.verdict.reason().into());
        for (k, v) in [
            ("thm32_alpha", c.alpha),
            ("thm32_mu", c.mu),
            ("thm32_M_crit", c.m_crit),
            ("thm32_M", c.m),
            ("thm32_mu0", c.mu0),
            ("thm32_zeta", c.zeta),
            ("thm32_eps", c.eps),
            ("thm32_C1", c.c1),
            ("thm32_s0", c.s0),
            ("thm32_C2", c.c2),
            ("thm32_mu1", c.mu1),
            ("thm32_mu2", c.mu2),
            ("thm32_mu2_as_printed", c.mu2_as_printed),
            ("thm32_L0", c.l0),
            ("thm32_cond_lhs", c.cond_lhs),
            ("thm32_cond_rhs", c.cond_rhs),
            ("thm32_T_upper", c.t_upper),
            ("thm32_T_upper_as_printed", c.t_upper_as_printed),
        ] {
            put(k, num(v));
        }
        let c = &self.thm33;
        put("thm33_applicable", c.verdict.is_applicable().to_string());
        put("thm33_verdict", c.verdict.label().into());
        put("thm33_reason", c.verdict.reason().into());
        for (k, v) in [
            ("thm33_alpha", c.alpha),
            ("thm33_H0", c.h0),
            ("thm33_delta", c.delta),
            ("thm33_C3", c.c3),
            ("thm33_eps", c.eps),
            ("thm33_margin_source", c.margin_source),
            ("thm33_margin_energy", c.margin_energy),
            ("thm33_C1", c.c1),
            ("thm33_C2", c.c2),
            ("thm33_mu3", c.mu3),
            ("thm33_mu4", c.mu4),
            ("thm33_mu4_as_printed", c.mu4_as_printed),
            ("thm33_L0", c.l0),
            ("thm33_T_upper", c.t_upper),
            ("thm33_T_upper_as_printed", c.t_upper_as_printed),
        ] {
            put(k, num(v));
        }
        let l = self.lower34;
        put("thm34_F0", num(l.map_or(f64::NAN, |l| l.f0)));
        put("thm34_varpi", num(l.map_or(f64::NAN, |l| l.varpi)));
        put("thm34_K1", num(l.map_or(f64::NAN, |l| l.k1)));
        put("thm34_K2", num(l.map_or(f64::NAN, |l| l.k2)));
        put("thm34_cutoff", num(l.map_or(f64::NAN, |l| l.cutoff)));
        put("T_lower_34_truncated", num(l.map_or(f64::NAN, |l| l.truncated)));
        put("T_lower_34_with_tail", num(l.map_or(f64::NAN, |l| l.with_tail)));
        put("T_lower_34_corrected_K2", num(self.lower34_corrected));
        put("thm35_G0", num(self.lower35.g0));
        put("thm35_C_eff", num(self.lower35.c_eff));
        put("T_lower_35", num(self.lower35.t_lower));
        put("blowup_detected", self.detected.to_string());
        put("T_num", num(self.t_num));
        put("uncertainty", num(self.uncertainty));
        put("t_final", num(self.t_final));
        put("T_upper", num(self.t_upper));
        put("sandwich_ok", self.sandwich_ok.to_string());
        kv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params(p: f64, r: f64, gamma: f64) -> ModelParams {
        ModelParams::new(p, r, gamma, 1.0, 1).unwrap()
    }

    #[test]
    fn linear_damping_chain_matches_quadratic_root() {
        let chain = thm31_constants(&params(3.0, 1.0, 0.5), 1.0 / PI).unwrap();
        assert_eq!(chain.s, 1.0);
        assert_eq!(chain.theta(0.3), 0.0);
        assert_eq!(chain.delta0, 1.0);
        let pi2 = PI * PI;
        let root = (-6.0 * pi2 + (36.0 * pi2 * pi2 + 4.0 * 64.0 * 12.0 * pi2).sqrt()) / 128.0;
        assert!((chain.delta3 - root).abs() < 1e-9, "{} vs {root}", chain.delta3);
        assert!((chain.b - 1.0 / root).abs() < 1e-8);
        assert!(chain.feasible);
        assert!(0.0 < chain.eps0 && chain.eps0 < chain.delta3);
        assert!(chain.delta3 <= chain.delta2 && chain.delta2 <= chain.delta1 && chain.delta1 <= chain.delta0);
    }

    #[test]
    fn b_limit_and_post_hoc_checks() {
        for (p, r, b1) in [(3.0, 1.0, 1.0 / PI), (4.0, 2.0, 0.3), (5.0, 1.5, 0.1), (3.0, 2.5, 0.5)] {
            let chain = thm31_constants(&params(p, r, 0.5), b1).unwrap();
            assert!(chain.feasible);
            let lim = chain.b_limit();
            assert!((chain.b_of(1e-6) - lim).abs() < 1e-3 * lim);
            assert!(chain.g(chain.eps0) > 0.0 && chain.h(chain.eps0) > 0.0);
            assert!(chain.b_of(chain.eps0) <= chain.r / ((chain.r + 1.0) * chain.eps0));
        }
        assert!(thm31_constants(&params(3.0, 1.0, 0.5), 0.0).is_err());
    }

    #[test]
    fn case_routing() {
        let g = Grid::line(1.0, 9).unwrap();
        let chain = thm31_constants(&params(3.0, 1.0, 0.5), 1.0 / PI).unwrap();
        let u0 = g.sample(|c| (PI * c[0]).sin());
        let n0 = mesh::inner(&g, &u0, &u0).unwrap();
        let u1 = u0.scaled(2.0 * chain.b / n0);
        assert_eq!(thm31_check(&g, &u0, &u1, &chain, -1.0).unwrap(), Thm31Verdict::CaseI);
        assert_eq!(thm31_check(&g, &u0, &u1, &chain, 1.0).unwrap(), Thm31Verdict::CaseII);
        let back = u0.scaled(-1.0);
        assert_eq!(thm31_check(&g, &u0, &back, &chain, 0.5).unwrap(), Thm31Verdict::NotApplicable);
        let zero = State::new(&g, g.zeros(), g.zeros(), 1e-3).unwrap();
        assert_eq!(growth_functional(&g, &zero, &chain, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn gradient_power_constant_matches_closed_form() {
        for (alpha, gamma) in [(0.25f64, 0.5f64), (0.125, 1.0), (0.1, 2.0), (0.3, 0.75)] {
            let t: f64 = (alpha / (1.0 - alpha)) / gamma;
            let exact = t.powf(t) * (1.0 - t).powf(1.0 - t);
            let got = gradient_power_constant(alpha, gamma);
            assert!((got - exact).abs() < 1e-10, "{alpha} {gamma}: {got} vs {exact}");
        }
    }

    #[test]
    fn quadrature_oracle() {
        let bound = source_growth_bound(1.0, 0.0, 3.0, 1.0).unwrap();
        assert_eq!(bound.k1, 0.0);
        assert_eq!(bound.k2, 0.25);
        let exact = 0.5 * 5f64.ln();
        assert!((bound.with_tail - exact).abs() < 1e-9);
        assert!(bound.truncated <= bound.with_tail);
        assert!(bound.with_tail - bound.truncated < 1e-7 * bound.with_tail);
    }

    #[test]
    fn lower_bounds_are_monotone() {
        let mut prev = f64::INFINITY;
        for f0 in [0.1, 1.0, 10.0, 100.0] {
            let v = source_growth_bound(f0, 0.0, 3.0, 1.0).unwrap().truncated;
            assert!(v <= prev);
            prev = v;
        }
        let mut prev = f64::INFINITY;
        for varpi in [0.0, 0.5, 2.0, 10.0] {
            let v = source_growth_bound(1.0, varpi, 3.0, 1.0).unwrap().truncated;
            assert!(v <= prev);
            prev = v;
        }
        let g = Grid::line(1.0, 15).unwrap();
        let mp = params(3.0, 2.0, 0.5);
        let u0 = g.sample(|c| (PI * c[0]).sin().powi(2));
        let u1 = g.sample(|c| (PI * c[0]).sin());
        let a = thm35_lower(&g, &u0, &u1, &mp, 0.3, 0.05).unwrap();
        let b = thm35_lower(&g, &u0.scaled(1.5), &u1.scaled(1.5), &mp, 0.3, 0.05).unwrap();
        assert!(b.t_lower < a.t_lower);
        // G(0) = E(0) + F(0)/(p+1)
        let pieces = NormPieces::of(&g, &u0, Some(&u1), &mp).unwrap();
        let g0 = pieces.energy(&mp) + pieces.source_pow / 4.0;
        assert!((a.g0 - g0).abs() < 1e-12 * g0);
    }

    #[test]
    fn strong_damping_example() {
        // G0 = 1, p = 3, C_eff = 1 → 1/2
        let t = 1f64.powf(1.0 - 3.0) / ((3.0 - 1.0) * 1.0);
        assert_eq!(t, 0.5);
        let g = Grid::line(1.0, 5).unwrap();
        let zero = thm35_lower(&g, &g.zeros(), &g.zeros(), &params(3.0, 2.0, 0.5), 1.0, 1.0).unwrap();
        assert_eq!(zero.t_lower, f64::INFINITY);
    }

    #[test]
    fn degenerate_upper_chains() {
        let g = Grid::line(1.0, 15).unwrap();
        let c = VariationalConstants {
            lambda1: 500.0,
            poincare_b1: 1.0 / PI,
            embed_c: 0.05,
            embed_bstar: 0.05,
            embed_ca: 0.3,
            embed_cb: 0.05,
            well_depth_d: 1.0,
            lambda_star: 1.0,
        };
        let u0 = g.sample(|c| (PI * c[0]).sin());
        let flat = ModelParams::new(3.0, 2.0, 0.0, 1.0, 1).unwrap();
        let o = BoundOptions::default();
        assert!(matches!(
            thm32_upper(&g, &u0, &u0, &flat, &c, &o).unwrap().verdict,
            ChainVerdict::NotApplicable(_)
        ));
        assert!(matches!(
            thm33_upper(&g, &u0, &u0, &flat, &o).unwrap().verdict,
            ChainVerdict::NotApplicable(_)
        ));
        let mp = params(3.0, 2.0, 0.5);
        assert!(matches!(
            thm33_upper(&g, &u0.scaled(0.1), &g.zeros(), &mp, &o).unwrap().verdict,
            ChainVerdict::HypothesesUnmet(_)
        ));
    }

    #[test]
    fn sandwich_logic() {
        assert!(sandwich(true, 1.0, 1.0, &[0.5, f64::INFINITY], 2.0));
        assert!(!sandwich(true, 1.0, 1.0, &[1.5], 2.0));
        assert!(!sandwich(true, 3.0, 3.0, &[0.5], 2.0));
        assert!(sandwich(true, 3.0, 3.0, &[0.5], f64::INFINITY));
        assert!(sandwich(false, f64::NAN, 1.0, &[0.5], 2.0));
        assert!(!sandwich(false, f64::NAN, 3.0, &[0.5], 2.0));
    }
}
