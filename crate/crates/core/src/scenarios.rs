//! Initial data: presets and prescribed-energy blow-up data built from two
//! orthogonal Laplacian eigenfields.

use crate::error::{Error, Result};
use crate::functionals::{energy_e, ModelParams, NormPieces};
use crate::mesh::{self, Field, Grid};
use crate::spectra::{smallest_eigen, smallest_eigen_with, EigenOptions, Operator};

#[derive(Debug, Clone, PartialEq)]
pub enum Construction {
    Preset { name: String, amplitude: f64 },
    EnergyLevel { target: f64, r1: f64, r2: f64, chi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: Field,
    pub u1: Field,
    pub meta: Construction,
}

impl InitialData {
    pub fn meta_lines(&self) -> Vec<(String, String)> {
        match &self.meta {
            Construction::Preset { name, amplitude } => vec![
                ("construction".into(), "preset".into()),
                ("preset".into(), name.clone()),
                ("amplitude".into(), format!("{amplitude:.16e}")),
            ],
            Construction::EnergyLevel { target, r1, r2, chi } => vec![
                ("construction".into(), "energy_level".into()),
                ("energy_R".into(), format!("{target:.16e}")),
                ("r1".into(), format!("{r1:.16e}")),
                ("r2".into(), format!("{r2:.16e}")),
                ("chi".into(), format!("{chi:.16e}")),
            ],
        }
    }
}

/// First two Dirichlet Laplacian eigenfields, unit in `L²` and orthogonal.
pub fn eigen_pair_basis(grid: &Grid) -> Result<(Field, Field)> {
    if grid.len() < 2 {
        return Err(Error::invalid("eigen pair basis needs at least two interior nodes"));
    }
    let v1 = smallest_eigen(grid, Operator::DirichletLaplacian)?.field;
    let mut v2 = smallest_eigen_with(grid, Operator::DirichletLaplacian, &[&v1], EigenOptions::default())?
        .field
        .into_vec();
    let c = mesh::dot(grid, &v2, v1.values());
    for (a, b) in v2.iter_mut().zip(v1.values()) {
        *a -= c * b;
    }
    let nrm = mesh::dot(grid, &v2, &v2).sqrt();
    v2.iter_mut().for_each(|x| *x /= nrm);
    Ok((v1, Field::from_vec(v2)))
}

/// `χ(r₁) = ½r₁²(‖v₁‖² + ‖Δv₁‖² + ‖∇v₁‖²) + β r₁^{2(γ+1)}‖∇v₁‖^{2(γ+1)}/(2(γ+1)) − r₁^{p+1}‖v₁‖_{p+1}^{p+1}/(p+1)`,
/// the energy of `(r₁v₁, r₁v₁)`.
pub fn chi(r1: f64, grid: &Grid, v1: &Field, params: &ModelParams) -> Result<f64> {
    if !(r1 >= 0.0) {
        return Err(Error::invalid(format!("chi needs r1 >= 0, got {r1}")));
    }
    let pieces = NormPieces::of(grid, v1, None, params)?;
    Ok(chi_from(r1, &pieces, params))
}

fn chi_from(r1: f64, v1: &NormPieces, params: &ModelParams) -> f64 {
    let ModelParams { p, gamma, beta, .. } = *params;
    let quad = 0.5 * r1 * r1 * (v1.l2_sq + v1.h_sq());
    let kirch = if beta == 0.0 {
        0.0
    } else {
        beta * (r1 * r1 * v1.grad_sq).powf(gamma + 1.0) / (2.0 * (gamma + 1.0))
    };
    quad + kirch - r1.powf(p + 1.0) * v1.source_pow / (p + 1.0)
}

/// Relative margin applied to the smallest admissible `r₁`.
const R1_MARGIN: f64 = 1.0905077326652577; // 2^{1/8}

/// Data `(r₁v₁, r₁v₁ + r₂v₂)` with energy exactly `target` and
/// `(u₀, u₁) = r₁²‖v₁‖² > B·target`.
pub fn construct_energy_level(grid: &Grid, params: &ModelParams, target: f64, b: f64) -> Result<InitialData> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::invalid(format!("B must be positive, got {b}")));
    }
    if !target.is_finite() {
        return Err(Error::invalid("target energy must be finite"));
    }
    let (v1, v2) = eigen_pair_basis(grid)?;
    let pieces = NormPieces::of(grid, &v1, None, params)?;
    let admissible = |r1: f64| chi_from(r1, &pieces, params) < target && r1 * r1 * pieces.l2_sq / b > target;

    let mut hi = 1.0f64;
    let mut lo = 0.0;
    let mut doublings = 0;
    while !admissible(hi) {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::ConstructionFailure(format!(
                "no admissible r1 below 2^60 for energy {target}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if admissible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let r1 = if admissible(hi * R1_MARGIN) { hi * R1_MARGIN } else { hi };
    let chi_r1 = chi_from(r1, &pieces, params);
    let mut r2 = (2.0 * (target - chi_r1)).sqrt() / pieces.l2_sq.sqrt();
    let u0 = v1.scaled(r1);
    let mut u1 = v1.combine(r1, &v2, r2);

    // the closed form and the assembled energy differ by rounding in terms
    // much larger than the target; shift the free kinetic part to close it
    let mut e0 = energy_e(grid, &u0, &u1, params)?;
    for _ in 0..4 {
        if (e0 - target).abs() <= 1e-12 * target.abs().max(1.0) {
            break;
        }
        let r2_sq = r2 * r2 + 2.0 * (target - e0);
        if !(r2_sq >= 0.0) {
            break;
        }
        r2 = r2_sq.sqrt();
        u1 = v1.combine(r1, &v2, r2);
        e0 = energy_e(grid, &u0, &u1, params)?;
    }
    if !((e0 - target).abs() <= 1e-9 * target.abs().max(1.0)) {
        return Err(Error::ConstructionFailure(format!(
            "constructed energy {e0:.12e} misses target {target:.12e}"
        )));
    }
    let inner = mesh::inner(grid, &u0, &u1)?;
    if !(inner > b * target) {
        return Err(Error::ConstructionFailure(format!(
            "(u0, u1) = {inner:.6e} does not exceed B*R = {:.6e}",
            b * target
        )));
    }
    Ok(InitialData {
        u0,
        u1,
        meta: Construction::EnergyLevel {
            target,
            r1,
            r2,
            chi: chi_r1,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// `u₀ = a·φ` with `φ` the clamped ground state, `u₁ = 0`.
    SineBump { amplitude: f64 },
    /// `u₀ = f·a₀·φ`, `u₁ = 0`, where `a₀` is the zero-energy amplitude; needs `f > 1`.
    NegativeEnergy { factor: f64 },
    /// Prescribed energy `energy` with growth constant `b`.
    HighEnergy { energy: f64, b: f64 },
}

pub const PRESET_NAMES: [&str; 3] = ["sine_bump", "negative_energy", "high_energy"];
pub const DEFAULT_NEGATIVE_FACTOR: f64 = 1.25;

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::SineBump { .. } => "sine_bump",
            Preset::NegativeEnergy { .. } => "negative_energy",
            Preset::HighEnergy { .. } => "high_energy",
        }
    }
}

/// Smallest `a > 0` with `J(aφ) = 0`.
pub fn zero_energy_amplitude(grid: &Grid, phi: &Field, params: &ModelParams) -> Result<f64> {
    let pieces = NormPieces::of(grid, phi, None, params)?;
    if !(pieces.source_pow > 0.0) {
        return Err(Error::ConstructionFailure("profile has no source mass".into()));
    }
    let energy = |a: f64| {
        let scaled = NormPieces {
            grad_sq: a * a * pieces.grad_sq,
            lap_sq: a * a * pieces.lap_sq,
            source_pow: a.powf(params.p + 1.0) * pieces.source_pow,
            l2_sq: 0.0,
            kinetic_sq: 0.0,
        };
        scaled.potential(params)
    };
    let (mut lo, mut hi) = (0.0, 1.0f64);
    let mut guard = 0;
    while energy(hi) >= 0.0 {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::ConstructionFailure("zero-energy amplitude not bracketed".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if energy(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

pub fn preset(grid: &Grid, params: &ModelParams, which: Preset) -> Result<InitialData> {
    match which {
        Preset::SineBump { amplitude } => {
            if !amplitude.is_finite() {
                return Err(Error::invalid("amplitude must be finite"));
            }
            let phi = smallest_eigen(grid, Operator::ClampedBiharmonic)?.field;
            Ok(InitialData {
                u0: phi.scaled(amplitude),
                u1: grid.zeros(),
                meta: Construction::Preset {
                    name: which.name().into(),
                    amplitude,
                },
            })
        }
        Preset::NegativeEnergy { factor } => {
            if !(factor > 1.0 && factor.is_finite()) {
                return Err(Error::invalid(format!(
                    "negative_energy amplitude factor must exceed 1, got {factor}"
                )));
            }
            let phi = smallest_eigen(grid, Operator::ClampedBiharmonic)?.field;
            let a = factor * zero_energy_amplitude(grid, &phi, params)?;
            let u0 = phi.scaled(a);
            let u1 = grid.zeros();
            let e0 = energy_e(grid, &u0, &u1, params)?;
            if !(e0 < 0.0) {
                return Err(Error::ConstructionFailure(format!("negative_energy preset has E(0) = {e0}")));
            }
            Ok(InitialData {
                u0,
                u1,
                meta: Construction::Preset {
                    name: which.name().into(),
                    amplitude: a,
                },
            })
        }
        Preset::HighEnergy { energy, b } => construct_energy_level(grid, params, energy, b),
    }
}

/// Looks up a preset by name; `amplitude` is the bump amplitude or the
/// negative-energy factor, `energy_and_b` feeds `high_energy`.
pub fn preset_by_name(
    name: &str,
    grid: &Grid,
    params: &ModelParams,
    amplitude: Option<f64>,
    energy_and_b: Option<(f64, f64)>,
) -> Result<InitialData> {
    let which = match name {
        "sine_bump" => Preset::SineBump {
            amplitude: amplitude.unwrap_or(1.0),
        },
        "negative_energy" => Preset::NegativeEnergy {
            factor: amplitude.unwrap_or(DEFAULT_NEGATIVE_FACTOR),
        },
        "high_energy" => {
            let (energy, b) =
                energy_and_b.ok_or_else(|| Error::invalid("high_energy preset needs an energy and B"))?;
            Preset::HighEnergy { energy, b }
        }
        other => return Err(Error::invalid(format!("unknown preset `{other}`"))),
    };
    preset(grid, params, which)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{classify, WellClass};

    fn params() -> ModelParams {
        ModelParams::new(3.0, 2.0, 0.5, 1.0, 1).unwrap()
    }

    #[test]
    fn basis_is_orthonormal_sines() {
        let g = Grid::line(1.0, 63).unwrap();
        let (v1, v2) = eigen_pair_basis(&g).unwrap();
        assert!(mesh::inner(&g, &v1, &v2).unwrap().abs() <= 1e-10);
        assert!((mesh::norm_lq(&g, &v1, 2.0).unwrap() - 1.0).abs() <= 1e-12);
        assert!((mesh::norm_lq(&g, &v2, 2.0).unwrap() - 1.0).abs() <= 1e-12);
        let pi = std::f64::consts::PI;
        let s1 = g.sample(|c| 2f64.sqrt() * (pi * c[0]).sin());
        let s2 = g.sample(|c| 2f64.sqrt() * (2.0 * pi * c[0]).sin());
        let d1 = v1.combine(1.0, &s1, -1.0).max_abs().min(v1.combine(1.0, &s1, 1.0).max_abs());
        let d2 = v2.combine(1.0, &s2, -1.0).max_abs().min(v2.combine(1.0, &s2, 1.0).max_abs());
        assert!(d1 < 1e-3 && d2 < 1e-3, "{d1} {d2}");
        assert!(eigen_pair_basis(&Grid::line(1.0, 1).unwrap()).is_err());
    }

    #[test]
    fn chi_shape() {
        let g = Grid::line(1.0, 31).unwrap();
        let mp = params();
        let (v1, _) = eigen_pair_basis(&g).unwrap();
        assert_eq!(chi(0.0, &g, &v1, &mp).unwrap(), 0.0);
        assert!(chi(1e-3, &g, &v1, &mp).unwrap() > 0.0);
        assert!(chi(1e4, &g, &v1, &mp).unwrap() < -1e10);
        assert!(chi(-1.0, &g, &v1, &mp).is_err());
        // matches the energy of (r v1, r v1)
        let r = 7.5;
        let e = energy_e(&g, &v1.scaled(r), &v1.scaled(r), &mp).unwrap();
        assert!((chi(r, &g, &v1, &mp).unwrap() - e).abs() < 1e-12 * e.abs());
    }

    #[test]
    fn energy_levels_are_hit() {
        let g = Grid::line(1.0, 31).unwrap();
        let mp = params();
        let b = 1.5;
        for target in [-5.0, -1.0, 0.0, 0.5, 100.0, 5e4] {
            let data = construct_energy_level(&g, &mp, target, b).unwrap();
            let e = energy_e(&g, &data.u0, &data.u1, &mp).unwrap();
            assert!((e - target).abs() <= 1e-9 * target.abs().max(1.0));
            assert!(mesh::inner(&g, &data.u0, &data.u1).unwrap() > b * target);
            let again = construct_energy_level(&g, &mp, target, b).unwrap();
            assert_eq!(data, again);
        }
        assert!(construct_energy_level(&g, &mp, 1.0, 0.0).is_err());
    }

    #[test]
    fn presets() {
        let g = Grid::line(1.0, 31).unwrap();
        let mp = params();
        let zero = preset(&g, &mp, Preset::SineBump { amplitude: 0.0 }).unwrap();
        assert_eq!(energy_e(&g, &zero.u0, &zero.u1, &mp).unwrap(), 0.0);
        let neg = preset(&g, &mp, Preset::NegativeEnergy { factor: 1.25 }).unwrap();
        assert!(energy_e(&g, &neg.u0, &neg.u1, &mp).unwrap() < 0.0);
        assert_eq!(classify(&g, &neg.u0, &mp, 1e-9).unwrap(), WellClass::UnstableV);
        assert!(preset_by_name("bogus", &g, &mp, None, None).is_err());
        assert!(preset_by_name("high_energy", &g, &mp, None, None).is_err());
        assert!(preset(&g, &mp, Preset::NegativeEnergy { factor: 0.9 }).is_err());
    }
}
