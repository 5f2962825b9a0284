use std::sync::OnceLock;

use beamblow::functionals::{nehari_i, potential_j, NormPieces};
use beamblow::mesh::{self, biharmonic_clamped, laplacian_dirichlet};
use beamblow::spectra::VariationalConstants;
use beamblow::{Field, Grid, ModelParams};
use proptest::prelude::*;

fn params() -> ModelParams {
    ModelParams::new(3.0, 2.0, 0.5, 1.0, 1).unwrap()
}

fn line() -> Grid {
    Grid::line(1.0, 32).unwrap()
}

fn constants() -> &'static VariationalConstants {
    static C: OnceLock<VariationalConstants> = OnceLock::new();
    C.get_or_init(|| VariationalConstants::compute(&line(), &params(), 7).unwrap())
}

fn nonzero(values: Vec<f64>) -> Option<Vec<f64>> {
    values.iter().any(|v| v.abs() > 1e-3).then_some(values)
}

fn field_1d() -> impl Strategy<Value = Field> {
    prop::collection::vec(-1.0f64..1.0, 32)
        .prop_filter_map("zero field", nonzero)
        .prop_map(|v| Field::new(&line(), v).unwrap())
}

fn field_2d() -> impl Strategy<Value = (Grid, Field)> {
    prop::collection::vec(-1.0f64..1.0, 64).prop_filter_map("zero field", nonzero).prop_map(|v| {
        let g = Grid::rect([1.0, 0.5], [8, 8]).unwrap();
        let f = Field::new(&g, v).unwrap();
        (g, f)
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn operators_are_definite_and_symmetric(u in field_1d(), w in field_1d(), (g2, v) in field_2d()) {
        let g = line();
        prop_assert!(mesh::grad_norm_sq(&g, &u).unwrap() > 0.0);
        prop_assert!(mesh::lap_norm_sq(&g, &u).unwrap() > 0.0);
        prop_assert!(mesh::grad_norm_sq(&g2, &v).unwrap() > 0.0);
        prop_assert!(mesh::lap_norm_sq(&g2, &v).unwrap() > 0.0);
        let bu = biharmonic_clamped(&g, &u).unwrap();
        let bw = biharmonic_clamped(&g, &w).unwrap();
        let scale = mesh::norm_lq(&g, &bu, 2.0).unwrap() * mesh::norm_lq(&g, &w, 2.0).unwrap();
        let defect = mesh::inner(&g, &bu, &w).unwrap() - mesh::inner(&g, &u, &bw).unwrap();
        prop_assert!(defect.abs() <= 1e-13 * scale);
        let lu = laplacian_dirichlet(&g, &u).unwrap();
        let lw = laplacian_dirichlet(&g, &w).unwrap();
        let scale = mesh::norm_lq(&g, &lu, 2.0).unwrap() * mesh::norm_lq(&g, &w, 2.0).unwrap();
        let defect = mesh::inner(&g, &lu, &w).unwrap() - mesh::inner(&g, &u, &lw).unwrap();
        prop_assert!(defect.abs() <= 1e-13 * scale);
    }

    #[test]
    fn green_identities_hold_in_two_dimensions((g, u) in field_2d()) {
        prop_assert!(rel(mesh::lap_norm_sq(&g, &u).unwrap(), mesh::lap_norm_sq_by_differences(&g, &u).unwrap()) < 1e-13);
        prop_assert!(rel(mesh::grad_norm_sq(&g, &u).unwrap(), mesh::grad_norm_sq_by_differences(&g, &u).unwrap()) < 1e-13);
    }

    #[test]
    fn poincare_type_inequalities(u in field_1d()) {
        let g = line();
        let lambda1 = constants().lambda1;
        let l2 = mesh::inner(&g, &u, &u).unwrap();
        let grad = mesh::grad_norm_sq(&g, &u).unwrap();
        let lap = mesh::lap_norm_sq(&g, &u).unwrap();
        prop_assert!(lambda1 * l2 <= lap * (1.0 + 1e-9));
        prop_assert!(lambda1.sqrt() * grad <= lap * (1.0 + 1e-9));
        let b1 = constants().poincare_b1;
        prop_assert!(l2.sqrt() <= b1 * grad.sqrt() * (1.0 + 1e-9));
    }

    #[test]
    fn embedding_constants_dominate(u in field_1d()) {
        let g = line();
        let c = constants();
        let p = params().p;
        let pieces = NormPieces::of(&g, &u, None, &params()).unwrap();
        let lp1 = mesh::norm_lq(&g, &u, p + 1.0).unwrap();
        let l2p = mesh::norm_lq(&g, &u, 2.0 * p).unwrap();
        let slack = 1.0 + 1e-9;
        prop_assert!(lp1 <= c.embed_c * pieces.h_sq().sqrt() * slack);
        prop_assert!(lp1 <= c.embed_ca * pieces.grad_sq.sqrt() * slack);
        prop_assert!(lp1 <= c.embed_cb * pieces.lap_sq.sqrt() * slack);
        prop_assert!(l2p <= c.embed_bstar * pieces.lap_sq.sqrt() * slack);
    }

    #[test]
    fn potential_splits_along_nehari(u in field_1d(), scale in 0.1f64..100.0) {
        // J = (p−1)/(2(p+1))‖u‖_H² + β(p−2γ−1)/(2(γ+1)(p+1))‖∇u‖^{2γ+2} + I/(p+1)
        let g = line();
        let mp = params();
        let u = u.scaled(scale);
        let pieces = NormPieces::of(&g, &u, None, &mp).unwrap();
        let (p, gamma, beta) = (mp.p, mp.gamma, mp.beta);
        let rhs = (p - 1.0) / (2.0 * (p + 1.0)) * pieces.h_sq()
            + beta * (p - 2.0 * gamma - 1.0) / (2.0 * (gamma + 1.0) * (p + 1.0)) * pieces.grad_sq.powf(gamma + 1.0)
            + nehari_i(&g, &u, &mp).unwrap() / (p + 1.0);
        let j = potential_j(&g, &u, &mp).unwrap();
        let size = pieces.h_sq() + pieces.source_pow + pieces.grad_sq.powf(gamma + 1.0);
        prop_assert!((j - rhs).abs() <= 1e-12 * size);
    }

    #[test]
    fn fiber_changes_sign_once(u in field_1d()) {
        let g = line();
        let mp = params();
        // centre the scan where the quadratic and source parts balance
        let pieces = NormPieces::of(&g, &u, None, &mp).unwrap();
        let centre = (pieces.h_sq() / pieces.source_pow).powf(1.0 / (mp.p - 1.0));
        let signs: Vec<bool> = (-10..=10)
            .map(|k| nehari_i(&g, &u.scaled(centre * 2f64.powi(k)), &mp).unwrap() > 0.0)
            .collect();
        prop_assert!(signs[0]);
        prop_assert!(!signs[signs.len() - 1]);
        prop_assert_eq!(signs.windows(2).filter(|w| w[0] != w[1]).count(), 1);
    }
}
