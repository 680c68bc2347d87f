use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dnlslab_core::gauge::{
    duhamel_mismatch, gauge_phase, gauge_residual, gauge_terms, gauge_transform, GaugeParams, Term3Form,
};
use dnlslab_core::littlewood_paley::{DyadicIndex, WindowFamily, WindowProfile};
use dnlslab_core::solver::{band_limited_field, solve, InitialData};
use dnlslab_core::spectral::{Grid, GridSpec, SpacetimeField};
use dnlslab_core::{Complex64, LabError};

fn setup(nx: usize, length: f64, dt: f64, horizon: f64) -> (Arc<Grid>, GridSpec, WindowFamily) {
    let spec = GridSpec::new(nx, length, dt, horizon).unwrap();
    let g = Grid::new(spec).unwrap();
    let w = WindowFamily::build(&g, WindowProfile::SmoothBump).unwrap();
    (g, spec, w)
}

fn band(n: f64) -> DyadicIndex {
    DyadicIndex::from_value(n).unwrap()
}

#[test]
fn gauge_parameters_are_validated() {
    assert!(matches!(GaugeParams::new(1.0, 4.5, band(8.0)), Err(LabError::InvalidGaugeParams(_))));
    assert!(GaugeParams::relaxed(1.0, 4.5, band(8.0)).is_ok());
    assert!(matches!(GaugeParams::relaxed(1.0, 3.0, band(8.0)), Err(LabError::KBelowFour { .. })));
    assert!(GaugeParams::new(0.0, 5.0, band(8.0)).is_err());
    assert!(GaugeParams::linear(5.0, band(8.0)).is_ok());
}

#[test]
fn gauged_trajectory_satisfies_its_equation() {
    let (g, spec, w) = setup(1024, 50.0, 2e-4, 0.05);
    let u0 = InitialData::modulated(0.6, 1.5, 3.0).build(&g).unwrap();
    let traj = solve(&u0, 1.0, 5.0, &spec, 10).unwrap();
    let params = GaugeParams::new(1.0, 5.0, band(4.0)).unwrap();
    let derived = gauge_residual(&traj.data, &params, &w).unwrap();
    assert!(derived < 1e-4, "{derived:e}");
    assert!(duhamel_mismatch(&traj.data, &params, &w, 0.05).unwrap() < 1e-3);
}

#[test]
fn printed_third_term_has_the_wrong_homogeneity() {
    // scaling u by c must scale I_3 by c^{2k+1}
    let (g, _, w) = setup(512, 40.0, 1e-3, 0.1);
    let u0 = InitialData::modulated(0.5, 1.5, 4.0).build(&g).unwrap();
    let u = SpacetimeField::free_evolution(&u0, vec![0.0, 0.01, 0.02]);
    let c = 1.7;
    let k = 5.0;
    let degree = |form: Term3Form| {
        let p = GaugeParams::new(1.0, k, band(4.0)).unwrap().with_term3(form);
        let a = gauge_terms(&u, &p, &w).unwrap().term(3).field(1).l2_norm();
        let b = gauge_terms(&u.scale(Complex64::new(c, 0.0)), &p, &w).unwrap().term(3).field(1).l2_norm();
        (b / a).ln() / c.ln()
    };
    assert!((degree(Term3Form::Derived) - (2.0 * k + 1.0)).abs() < 1e-8);
    let printed = degree(Term3Form::PrintedGrouped);
    assert!((printed - (2.0 * k + 1.0)).abs() > 0.5, "{printed}");
}

#[test]
fn zero_solution_has_zero_gauge() {
    let (g, _, w) = setup(256, 40.0, 1e-3, 0.1);
    let u = SpacetimeField::from_fn(Arc::clone(&g), vec![0.0, 0.1], |_, _| Complex64::new(0.0, 0.0)).unwrap();
    let p = GaugeParams::new(1.0, 5.0, band(4.0)).unwrap();
    assert_eq!(gauge_transform(&u, &p, &w).unwrap().values().iter().map(|z| z.norm()).sum::<f64>(), 0.0);
    let terms = gauge_terms(&u, &p, &w).unwrap();
    for j in 1..=5 {
        assert_eq!(terms.term(j).values().iter().map(|z| z.norm()).sum::<f64>(), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gauge_preserves_block_modulus(seed in any::<u64>(), lambda in -2.0f64..2.0, k in 4.0f64..7.0, level in 2u32..5) {
        prop_assume!(lambda.abs() > 1e-3);
        let (g, _, w) = setup(512, 40.0, 1e-3, 0.1);
        let envelope = InitialData::gaussian(1.0, 2.0).build(&g).unwrap();
        let noise = band_limited_field(&g, 8.0, &mut ChaCha8Rng::seed_from_u64(seed));
        let u0 = envelope.mul(&noise).unwrap().scale(Complex64::new(3.0, 0.0));
        let b = DyadicIndex::Band(level);
        let p = GaugeParams::relaxed(lambda, k, b).unwrap();
        let phase = gauge_phase(&u0, &p, &w).unwrap();
        prop_assert!(phase.values().iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
        let u = SpacetimeField::free_evolution(&u0, vec![0.0, 0.05]);
        let v = gauge_transform(&u, &p, &w).unwrap();
        let block = w.project_spacetime(&u, b).unwrap();
        let err = v.values().iter().zip(block.values()).map(|(a, c)| (a.norm() - c.norm()).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }
}
