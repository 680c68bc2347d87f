use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erf;

use dnlslab_core::norms::sobolev_norm;
use dnlslab_core::solver::{band_limited_field, InitialData};
use dnlslab_core::spectral::{DerivativeKind, Field, Grid, GridSpec};
use dnlslab_core::Complex64;

fn grid(nx: usize, length: f64) -> Arc<Grid> {
    Grid::new(GridSpec::new(nx, length, 1e-3, 0.1).unwrap()).unwrap()
}

fn random_field(g: &Arc<Grid>, seed: u64) -> Field {
    band_limited_field(g, f64::INFINITY, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn gaussian_primitive_matches_erf() {
    let g = grid(1024, 40.0);
    let f = Field::from_fn(Arc::clone(&g), |x| Complex64::new((-x * x).exp(), 0.0)).unwrap();
    let prim = f.primitive().unwrap();
    let x0 = -20.0;
    for (j, &x) in g.x().iter().enumerate() {
        let exact = 0.5 * PI.sqrt() * (erf(x) - erf(x0));
        assert!((prim.values()[j].re - exact).abs() < 1e-10, "x = {x}");
    }
}

#[test]
fn gaussian_half_derivative_norm_from_transform() {
    // c_m = f̂(ξ_m)/L with f̂(ξ) = √π e^{−ξ²/4}, so ‖f‖²_{Ḣ^{1/2}} = (1/L) Σ |ξ_m| π e^{−ξ_m²/2};
    // the continuum value is 1
    let length = 60.0;
    let g = grid(2048, length);
    let f = InitialData::gaussian(1.0, 1.0).build(&g).unwrap();
    let lattice: f64 = (-1023..1024)
        .map(|m| {
            let xi = 2.0 * PI * m as f64 / length;
            xi.abs() * PI * (-xi * xi / 2.0).exp()
        })
        .sum::<f64>()
        / length;
    let h = sobolev_norm(&f, 0.5, true).unwrap();
    assert!((h - lattice.sqrt()).abs() < 1e-12);
    assert!((h - 1.0).abs() < 1e-2);
    assert!((f.l2_norm() - (PI / 2.0).powf(0.25)).abs() < 1e-12);
}

#[test]
fn inhomogeneous_half_norm_matches_quadrature() {
    // (1/2π) ∫ (1+ξ²)^{1/2} π e^{−ξ²/2} dξ by composite Simpson on [0, 40]
    let n = 40_000;
    let h = 40.0 / n as f64;
    let integrand = |xi: f64| (1.0 + xi * xi).sqrt() * (-xi * xi / 2.0).exp();
    let mut s = integrand(0.0) + integrand(40.0);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * integrand(i as f64 * h);
    }
    let exact = (s * h / 3.0).sqrt();
    let g = grid(2048, 60.0);
    let f = InitialData::gaussian(1.0, 1.0).build(&g).unwrap();
    assert!((sobolev_norm(&f, 0.5, false).unwrap() - exact).abs() < 1e-10);
}

#[test]
fn derivative_of_plane_wave() {
    let g = grid(256, 2.0 * PI * 4.0);
    let m = 5.0 / 4.0;
    let f = Field::from_fn(Arc::clone(&g), |x| Complex64::from_polar(1.0, m * x)).unwrap();
    let expected = f.scale(Complex64::new(0.0, m));
    assert!(max_diff(&f.derivative(1), &expected) < 1e-12);
}

#[test]
fn nyquist_mode_is_removed_by_multipliers() {
    let g = grid(64, 10.0);
    let nyq = Field::from_fn(Arc::clone(&g), |x| Complex64::from_polar(1.0, PI * 64.0 / 10.0 * x)).unwrap();
    assert!(nyq.propagate(0.3).sup_norm() < 1e-12);
    assert!(nyq.derivative(1).sup_norm() < 1e-12);
}

#[test]
fn propagator_phase_of_single_mode() {
    let g = grid(128, 20.0);
    let xi = 2.0 * PI * 3.0 / 20.0;
    let phi = Field::from_fn(Arc::clone(&g), |x| Complex64::from_polar(1.0, xi * x)).unwrap();
    let t = 0.37;
    let expected = phi.scale(Complex64::from_polar(1.0, t * xi * xi));
    assert!(max_diff(&phi.propagate(t), &expected) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn plancherel(seed in any::<u64>()) {
        let g = grid(256, 30.0);
        let f = random_field(&g, seed);
        let spectral: f64 = f.analyze().coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>() * g.length();
        prop_assert!((spectral.sqrt() - f.l2_norm()).abs() < 1e-12 * f.l2_norm().max(1.0));
    }

    #[test]
    fn analyze_synthesize_roundtrip(seed in any::<u64>()) {
        let g = grid(128, 17.0);
        let f = random_field(&g, seed);
        prop_assert!(max_diff(&f.analyze().synthesize(), &f) < 1e-13);
    }

    #[test]
    fn propagator_is_unitary_group(seed in any::<u64>(), t in -1.0f64..1.0, s in -1.0f64..1.0) {
        let g = grid(256, 40.0);
        let f = random_field(&g, seed);
        prop_assert!((f.propagate(t).l2_norm() - f.l2_norm()).abs() < 1e-12);
        prop_assert!(max_diff(&f.propagate(t).propagate(s), &f.propagate(t + s)) < 1e-12);
        prop_assert!(max_diff(&f.propagate(t).propagate(-t), &f) < 1e-12);
    }

    #[test]
    fn fractional_derivatives_compose(seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let g = grid(128, 25.0);
        let f = random_field(&g, seed);
        let ab = f
            .fractional_derivative(a, DerivativeKind::Inhomogeneous).unwrap()
            .fractional_derivative(b, DerivativeKind::Inhomogeneous).unwrap();
        let direct = f.fractional_derivative(a + b, DerivativeKind::Inhomogeneous).unwrap();
        prop_assert!(max_diff(&ab, &direct) < 1e-10);
    }

    #[test]
    fn sobolev_norm_is_homogeneous(seed in any::<u64>(), c in 0.1f64..5.0, s in -0.5f64..1.5) {
        let g = grid(128, 25.0);
        let f = random_field(&g, seed);
        let n1 = sobolev_norm(&f, s, false).unwrap();
        let n2 = sobolev_norm(&f.scale(Complex64::new(0.0, c)), s, false).unwrap();
        prop_assert!((n2 - c * n1).abs() < 1e-12 * n2.max(1.0));
    }
}
