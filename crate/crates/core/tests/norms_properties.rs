use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dnlslab_core::littlewood_paley::{WindowFamily, WindowProfile};
use dnlslab_core::norms::{mixed_norm, time_norm, xt_norm, yt_norm, MixedNormSpec};
use dnlslab_core::solver::{band_limited_field, InitialData};
use dnlslab_core::spectral::{Grid, GridSpec, SpacetimeField};
use dnlslab_core::Complex64;

fn grid(nx: usize, length: f64) -> Arc<Grid> {
    Grid::new(GridSpec::new(nx, length, 1e-3, 0.1).unwrap()).unwrap()
}

/// Random space-time field with a non-uniform time axis.
fn random_spacetime(g: &Arc<Grid>, seed: u64, levels: usize) -> SpacetimeField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    let mut times = Vec::with_capacity(levels);
    let mut slices = Vec::with_capacity(levels);
    for _ in 0..levels {
        times.push(t);
        t += rng.gen_range(0.01..0.05);
        slices.push(band_limited_field(g, f64::INFINITY, &mut rng).values().to_vec());
    }
    SpacetimeField::from_slices(Arc::clone(g), times, slices).unwrap()
}

fn exps() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(2.0), Just(4.0), Just(f64::INFINITY), 1.0f64..8.0]
}

/// `‖a(x) b(t)‖` computed by hand: Riemann sum in space, trapezoid in time.
fn separable_oracle(a: &[f64], dx: f64, b: &[f64], times: &[f64], p: f64, q: f64) -> f64 {
    let lp = if p.is_infinite() {
        a.iter().copied().fold(0.0, f64::max)
    } else {
        (a.iter().map(|v| v.powf(p)).sum::<f64>() * dx).powf(1.0 / p)
    };
    let lq = if q.is_infinite() {
        b.iter().copied().fold(0.0, f64::max)
    } else {
        let mut s = 0.0;
        for i in 1..times.len() {
            s += 0.5 * (times[i] - times[i - 1]) * (b[i].powf(q) + b[i - 1].powf(q));
        }
        s.powf(1.0 / q)
    };
    lp * lq
}

#[test]
fn separable_fields_factor_in_both_orders() {
    let g = grid(256, 20.0);
    let times: Vec<f64> = (0..41).map(|i| 0.5 * (i as f64 / 40.0).powi(2)).collect();
    let a: Vec<f64> = g.x().iter().map(|x| (-x * x / 4.0).exp()).collect();
    let b: Vec<f64> = times.iter().map(|t| 1.0 + (3.0 * t).sin()).collect();
    let u = SpacetimeField::from_fn(Arc::clone(&g), times.clone(), |t, x| {
        Complex64::from_polar((-x * x / 4.0).exp() * (1.0 + (3.0 * t).sin()), x + t)
    })
    .unwrap();
    for (p, q) in [(2.0, 2.0), (4.0, f64::INFINITY), (f64::INFINITY, 2.0), (1.0, 2.0), (3.0, 1.5)] {
        let oracle = separable_oracle(&a, g.dx(), &b, &times, p, q);
        for spec in [MixedNormSpec::space_outer(p, q).unwrap(), MixedNormSpec::time_outer(p, q).unwrap()] {
            let v = mixed_norm(&u, &spec);
            assert!((v - oracle).abs() < 1e-12 * oracle, "p={p} q={q}: {v} vs {oracle}");
        }
    }
}

#[test]
fn plane_wave_strichartz_endpoint() {
    // |S(t)e^{iξx}| = 1, so the L_T^4 L_x^∞ norm is T^{1/4}
    let g = grid(128, 2.0 * std::f64::consts::PI * 4.0);
    let phi = dnlslab_core::spectral::Field::from_fn(Arc::clone(&g), |x| Complex64::from_polar(1.0, 0.75 * x)).unwrap();
    let u = SpacetimeField::free_evolution(&phi, SpacetimeField::uniform_times(0.4, 40));
    let v = mixed_norm(&u, &MixedNormSpec::time_outer(f64::INFINITY, 4.0).unwrap());
    assert!((v - 0.4f64.powf(0.25)).abs() < 1e-12);
}

#[test]
fn time_norm_of_linear_ramp() {
    let times: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
    // trapezoid is exact for t itself
    assert!((time_norm(&times, &times, 1.0) - 0.5).abs() < 1e-15);
    assert_eq!(time_norm(&times, &times, f64::INFINITY), 1.0);
}

#[test]
fn xt_and_yt_of_zero_vanish() {
    let g = grid(256, 40.0);
    let w = WindowFamily::build(&g, WindowProfile::SmoothBump).unwrap();
    let u = SpacetimeField::from_fn(Arc::clone(&g), vec![0.0, 0.1, 0.2], |_, _| Complex64::new(0.0, 0.0)).unwrap();
    assert_eq!(xt_norm(&u, &w, true).unwrap().total, 0.0);
    assert_eq!(yt_norm(&u), 0.0);
}

#[test]
fn low_block_flag_only_drops_a_nonnegative_piece() {
    let g = grid(512, 50.0);
    let w = WindowFamily::build(&g, WindowProfile::SmoothBump).unwrap();
    let phi = InitialData::gaussian(1.0, 2.0).build(&g).unwrap();
    let u = SpacetimeField::free_evolution(&phi, SpacetimeField::uniform_times(0.2, 20));
    let with = xt_norm(&u, &w, true).unwrap();
    let without = xt_norm(&u, &w, false).unwrap();
    assert!(without.total < with.total);
    assert_eq!(without.sup_sobolev, with.sup_sobolev);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shrinking_the_horizon_never_increases_a_norm(seed in any::<u64>(), p in exps(), q in exps(), keep in 2usize..12) {
        let g = grid(64, 10.0);
        let u = random_spacetime(&g, seed, 12);
        let short = u.truncated(keep);
        for spec in [MixedNormSpec::space_outer(p, q).unwrap(), MixedNormSpec::time_outer(p, q).unwrap()] {
            prop_assert!(mixed_norm(&short, &spec) <= mixed_norm(&u, &spec) * (1.0 + 1e-14));
        }
    }

    #[test]
    fn norms_are_absolutely_homogeneous(seed in any::<u64>(), p in exps(), q in exps(), c in 0.1f64..10.0) {
        let g = grid(64, 10.0);
        let u = random_spacetime(&g, seed, 8);
        let spec = MixedNormSpec::space_outer(p, q).unwrap();
        let scaled = u.scale(Complex64::from_polar(c, 0.7));
        prop_assert!((mixed_norm(&scaled, &spec) - c * mixed_norm(&u, &spec)).abs() < 1e-12 * c * mixed_norm(&u, &spec));
    }

    #[test]
    fn minkowski_order(seed in any::<u64>(), p in 1.0f64..8.0, q in 1.0f64..8.0) {
        // ‖·‖_{L_x^p L_T^q} ≤ ‖·‖_{L_T^q L_x^p} when p ≥ q
        let (p, q) = if p >= q { (p, q) } else { (q, p) };
        let g = grid(64, 10.0);
        let u = random_spacetime(&g, seed, 8);
        let a = mixed_norm(&u, &MixedNormSpec::space_outer(p, q).unwrap());
        let b = mixed_norm(&u, &MixedNormSpec::time_outer(p, q).unwrap());
        prop_assert!(a <= b * (1.0 + 1e-12));
    }

    #[test]
    fn xt_norm_is_homogeneous(seed in any::<u64>(), c in 0.1f64..4.0) {
        let g = grid(128, 20.0);
        let w = WindowFamily::build(&g, WindowProfile::SmoothBump).unwrap();
        let u = random_spacetime(&g, seed, 6);
        let a = xt_norm(&u, &w, true).unwrap().total;
        let b = xt_norm(&u.scale(Complex64::new(c, 0.0)), &w, true).unwrap().total;
        prop_assert!((b - c * a).abs() < 1e-12 * b);
        let ya = yt_norm(&u);
        let yb = yt_norm(&u.scale(Complex64::new(0.0, c)));
        prop_assert!((yb - c * ya).abs() < 1e-12 * yb);
    }
}
