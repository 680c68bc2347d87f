use std::sync::Arc;

use dnlslab_core::estimates::{
    commutator_sample, gauge_leibniz_sample, verify_apriori, verify_bilinear, verify_commutator, verify_data_gauge,
    verify_inhomogeneous, verify_nonlinear, verify_smoothing_maximal, verify_strichartz, FamilyKind,
    InhomogeneousEstimate, LeibnizExponents, ParameterRanges, Physics, QuadratureConfig, SmoothingKind, Suite,
    SuiteGrid, TestFamily, SCHEMA_VERSION,
};
use dnlslab_core::littlewood_paley::{DyadicIndex, WindowProfile};
use dnlslab_core::spectral::{Grid, GridSpec, SpacetimeField};
use dnlslab_core::{Complex64, LabError};

fn linear_suite() -> Suite {
    Suite::new(SuiteGrid::new(256, 40.0, 0.01, 0.5, 2).unwrap())
}

fn quick(kind: FamilyKind, n: usize, seed: u64) -> TestFamily {
    TestFamily::new(kind, n, seed)
}

fn silent(kind: FamilyKind, n: usize) -> TestFamily {
    quick(kind, n, 5).with_ranges(ParameterRanges {
        amp: (0.0, 0.0),
        ..ParameterRanges::default()
    })
}

fn exps() -> LeibnizExponents {
    LeibnizExponents { p: 4.0, p1: 8.0, p2: 8.0, q: 2.0, q1: 4.0, q2: 4.0 }
}

#[test]
fn unitary_strichartz_case_is_an_identity() {
    let r = verify_strichartz(&linear_suite().without_refinement(), &quick(FamilyKind::GaussianSweep, 6, 7), 0.0).unwrap();
    assert!(r.pass);
    for q in r.ratios() {
        assert!((q - 1.0).abs() < 1e-10, "{q}");
    }
}

#[test]
fn linear_ratios_are_invariant_under_amplitude() {
    let suite = linear_suite().without_refinement();
    let base = quick(FamilyKind::ModulatedSweep, 4, 9);
    let doubled = base.clone().with_ranges(ParameterRanges {
        amp: (0.4, 2.0),
        ..ParameterRanges::default()
    });
    let same = |a: &dnlslab_core::estimates::EstimateReport, b: &dnlslab_core::estimates::EstimateReport| {
        for (x, y) in a.ratios().iter().zip(b.ratios()) {
            assert!((x - y).abs() < 1e-6 * x.abs().max(1e-12), "{} {x} {y}", a.id);
        }
    };
    same(&verify_strichartz(&suite, &base, 0.5).unwrap(), &verify_strichartz(&suite, &doubled, 0.5).unwrap());
    same(
        &verify_smoothing_maximal(&suite, &base, SmoothingKind::Smoothing, 0.5).unwrap(),
        &verify_smoothing_maximal(&suite, &doubled, SmoothingKind::Smoothing, 0.5).unwrap(),
    );
    let w = InhomogeneousEstimate::DoubleSmoothing;
    same(&verify_inhomogeneous(&suite, &base, w, 0.0).unwrap(), &verify_inhomogeneous(&suite, &doubled, w, 0.0).unwrap());
}

#[test]
fn vanishing_data_is_excluded_not_divided() {
    let suite = linear_suite().without_refinement();
    let fam = silent(FamilyKind::GaussianSweep, 3);
    let reports = [
        verify_inhomogeneous(&suite, &fam, InhomogeneousEstimate::DoubleSmoothing, 0.0).unwrap(),
        verify_data_gauge(&suite, &fam, Physics::new(1.0, 5.0)).unwrap(),
    ];
    for r in reports {
        assert!(r.members.iter().all(|m| m.lhs == 0.0 && m.ratio.is_none()), "{}", r.id);
        assert_eq!(r.max_ratio, 0.0);
        assert!(!r.pass, "nothing was certified");
    }
}

#[test]
fn linear_estimates_require_a_unit_horizon() {
    let long = Suite::new(SuiteGrid::new(256, 40.0, 0.05, 1.5, 2).unwrap());
    let fam = quick(FamilyKind::GaussianSweep, 2, 1);
    assert!(matches!(verify_strichartz(&long, &fam, 0.0), Err(LabError::HypothesisViolated(_))));
    assert!(matches!(
        verify_smoothing_maximal(&long, &fam, SmoothingKind::MaximalL2, 0.0),
        Err(LabError::HypothesisViolated(_))
    ));
}

#[test]
fn apriori_horizon_is_tied_to_the_high_frequency_size() {
    let suite = Suite::new(SuiteGrid::new(256, 40.0, 0.01, 0.1, 1).unwrap());
    let fam = quick(FamilyKind::GaussianSweep, 2, 1);
    // T must not exceed C_high^4 = 0.0625
    assert!(matches!(
        verify_apriori(&suite, &fam, Physics::new(1.0, 5.0), 0.5),
        Err(LabError::HypothesisViolated(_))
    ));
}

#[test]
fn nonlinear_checks_need_enough_levels() {
    let suite = Suite::new(SuiteGrid::new(256, 40.0, 1e-3, 2e-3, 1).unwrap());
    let fam = quick(FamilyKind::SolverTrajectory, 2, 1);
    assert!(matches!(
        verify_nonlinear(&suite, &fam, Physics::new(1.0, 5.0), &[1]),
        Err(LabError::TooFewTimeLevels { .. })
    ));
    assert!(verify_nonlinear(&suite, &fam, Physics::new(1.0, 5.0), &[6]).is_err());
}

#[test]
fn physics_must_satisfy_the_hypotheses() {
    let suite = Suite::new(SuiteGrid::new(256, 40.0, 1e-3, 0.02, 5).unwrap());
    let fam = quick(FamilyKind::SolverTrajectory, 2, 1);
    assert!(verify_bilinear(&suite, &fam, Physics::new(1.0, 4.5), 4.0).is_err());
    assert!(verify_bilinear(&suite, &fam, Physics::new(1.0, 3.0).relaxed(), 4.0).is_err());
}

#[test]
fn leibniz_exponents_must_be_holder_compatible() {
    let bad = LeibnizExponents { p: 4.0, p1: 2.0, p2: 4.0, q: 4.0, q1: 2.0, q2: 4.0 };
    assert!(matches!(bad.validate(), Err(LabError::ExponentMismatch(_))));
    assert!(exps().validate().is_ok());
}

#[test]
fn leibniz_sample_edge_cases() {
    let g = Grid::new(GridSpec::new(256, 40.0, 1e-3, 0.1).unwrap()).unwrap();
    let times = SpacetimeField::uniform_times(0.1, 10);
    let bump = |t: f64, x: f64| Complex64::new((-(x * x) / 4.0).exp() * (1.0 + t), 0.0);
    let f = SpacetimeField::from_fn(Arc::clone(&g), times.clone(), bump).unwrap();
    let zero = SpacetimeField::from_fn(Arc::clone(&g), times.clone(), |_, _| Complex64::new(0.0, 0.0)).unwrap();
    let g_field = SpacetimeField::from_fn(Arc::clone(&g), times, |t, x| Complex64::from_polar(bump(t, x).re, x)).unwrap();

    let s = gauge_leibniz_sample(&f, &zero, 0.5, &exps()).unwrap();
    assert_eq!((s.lhs, s.rhs), (0.0, 0.0));
    assert_eq!(s.ratio().unwrap(), None);

    // without a phase the claim is D^α g ≤ ⟨D⟩^α g
    let s = gauge_leibniz_sample(&zero, &g_field, 0.5, &exps()).unwrap();
    assert!(s.lhs <= s.rhs);

    let complex_f = g_field.clone();
    assert!(gauge_leibniz_sample(&complex_f, &g_field, 0.5, &exps()).is_err());
    assert!(gauge_leibniz_sample(&f, &g_field, 1.5, &exps()).is_err());
}

#[test]
fn commutator_quadrature_agrees_with_the_spectral_commutator() {
    let g = Grid::new(GridSpec::new(1024, 80.0, 1e-3, 0.1).unwrap()).unwrap();
    let cfg = QuadratureConfig::default();
    let s = commutator_sample(&g, WindowProfile::SmoothBump, DyadicIndex::from_value(8.0).unwrap(), (1.0, 2.0, 0.3), &cfg).unwrap();
    assert!(s.identity_error <= 1e-6, "{}", s.identity_error);
    assert!(s.bound.lhs > 0.0 && s.bound.rhs.is_finite());
}

#[test]
fn commutator_respects_the_budget() {
    let suite = Suite::new(SuiteGrid::new(512, 60.0, 0.01, 0.1, 1).unwrap());
    let cfg = QuadratureConfig {
        budget: 1000,
        ..QuadratureConfig::default()
    };
    let fam = quick(FamilyKind::GaussianSweep, 2, 3);
    assert!(matches!(
        verify_commutator(&suite, &fam, DyadicIndex::from_value(8.0).unwrap(), &cfg),
        Err(LabError::QuadratureBudgetExceeded { .. })
    ));
}

#[test]
fn reports_are_reproducible_and_well_formed() {
    let suite = linear_suite();
    let fam: TestFamily = "random_band:5".parse().unwrap();
    let run = || {
        let r = verify_inhomogeneous(&suite, &fam.clone().with_seed(21), InhomogeneousEstimate::DoubleSmoothing, 0.0).unwrap();
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        (r, csv)
    };
    let (r1, a) = run();
    let (_, b) = run();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("member_id,params,lhs,rhs,ratio\n"));
    assert_eq!(text.lines().count(), 6);
    let json = r1.summary_json();
    assert_eq!(json["schema"], SCHEMA_VERSION);
    assert_eq!(json["id"], r1.id);
    assert!(r1.refinement.as_ref().unwrap().growth < 0.05);
    assert!(r1.render().contains(&r1.id));
}

#[test]
fn family_strings_and_validation() {
    let fam: TestFamily = "gaussian:20".parse().unwrap();
    assert_eq!((fam.kind, fam.cardinality), (FamilyKind::GaussianSweep, 20));
    assert!(fam.validate(true).is_ok());
    assert!("gaussian:5".parse::<TestFamily>().unwrap().validate(true).is_err());
    assert!("gaussian:0".parse::<TestFamily>().unwrap().validate(false).is_err());
    assert!("cosine:4".parse::<TestFamily>().is_err());
    assert_eq!(fam.members(), fam.members());
    assert_ne!(fam.members(), fam.clone().with_seed(1).members());
}
