use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use topsens::noise::{cov_indicator_measurement, speckle_covariance_analytic, squared_exponential, FluctuationKind, VoxelGrid};
use topsens::{
    compute_map, far_field_asymptotic, synthesize_far_field, ContrastMode, DirectionLayout, DirectionSet, FarFieldData,
    IncidentPlaneWave, Inclusion, IndicatorEvaluator, Point, SearchGrid, SphereQuadrature, TrialInclusion,
    WaveParameters, UNIT_BALL_VOLUME,
};

fn wp(k: f64) -> WaveParameters {
    WaveParameters::from_wavenumber(1.0, 1.0, k).unwrap()
}

fn small_quad() -> Arc<SphereQuadrature> {
    Arc::new(SphereQuadrature::product(10, 20).unwrap())
}

fn point(r: f64) -> impl Strategy<Value = Point> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Point::new(x, y, z))
}

fn combine(a: &FarFieldData, b: &FarFieldData, s: f64, t: f64) -> FarFieldData {
    let mut out = a.clone();
    for (ob, bb) in out.blocks.iter_mut().zip(&b.blocks) {
        for (x, y) in ob.samples.iter_mut().zip(&bb.samples) {
            *x = *x * Complex64::from(s) + y * Complex64::from(t);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn indicator_is_linear_in_data(c1 in point(0.5), c2 in point(0.5), s in -2.0..2.0f64, t in -2.0..2.0f64, z in point(1.0)) {
        let w = wp(2.0 * PI);
        let dirs = DirectionSet::new(2, 3, DirectionLayout::Fibonacci).unwrap();
        let waves = dirs.waves(&w);
        let trial = TrialInclusion::sphere(UNIT_BALL_VOLUME, 3.0, 1.5, &w).unwrap();
        let d1 = synthesize_far_field(&Inclusion::sphere(c1, 0.01, UNIT_BALL_VOLUME, 2.0, 1.0, &w).unwrap(), &waves, small_quad()).unwrap();
        let d2 = synthesize_far_field(&Inclusion::sphere(c2, 0.01, UNIT_BALL_VOLUME, 1.0, 3.0, &w).unwrap(), &waves, small_quad()).unwrap();
        let ev = |d: &FarFieldData| IndicatorEvaluator::multi(d, &dirs, &w, &trial).unwrap().eval(&z);
        let lhs = ev(&combine(&d1, &d2, s, t));
        let rhs = s * ev(&d1) + t * ev(&d2);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs().max(rhs.abs())), "{lhs} vs {rhs}");
    }

    #[test]
    fn translation_is_a_phase(c in point(1.0), a in 0.0..PI, b in 0.0..2.0 * PI, k in 1.0..30.0f64) {
        let w = wp(k);
        let theta = Point::new(a.sin() * b.cos(), a.sin() * b.sin(), a.cos());
        let perp = theta.cross(&Point::new(0.3, -0.7, 0.2)).normalize();
        let wave = IncidentPlaneWave::new(theta, perp, &w).unwrap();
        let at0 = Inclusion::sphere(Point::zeros(), 0.01, UNIT_BALL_VOLUME, 2.0, 3.0, &w).unwrap();
        let atc = Inclusion::sphere(c, 0.01, UNIT_BALL_VOLUME, 2.0, 3.0, &w).unwrap();
        for x in small_quad().nodes().iter().step_by(17) {
            let shift = Complex64::from_polar(1.0, k * (theta - x).dot(&c));
            let want = far_field_asymptotic(&at0, &wave, x) * shift;
            let got = far_field_asymptotic(&atc, &wave, x);
            prop_assert!((got - want).norm() <= 1e-12 * (1.0 + want.norm()));
        }
    }

    #[test]
    fn measurement_covariance_symmetric_and_nonnegative(z in point(1.0), z2 in point(1.0), k in 1.0..30.0f64, n in 1usize..200) {
        let w = wp(k);
        for (mode, trial) in [
            (ContrastMode::Permittivity, TrialInclusion::sphere(UNIT_BALL_VOLUME, 2.0, 1.0, &w).unwrap()),
            (ContrastMode::Permeability, TrialInclusion::sphere(UNIT_BALL_VOLUME, 1.0, 2.0, &w).unwrap()),
        ] {
            let c = |a: &Point, b: &Point| cov_indicator_measurement(a, b, &trial, &w, 0.3, n, mode).unwrap();
            prop_assert!((c(&z, &z2) - c(&z2, &z)).abs() <= 1e-12 * c(&z, &z).abs().max(1e-300));
            prop_assert!(c(&z, &z) >= 0.0);
            let half = cov_indicator_measurement(&z, &z, &trial, &w, 0.3, 2 * n, mode).unwrap();
            prop_assert!((c(&z, &z) - 2.0 * half).abs() <= 1e-12 * c(&z, &z));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn speckle_covariance_symmetric_and_nonnegative(z in point(0.4), z2 in point(0.4)) {
        let w = wp(2.0 * PI);
        let grid = VoxelGrid::cube(0.5, 4).unwrap();
        let corr = squared_exponential(0.1, 0.3);
        for kind in [FluctuationKind::Permeability, FluctuationKind::Permittivity] {
            for (mode, trial) in [
                (ContrastMode::Permittivity, TrialInclusion::sphere(UNIT_BALL_VOLUME, 2.0, 1.0, &w).unwrap()),
                (ContrastMode::Permeability, TrialInclusion::sphere(UNIT_BALL_VOLUME, 1.0, 2.0, &w).unwrap()),
            ] {
                let c = |a: &Point, b: &Point| speckle_covariance_analytic(kind, mode, &trial, &w, &corr, &grid, a, b).unwrap();
                let (ab, ba, aa) = (c(&z, &z2), c(&z2, &z), c(&z, &z));
                prop_assert!((ab - ba).abs() <= 1e-10 * aa.abs().max(1e-300));
                prop_assert!(aa >= 0.0);
            }
        }
    }
}

#[test]
fn fig1_map_is_mirror_symmetric() {
    // θ = e₁, θ⊥ = e₂ and z_D = 0: the map is even in y and in z.
    let w = wp(4.0 * PI);
    let wave = IncidentPlaneWave::new(Point::x(), Point::y(), &w).unwrap();
    let inc = Inclusion::sphere(Point::zeros(), 0.01, UNIT_BALL_VOLUME, 2.0, 1.0, &w).unwrap();
    let trial = TrialInclusion::sphere(UNIT_BALL_VOLUME, 2.0, 1.0, &w).unwrap();
    let data = synthesize_far_field(&inc, &[wave], Arc::new(SphereQuadrature::default_order())).unwrap();
    let ev = IndicatorEvaluator::new(&data, &[wave], &trial, topsens::Normalization::Mean, 1).unwrap();
    let peak = ev.eval(&Point::zeros());
    for (x, y, z) in [(0.1, 0.3, 0.0), (-0.7, 0.05, 0.2), (0.33, -0.9, -0.4)] {
        let v = ev.eval(&Point::new(x, y, z));
        assert!((v - ev.eval(&Point::new(x, -y, z))).abs() <= 1e-9 * peak);
        assert!((v - ev.eval(&Point::new(x, y, -z))).abs() <= 1e-9 * peak);
    }
}

#[test]
fn map_does_not_depend_on_the_pool() {
    let grid = SearchGrid::square_xy(1.0, 31, 0.1).unwrap();
    let f = |p: &Point| (3.0 * p.x).sin() * (p.y * 7.0).cos() + p.z;
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| compute_map(&grid, f));
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| compute_map(&grid, f));
    assert_eq!(one.values, four.values);
    assert_eq!(one.values[5 + 31 * 7], f(&grid.point_at(&[5, 7])));
}
