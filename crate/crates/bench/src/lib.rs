//! Shared fixtures for the benchmarks.

use std::f64::consts::PI;
use std::sync::Arc;

use topsens::{
    synthesize_far_field, ContrastMode, DirectionLayout, DirectionSet, FarFieldData, Inclusion, Point,
    SphereQuadrature, TrialInclusion, WaveParameters, UNIT_BALL_VOLUME,
};

pub struct Fixture {
    pub wp: WaveParameters,
    pub dirs: DirectionSet,
    pub trial: TrialInclusion,
    pub data: FarFieldData,
}

/// Permittivity ball at the origin imaged at `κ = 4π` with `m × m` Fibonacci directions.
pub fn fixture(m: usize, mode: ContrastMode) -> Fixture {
    let wp = WaveParameters::from_wavenumber(1.0, 1.0, 4.0 * PI).unwrap();
    let (e, u) = match mode {
        ContrastMode::Permittivity => (2.0, 1.0),
        ContrastMode::Permeability => (1.0, 2.0),
    };
    let inc = Inclusion::sphere(Point::zeros(), 0.01, UNIT_BALL_VOLUME, e, u, &wp).unwrap();
    let trial = TrialInclusion::sphere(UNIT_BALL_VOLUME, e, u, &wp).unwrap();
    let dirs = DirectionSet::new(m, m, DirectionLayout::Fibonacci).unwrap();
    let data = synthesize_far_field(&inc, &dirs.waves(&wp), Arc::new(SphereQuadrature::default_order())).unwrap();
    Fixture { wp, dirs, trial, data }
}
