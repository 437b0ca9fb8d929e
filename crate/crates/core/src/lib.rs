//! Topological-sensitivity imaging of small electromagnetic inclusions.
//!
//! Far-field data of a small inclusion are back-propagated with the
//! Herglotz operator and combined with the incident field into a
//! topological-derivative indicator whose peak locates the inclusion.
//! The crate also carries closed-form resolution predictors and the
//! statistics of the indicator under measurement and medium noise.

pub mod error;
pub mod forward;
pub mod geometry;
pub mod imaging;
pub mod math;
pub mod noise;
pub mod validate;

pub use error::{Error, Result};
pub use forward::{
    contrast, far_field_asymptotic, incident_curl, incident_field, polarization_tensor_sphere,
    synthesize_far_field, Inclusion, IncidentPlaneWave, TrialInclusion, UNIT_BALL_VOLUME,
};
pub use geometry::{build_direction_set, DirectionLayout, DirectionSet, DirectionTriplet, SearchGrid, SphereQuadrature};
pub use imaging::{
    compute_map, herglotz, herglotz_curl, indicator_multi, indicator_single, peak_analysis, predictor_multi,
    predictor_single_eps, predictor_single_mu, ContrastMode, FarFieldBlock, FarFieldData, IndicatorEvaluator,
    IndicatorMap, Normalization, PeakReport, WaveTag,
};
pub use math::{
    curl_im_dyadic_green, dyadic_green, im_dyadic_green, scalar_green, spherical_bessel_j, Arg, CMat3, CVec3,
    ComplexDyad, Mat3, Point, WaveParameters,
};
