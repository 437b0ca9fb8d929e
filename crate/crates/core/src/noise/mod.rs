//! Measurement and medium noise, analytic statistics and the Monte Carlo harness.

pub mod mc;
pub mod measurement;
pub mod medium;

pub use mc::{draw, estimate_covariance, estimate_mean, estimate_variance, monte_carlo, Estimate, Statistic, StatsReport};
pub use measurement::{
    add_measurement_noise, cov_herglotz_noise, cov_indicator_measurement, quadrature_l2, sample_measurement_noise,
    sample_noise_block, snr, stream_rng, MeasurementNoiseSpec, NoiseMode,
};
pub use medium::{
    clutter_data, clutter_far_field, clutter_herglotz_eps, clutter_herglotz_mu, generate_medium_fluctuation, speckle_covariance_analytic,
    speckle_kernel, squared_exponential, FluctuationKind, FluctuationSpec, KernelKind, MediumFluctuation, VoxelGrid,
    voxel_responses,
};
