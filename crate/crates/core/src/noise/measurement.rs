//! Additive far-field measurement noise and its imaging statistics.
//!
//! The noise `ξ` is mean-zero circular Gaussian, tangential, and
//! δ-correlated on the sphere with respect to the normalized measure
//! `ds/4π`. On quadrature nodes this means per-node covariance
//! `(σ²/ŵₖ)(I - x̂ₖx̂ₖᵀ)`, so that
//!
//! ```text
//! E[H_ξ(z) H_ξ(z')ᴴ] = -(4πσ²/κε₀) Im Γ(z, z').
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::forward::{tangential, Inclusion, TrialInclusion};
use crate::geometry::SphereQuadrature;
use crate::imaging::{ContrastMode, FarFieldData};
use crate::math::{contract, im_dyadic_green, CVec3, Mat3, Point, WaveParameters};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseMode {
    /// Independent draws with amplitude `σ`.
    Random,
    /// A fixed-seed draw rescaled per block to `percent`% of the data L² norm.
    Relative { percent: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementNoiseSpec {
    pub sigma: f64,
    pub seed: u64,
    pub mode: NoiseMode,
}

impl MeasurementNoiseSpec {
    pub fn random(sigma: f64, seed: u64) -> Self {
        Self { sigma, seed, mode: NoiseMode::Random }
    }

    pub fn relative(percent: f64, seed: u64) -> Self {
        Self { sigma: 0.0, seed, mode: NoiseMode::Relative { percent } }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise sigma must be >= 0 (got {})", self.sigma)));
        }
        if let NoiseMode::Relative { percent } = self.mode {
            if !(percent > 0.0 && percent <= 100.0) {
                return Err(Error::InvalidParameter(format!("noise percent must be in (0, 100] (got {percent})")));
            }
        }
        Ok(())
    }
}

/// Generator for stream `stream` of the master seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One tangential noise block of amplitude `sigma` drawn from `rng`.
pub fn sample_noise_block<R: Rng + ?Sized>(quad: &SphereQuadrature, sigma: f64, rng: &mut R) -> Vec<CVec3> {
    quad.nodes()
        .iter()
        .zip(quad.normalized_weights())
        .map(|(x, w)| {
            // each complex component has E|ξᵢ|² = σ²/ŵ, split evenly between re and im
            let s = sigma / (2.0 * w).sqrt();
            let mut c = || Complex64::new(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s);
            let v = CVec3::new(c(), c(), c());
            tangential(x, &v)
        })
        .collect()
}

/// Noise block for stream `stream` of `spec`; in relative mode the block is
/// drawn with unit amplitude and still needs rescaling.
pub fn sample_measurement_noise(quad: &SphereQuadrature, spec: &MeasurementNoiseSpec, stream: u64) -> Vec<CVec3> {
    let sigma = match spec.mode {
        NoiseMode::Random => spec.sigma,
        NoiseMode::Relative { .. } => 1.0,
    };
    sample_noise_block(quad, sigma, &mut stream_rng(spec.seed, stream))
}

/// `(∫ |Φ|² ds)^{1/2}` by quadrature.
pub fn quadrature_l2(quad: &SphereQuadrature, samples: &[CVec3]) -> f64 {
    samples
        .iter()
        .zip(quad.weights())
        .map(|(v, w)| w * v.iter().map(|c| c.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

/// Adds noise to every block; block `b` uses stream `b` so blocks are independent.
pub fn add_measurement_noise(data: &mut FarFieldData, spec: &MeasurementNoiseSpec) -> Result<()> {
    spec.validate()?;
    let quad = data.quad.clone();
    for (b, block) in data.blocks.iter_mut().enumerate() {
        let mut noise = sample_measurement_noise(&quad, spec, b as u64);
        if let NoiseMode::Relative { percent } = spec.mode {
            let target = percent / 100.0 * quadrature_l2(&quad, &block.samples);
            let have = quadrature_l2(&quad, &noise);
            let s = if have > 0.0 { target / have } else { 0.0 };
            noise.iter_mut().for_each(|v| *v *= Complex64::from(s));
        }
        for (d, n) in block.samples.iter_mut().zip(&noise) {
            *d += n;
        }
    }
    Ok(())
}

/// Covariance of the Herglotz field of the noise: `-(4πσ²/κε₀) Im Γ(z, z')`.
pub fn cov_herglotz_noise(z: &Point, z2: &Point, wp: &WaveParameters, sigma: f64) -> Mat3 {
    im_dyadic_green(z, z2, wp) * (-4.0 * PI * sigma * sigma / (wp.kappa * wp.eps0))
}

fn trial_mode(trial: &TrialInclusion, mode: ContrastMode) -> Result<(f64, Mat3)> {
    match mode {
        ContrastMode::Permittivity if trial.a_mu == 0.0 => Ok((trial.a_eps, trial.m_eps)),
        ContrastMode::Permeability if trial.a_eps == 0.0 => Ok((trial.a_mu, trial.m_mu)),
        _ => Err(Error::ModeMismatch(format!("trial inclusion has both contrasts or not the {mode:?} one"))),
    }
}

/// Covariance of the multi-measurement indicator under measurement noise,
/// `(σ²κ⁴a₂²/2nε₀²) Re{ M_S Im Γ : Im Γ M_S }`.
pub fn cov_indicator_measurement(
    z: &Point,
    z2: &Point,
    trial: &TrialInclusion,
    wp: &WaveParameters,
    sigma: f64,
    n: usize,
    mode: ContrastMode,
) -> Result<f64> {
    let (a2, ms) = trial_mode(trial, mode)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let g = im_dyadic_green(z, z2, wp);
    let pre = sigma * sigma * wp.kappa.powi(4) * a2 * a2 / (2.0 * n as f64 * wp.eps0 * wp.eps0);
    Ok(pre * contract(&(ms * g), &(g * ms)))
}

/// Closed-form signal-to-noise ratio at `z_D` for a ball,
/// `√6 / (2π(2γ₀+γ₁)) · ρ³|B_D||γ₀ - γ₁| κ³ √n / σ`.
pub fn snr(inc: &Inclusion, wp: &WaveParameters, sigma: f64, n: usize, mode: ContrastMode) -> Result<f64> {
    let (g0, g1, other) = match mode {
        ContrastMode::Permittivity => (wp.eps0, inc.eps1, inc.a_mu),
        ContrastMode::Permeability => (wp.mu0, inc.mu1, inc.a_eps),
    };
    if other != 0.0 {
        return Err(Error::ModeMismatch("inclusion has both contrasts".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter("snr needs sigma > 0".into()));
    }
    Ok(6f64.sqrt() / (2.0 * PI * (2.0 * g0 + g1))
        * inc.rho.powi(3)
        * inc.volume
        * (g0 - g1).abs()
        * wp.kappa.powi(3)
        * (n as f64).sqrt()
        / sigma)
}
