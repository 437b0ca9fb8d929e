//! Small inclusions, incident plane waves and the leading-order far field.
//!
//! For an inclusion `D = z_D + ρB` with material `(ε₁, μ₁)` in the
//! background `(ε₀, μ₀)` the scattered far field is, to leading order in `ρ`,
//!
//! ```text
//! E∞(x̂) = -(iκ³ρ³/4π) [ a^μ {M^μ (θ×(θ×θ⊥))} × x̂ + a^ε (I - x̂x̂ᵀ) M^ε (θ×θ⊥) ] e^{iκ(θ-x̂)·z_D}
//! ```
//!
//! with contrasts `a^γ = γ₀/γ₁ - 1` and polarization tensors `M^γ`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::SphereQuadrature;
use crate::imaging::{FarFieldBlock, FarFieldData, WaveTag};
use crate::math::{complexify, CVec3, Mat3, Point, WaveParameters};

/// Above this value of `ρκ` the asymptotic expansion is flagged as unreliable.
pub const REGIME_LIMIT: f64 = 0.1;

/// Volume of the unit ball.
pub const UNIT_BALL_VOLUME: f64 = 4.0 * PI / 3.0;

/// `γ₀/γ - 1`.
pub fn contrast(gamma0: f64, gamma: f64) -> Result<f64> {
    if !(gamma0 > 0.0 && gamma > 0.0) || !gamma0.is_finite() || !gamma.is_finite() {
        return Err(Error::InvalidContrast);
    }
    Ok(gamma0 / gamma - 1.0)
}

/// Polarization tensor of a ball of volume `volume`: `3γ₁/(2γ₀ + γ₁) |B| I`.
pub fn polarization_tensor_sphere(gamma0: f64, gamma1: f64, volume: f64) -> Result<Mat3> {
    if !(gamma0 > 0.0 && gamma1 > 0.0 && volume > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "polarization tensor needs positive parameters (got {gamma0}, {gamma1}, {volume})"
        )));
    }
    Ok(Mat3::identity() * (3.0 * gamma1 / (2.0 * gamma0 + gamma1) * volume))
}

fn check_spd(m: &Mat3, what: &str) -> Result<()> {
    if (m - m.transpose()).norm() > 1e-12 * m.norm() {
        return Err(Error::InvalidParameter(format!("{what} is not symmetric")));
    }
    match m.symmetric_eigenvalues().min() {
        v if v > 0.0 => Ok(()),
        _ => Err(Error::InvalidParameter(format!("{what} is not positive definite"))),
    }
}

/// The true inclusion `D = z_D + ρB`.
#[derive(Clone, Debug, PartialEq)]
pub struct Inclusion {
    pub center: Point,
    pub rho: f64,
    pub volume: f64,
    pub eps1: f64,
    pub mu1: f64,
    pub m_eps: Mat3,
    pub m_mu: Mat3,
    pub a_eps: f64,
    pub a_mu: f64,
}

impl Inclusion {
    /// Ball-shaped inclusion; `volume` is `|B|`, the volume of the reference shape.
    pub fn sphere(center: Point, rho: f64, volume: f64, eps1: f64, mu1: f64, wp: &WaveParameters) -> Result<Self> {
        let m_eps = polarization_tensor_sphere(wp.eps0, eps1, volume)?;
        let m_mu = polarization_tensor_sphere(wp.mu0, mu1, volume)?;
        Self::with_tensors(center, rho, volume, eps1, mu1, m_eps, m_mu, wp)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_tensors(
        center: Point,
        rho: f64,
        volume: f64,
        eps1: f64,
        mu1: f64,
        m_eps: Mat3,
        m_mu: Mat3,
        wp: &WaveParameters,
    ) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("rho must be positive (got {rho})")));
        }
        if !(volume > 0.0) {
            return Err(Error::InvalidParameter(format!("volume must be positive (got {volume})")));
        }
        check_spd(&m_eps, "permittivity polarization tensor")?;
        check_spd(&m_mu, "permeability polarization tensor")?;
        Ok(Self {
            center,
            rho,
            volume,
            eps1,
            mu1,
            m_eps,
            m_mu,
            a_eps: contrast(wp.eps0, eps1)?,
            a_mu: contrast(wp.mu0, mu1)?,
        })
    }

    /// `ρκ < 0.1`.
    pub fn in_asymptotic_regime(&self, wp: &WaveParameters) -> bool {
        self.rho * wp.kappa < REGIME_LIMIT
    }
}

/// Trial inclusion used by the imaging functional (scale factor excluded).
#[derive(Clone, Debug, PartialEq)]
pub struct TrialInclusion {
    pub volume: f64,
    pub eps2: f64,
    pub mu2: f64,
    pub m_eps: Mat3,
    pub m_mu: Mat3,
    pub a_eps: f64,
    pub a_mu: f64,
}

impl TrialInclusion {
    pub fn sphere(volume: f64, eps2: f64, mu2: f64, wp: &WaveParameters) -> Result<Self> {
        Ok(Self {
            volume,
            eps2,
            mu2,
            m_eps: polarization_tensor_sphere(wp.eps0, eps2, volume)?,
            m_mu: polarization_tensor_sphere(wp.mu0, mu2, volume)?,
            a_eps: contrast(wp.eps0, eps2)?,
            a_mu: contrast(wp.mu0, mu2)?,
        })
    }
}

/// `E₀(x) = iκ (θ × θ⊥) e^{iκθ·x}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncidentPlaneWave {
    pub theta: Point,
    pub theta_perp: Point,
    pub wp: WaveParameters,
}

const FRAME_TOL: f64 = 1e-12;

impl IncidentPlaneWave {
    pub fn new(theta: Point, theta_perp: Point, wp: &WaveParameters) -> Result<Self> {
        Self::check_frame(&theta, &theta_perp)?;
        Ok(Self { theta, theta_perp, wp: *wp })
    }

    /// Checks `|θ| = |θ⊥| = 1`, `θ·θ⊥ = 0`; returns `θ⊥ × θ`.
    pub fn check_frame(theta: &Point, theta_perp: &Point) -> Result<Point> {
        if (theta.norm() - 1.0).abs() > FRAME_TOL || (theta_perp.norm() - 1.0).abs() > FRAME_TOL {
            return Err(Error::InvalidDirection("θ and θ⊥ must be unit vectors".into()));
        }
        if theta.dot(theta_perp).abs() > FRAME_TOL {
            return Err(Error::InvalidDirection("θ⊥ is not orthogonal to θ".into()));
        }
        Ok(theta_perp.cross(theta))
    }

    pub fn tag(&self) -> WaveTag {
        WaveTag { theta: self.theta, theta_perp: self.theta_perp }
    }

    /// Polarization `θ × θ⊥`.
    pub fn polarization(&self) -> Point {
        self.theta.cross(&self.theta_perp)
    }

    pub fn phase(&self, x: &Point) -> Complex64 {
        Complex64::from_polar(1.0, self.wp.kappa * self.theta.dot(x))
    }
}

pub fn incident_field(wave: &IncidentPlaneWave, x: &Point) -> CVec3 {
    let amp = Complex64::new(0.0, wave.wp.kappa) * wave.phase(x);
    wave.polarization().map(|p| p * amp)
}

/// `∇ × E₀ = -κ² θ × (θ × θ⊥) e^{iκθ·x}`.
pub fn incident_curl(wave: &IncidentPlaneWave, x: &Point) -> CVec3 {
    let k2 = wave.wp.kappa * wave.wp.kappa;
    let v = -wave.theta.cross(&wave.polarization()) * k2;
    let e = wave.phase(x);
    v.map(|c| c * e)
}

/// Leading-order far-field pattern at the unit direction `x̂`.
pub fn far_field_asymptotic(inc: &Inclusion, wave: &IncidentPlaneWave, xhat: &Point) -> CVec3 {
    let k = wave.wp.kappa;
    let p = wave.polarization();
    let mu_part = (inc.m_mu * wave.theta.cross(&p)).cross(xhat) * inc.a_mu;
    let proj = Mat3::identity() - xhat * xhat.transpose();
    let eps_part = proj * (inc.m_eps * p) * inc.a_eps;
    let pre = Complex64::new(0.0, -k.powi(3) * inc.rho.powi(3) / (4.0 * PI))
        * Complex64::from_polar(1.0, k * (wave.theta - xhat).dot(&inc.center));
    (mu_part + eps_part).map(|c| c * pre)
}

/// Samples the far field of every wave on the quadrature nodes.
///
/// Outside the asymptotic regime the data are still produced but flagged.
pub fn synthesize_far_field(
    inc: &Inclusion,
    waves: &[IncidentPlaneWave],
    quad: Arc<SphereQuadrature>,
) -> Result<FarFieldData> {
    let Some(first) = waves.first() else {
        return Err(Error::InvalidParameter("no incident waves".into()));
    };
    let regime_warning = !inc.in_asymptotic_regime(&first.wp);
    if regime_warning {
        log::warn!(
            "rho*kappa = {:.3} is outside the small-inclusion regime (< {REGIME_LIMIT})",
            inc.rho * first.wp.kappa
        );
    }
    let blocks = waves
        .iter()
        .map(|w| FarFieldBlock {
            tag: w.tag(),
            samples: quad.nodes().iter().map(|x| far_field_asymptotic(inc, w, x)).collect(),
        })
        .collect();
    Ok(FarFieldData { quad, kappa: first.wp.kappa, blocks, regime_warning })
}

/// Tangential projection `(I - x̂x̂ᵀ) v`.
pub fn tangential(xhat: &Point, v: &CVec3) -> CVec3 {
    let d = v.x * xhat.x + v.y * xhat.y + v.z * xhat.z;
    v - complexify(xhat).map(|c| c * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::cdot;

    fn wp() -> WaveParameters {
        WaveParameters::from_wavenumber(1.0, 1.0, 4.0 * PI).unwrap()
    }

    #[test]
    fn contrast_and_tensor() {
        assert_eq!(contrast(1.0, 2.0).unwrap(), -0.5);
        assert!(matches!(contrast(1.0, 0.0), Err(Error::InvalidContrast)));
        let m = polarization_tensor_sphere(1.0, 2.0, UNIT_BALL_VOLUME).unwrap();
        assert!((m[(0, 0)] - 1.5 * UNIT_BALL_VOLUME).abs() < 1e-15);
        assert_eq!(m[(0, 1)], 0.0);
        let w = wp();
        let bad = Mat3::new(1.0, 2.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(Inclusion::with_tensors(Point::zeros(), 0.01, 1.0, 2.0, 1.0, bad, Mat3::identity(), &w).is_err());
        assert!(Inclusion::sphere(Point::zeros(), 0.0, 1.0, 2.0, 1.0, &w).is_err());
    }

    #[test]
    fn incident_field_is_transverse_and_curl_matches_fd() {
        let w = WaveParameters::from_wavenumber(1.0, 1.0, 2.0 * PI).unwrap();
        let th = Point::new(1.0, 2.0, -0.5).normalize();
        let tp = th.cross(&Point::z()).normalize();
        let wave = IncidentPlaneWave::new(th, tp, &w).unwrap();
        let x = Point::new(0.2, -0.4, 0.7);
        let e = incident_field(&wave, &x);
        assert!(cdot(&complexify(&th), &e).norm() < 1e-14);
        let h = 1e-5 * w.wavelength();
        let mut d = [CVec3::zeros(); 3];
        for (k, dk) in d.iter_mut().enumerate() {
            let mut s = Point::zeros();
            s[k] = h;
            *dk = (incident_field(&wave, &(x + s)) - incident_field(&wave, &(x - s))) / Complex64::from(2.0 * h);
        }
        let fd = CVec3::new(d[1][2] - d[2][1], d[2][0] - d[0][2], d[0][1] - d[1][0]);
        assert!(crate::math::cmax(&(fd - incident_curl(&wave, &x))) < 1e-6);
        assert!(IncidentPlaneWave::new(th, th, &w).is_err());
    }

    #[test]
    fn far_field_is_tangential() {
        let w = wp();
        let inc = Inclusion::sphere(Point::new(0.1, 0.2, -0.1), 0.005, UNIT_BALL_VOLUME, 3.0, 2.0, &w).unwrap();
        let wave = IncidentPlaneWave::new(Point::x(), Point::y(), &w).unwrap();
        let q = SphereQuadrature::product(6, 12).unwrap();
        for x in q.nodes() {
            let f = far_field_asymptotic(&inc, &wave, x);
            assert!(cdot(&complexify(x), &f).norm() < 1e-15 * (1.0 + f.norm()));
        }
    }

    #[test]
    fn far_field_scales_with_rho_cubed() {
        let w = wp();
        let wave = IncidentPlaneWave::new(Point::z(), Point::x(), &w).unwrap();
        let a = Inclusion::sphere(Point::zeros(), 0.002, UNIT_BALL_VOLUME, 2.0, 1.0, &w).unwrap();
        let b = Inclusion::sphere(Point::zeros(), 0.004, UNIT_BALL_VOLUME, 2.0, 1.0, &w).unwrap();
        let x = Point::new(0.6, 0.0, 0.8);
        let r = far_field_asymptotic(&b, &wave, &x).norm() / far_field_asymptotic(&a, &wave, &x).norm();
        assert!((r - 8.0).abs() < 1e-12);
    }

    #[test]
    fn regime_flag() {
        let w = wp();
        let big = Inclusion::sphere(Point::zeros(), 0.05, UNIT_BALL_VOLUME, 2.0, 1.0, &w).unwrap();
        let waves = [IncidentPlaneWave::new(Point::z(), Point::x(), &w).unwrap()];
        let q = Arc::new(SphereQuadrature::product(4, 8).unwrap());
        let d = synthesize_far_field(&big, &waves, q.clone()).unwrap();
        assert!(d.regime_warning);
        let small = Inclusion::sphere(Point::zeros(), 0.005, UNIT_BALL_VOLUME, 2.0, 1.0, &w).unwrap();
        assert!(!synthesize_far_field(&small, &waves, q).unwrap().regime_warning);
    }
}
