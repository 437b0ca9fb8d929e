//! Self-checks of the numerical building blocks: quadrature identities,
//! reciprocity, Bessel recurrences, direction-sum identities and
//! finite-difference oracles for every curl.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::forward::{incident_curl, incident_field, IncidentPlaneWave};
use crate::geometry::{plane_wave_identity_error, DirectionLayout, DirectionSet, SphereQuadrature};
use crate::imaging::{herglotz, herglotz_curl};
use crate::math::{
    cmax, curl_im_dyadic_green, dyadic_green, im_dyadic_green, j0, j1, j2, Arg, CVec3, Mat3, Point, WaveParameters,
};
use crate::noise::stream_rng;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Informational checks are reported but never fail the suite.
    pub gating: bool,
}

impl CheckResult {
    fn gate(name: &str, measured: f64, tolerance: f64) -> Self {
        Self { name: name.into(), measured, tolerance, passed: measured < tolerance, gating: true }
    }

    fn info(name: &str, measured: f64, tolerance: f64) -> Self {
        Self { gating: false, ..Self::gate(name, measured, tolerance) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationOptions {
    pub kappa: f64,
    /// Largest `|z - z'|` the plane-wave identity must resolve.
    pub max_separation: f64,
    pub polar_order: usize,
    pub azimuthal_count: usize,
    pub directions_m: usize,
    pub directions_n: usize,
    /// Largest `κ|x - y|` for the direction-sum identities.
    pub theta_kr_max: f64,
    pub seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            kappa: 8.0 * PI,
            max_separation: 2f64.sqrt(),
            polar_order: crate::geometry::DEFAULT_POLAR_ORDER,
            azimuthal_count: crate::geometry::DEFAULT_AZIMUTHAL_COUNT,
            directions_m: 10,
            directions_n: 10,
            theta_kr_max: 8.0,
            seed: 20_240_601,
        }
    }
}

pub const TOL_WEIGHT_SUM: f64 = 1e-12;
pub const TOL_PLANE_WAVE: f64 = 1e-8;
pub const TOL_RECIPROCITY: f64 = 1e-12;
pub const TOL_IM_GREEN: f64 = 1e-10;
pub const TOL_BESSEL: f64 = 1e-12;
pub const TOL_THETA: f64 = 0.05;
pub const TOL_FD: f64 = 1e-6;
pub const TOL_CURL_CURL: f64 = 1e-4;

fn random_point<R: Rng>(rng: &mut R, half: f64) -> Point {
    Point::new(rng.gen_range(-half..half), rng.gen_range(-half..half), rng.gen_range(-half..half))
}

fn fd_curl(f: &dyn Fn(&Point) -> CVec3, x: &Point, h: f64) -> CVec3 {
    let mut d = [CVec3::zeros(); 3];
    for (k, dk) in d.iter_mut().enumerate() {
        let mut s = Point::zeros();
        s[k] = h;
        *dk = (f(&(x + s)) - f(&(x - s))) / Complex64::from(2.0 * h);
    }
    CVec3::new(d[1][2] - d[2][1], d[2][0] - d[0][2], d[0][1] - d[1][0])
}

fn fd_curl_columns(f: &dyn Fn(&Point) -> Mat3, x: &Point, h: f64) -> Mat3 {
    let mut d = [Mat3::zeros(); 3];
    for (k, dk) in d.iter_mut().enumerate() {
        let mut s = Point::zeros();
        s[k] = h;
        *dk = (f(&(x + s)) - f(&(x - s))) / (2.0 * h);
    }
    let mut out = Mat3::zeros();
    for j in 0..3 {
        out[(0, j)] = d[1][(2, j)] - d[2][(1, j)];
        out[(1, j)] = d[2][(0, j)] - d[0][(2, j)];
        out[(2, j)] = d[0][(1, j)] - d[1][(0, j)];
    }
    out
}

/// Frobenius error of the two direction-sum identities, relative to the
/// value at coincidence:
///
/// ```text
/// (1/n) Σⱼ Σ_ℓ (θⱼ × θ⊥ⱼℓ)(θⱼ × θ⊥ⱼℓ)ᵀ e^{iκθⱼ·r} → -(4π/κε₀) Im Γ(r)
/// (1/n) Σⱼ Σ_ℓ θ⊥ⱼℓ θ⊥ⱼℓᵀ e^{iκθⱼ·r}                → -(4π/κε₀) Im Γ(r)
/// ```
///
/// maximised over random `r` with `κ|r| ≤ kr_max`.
pub fn theta_identity_errors(dirs: &DirectionSet, wp: &WaveParameters, kr_max: f64, seed: u64) -> (f64, f64) {
    let mut rng = stream_rng(seed, 7);
    let scale = (2.0 / 3.0) * 3f64.sqrt();
    let n = dirs.len() as f64;
    let mut worst = (0.0f64, 0.0f64);
    for i in 0..200 {
        let r = if i == 0 {
            Point::zeros()
        } else {
            let d = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            d.normalize() * (rng.gen_range(0.0..kr_max) / wp.kappa)
        };
        let exact = im_dyadic_green(&r, &Point::zeros(), wp) * (-4.0 * PI / (wp.kappa * wp.eps0));
        let (mut s1, mut s2) = (nalgebra::Matrix3::<Complex64>::zeros(), nalgebra::Matrix3::<Complex64>::zeros());
        for t in dirs.triplets() {
            let e = Complex64::from_polar(1.0 / n, wp.kappa * t.theta.dot(&r));
            for p in [t.perp1, t.perp2] {
                let q = t.theta.cross(&p);
                s1 += (q * q.transpose()).map(|v| e * v);
                s2 += (p * p.transpose()).map(|v| e * v);
            }
        }
        let err = |s: &nalgebra::Matrix3<Complex64>| {
            let mut acc = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    acc += (s[(a, b)] - exact[(a, b)]).norm_sqr();
                }
            }
            acc.sqrt() / scale
        };
        worst = (worst.0.max(err(&s1)), worst.1.max(err(&s2)));
    }
    worst
}

/// Runs the full suite.
pub fn run_validation(opts: &ValidationOptions) -> Result<Vec<CheckResult>> {
    let wp = WaveParameters::from_wavenumber(1.0, 1.0, opts.kappa)?;
    let quad = SphereQuadrature::product(opts.polar_order, opts.azimuthal_count)?;
    let mut rng = stream_rng(opts.seed, 0);
    let mut out = Vec::new();

    let wsum: f64 = quad.weights().iter().sum();
    out.push(CheckResult::gate("quadrature_weight_sum", (wsum - 4.0 * PI).abs() / (4.0 * PI), TOL_WEIGHT_SUM));
    out.push(CheckResult::gate(
        "plane_wave_identity",
        plane_wave_identity_error(&quad, opts.kappa * opts.max_separation),
        TOL_PLANE_WAVE,
    ));

    let (mut recip, mut imgreen) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let (x, y) = (random_point(&mut rng, 1.0), random_point(&mut rng, 1.0));
        let g = dyadic_green(&x, &y, &wp)?;
        let gs = dyadic_green(&y, &x, &wp)?;
        let s = g.0.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let e1 = (g.0 - g.0.transpose()).iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let e2 = (g.0 - gs.0).iter().fold(0.0f64, |m, c| m.max(c.norm()));
        recip = recip.max(e1.max(e2) / s);
        let reg = im_dyadic_green(&x, &y, &wp);
        imgreen = imgreen.max((g.im() - reg).abs().max() / reg.abs().max().max(1e-300));
    }
    out.push(CheckResult::gate("green_reciprocity", recip, TOL_RECIPROCITY));
    out.push(CheckResult::gate("im_green_consistency", imgreen, TOL_IM_GREEN));

    let mut bessel = 0.0f64;
    let mut x = 0.1;
    while x <= 50.0 {
        let scale = j0(x).abs() + j2(x).abs();
        bessel = bessel.max((j0(x) + j2(x) - 3.0 * j1(x) / x).abs() / scale);
        x += 0.01;
    }
    out.push(CheckResult::gate("bessel_recurrence", bessel, TOL_BESSEL));

    for (layout, name, gating) in [
        (DirectionLayout::Fibonacci, "theta_identities_fibonacci", true),
        (DirectionLayout::LatLong, "theta_identities_latlong", false),
    ] {
        let dirs = DirectionSet::new(opts.directions_m, opts.directions_n, layout)?;
        let (t1, t2) = theta_identity_errors(&dirs, &wp, opts.theta_kr_max, opts.seed);
        let build = if gating { CheckResult::gate } else { CheckResult::info };
        out.push(build(&format!("{name}_theta1"), t1, TOL_THETA));
        out.push(build(&format!("{name}_theta2"), t2, TOL_THETA));
    }

    // finite-difference oracles, step 1e-5 wavelengths
    let h = 1e-5 * wp.wavelength();
    let mut fd_green = 0.0f64;
    for _ in 0..50 {
        let (x, y) = (random_point(&mut rng, 1.0), random_point(&mut rng, 1.0));
        let a = fd_curl_columns(&|p| im_dyadic_green(p, &y, &wp), &x, h);
        let b = fd_curl_columns(&|p| im_dyadic_green(&x, p, &wp), &y, h);
        fd_green = fd_green
            .max((a - curl_im_dyadic_green(&x, &y, &wp, Arg::First)).abs().max())
            .max((b - curl_im_dyadic_green(&x, &y, &wp, Arg::Second)).abs().max());
    }
    out.push(CheckResult::gate("fd_curl_im_green", fd_green, TOL_FD));

    let theta = random_point(&mut rng, 1.0).normalize();
    let perp = theta.cross(&Point::new(0.3, -0.7, 0.2)).normalize();
    let wave = IncidentPlaneWave::new(theta, perp, &wp)?;
    let (mut fd_inc, mut curl_curl) = (0.0f64, 0.0f64);
    let hc = 1e-3 * wp.wavelength();
    for _ in 0..20 {
        let x = random_point(&mut rng, 1.0);
        fd_inc = fd_inc.max(cmax(&(fd_curl(&|p| incident_field(&wave, p), &x, h) - incident_curl(&wave, &x))));
        let cc = fd_curl(&|p| fd_curl(&|q| incident_field(&wave, q), p, hc), &x, hc);
        let e = incident_field(&wave, &x) * Complex64::from(wp.kappa * wp.kappa);
        curl_curl = curl_curl.max(cmax(&(cc - e)) / cmax(&e));
    }
    out.push(CheckResult::gate("fd_incident_curl", fd_inc, TOL_FD));
    out.push(CheckResult::gate("fd_curl_curl_incident", curl_curl, TOL_CURL_CURL));

    let small = SphereQuadrature::product(16, 32)?;
    let samples: Vec<CVec3> = small
        .nodes()
        .iter()
        .map(|x| {
            let t = x.cross(&Point::new(0.2, 1.0, -0.4));
            CVec3::new(Complex64::new(t.x, x.z), Complex64::new(t.y, 0.5 * x.x), Complex64::new(t.z, -x.y))
        })
        .collect();
    let mut fd_h = 0.0f64;
    for _ in 0..10 {
        let z = random_point(&mut rng, 0.5);
        let fd = fd_curl(&|p| herglotz(&small, &samples, wp.kappa, p), &z, h);
        fd_h = fd_h.max(cmax(&(fd - herglotz_curl(&small, &samples, wp.kappa, &z))));
    }
    out.push(CheckResult::gate("fd_herglotz_curl", fd_h, TOL_FD));

    Ok(out)
}

/// True when every gating check passed.
pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().filter(|r| r.gating).all(|r| r.passed)
}
