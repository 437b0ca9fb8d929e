//! Scalar and dyadic Green functions of the homogeneous Maxwell background.
//!
//! With `g(r) = e^{iκr} / (4πr)` the outgoing fundamental solution of
//! `Δ + κ²`, the dyadic Green function is
//!
//! ```text
//! Γ(x, y) = -ε₀ (I + ∇∇ᵀ/κ²) g(|x - y|)
//! ```
//!
//! and its imaginary part has the regular closed form
//!
//! ```text
//! Im Γ(x, y) = -(ε₀κ / 4π) [ (2/3) j₀(κr) I + j₂(κr) (r̂r̂ᵀ - I/3) ]
//! ```
//!
//! which stays finite at `r = 0`.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Point = Vector3<f64>;
pub type CVec3 = Vector3<Complex64>;
pub type Mat3 = Matrix3<f64>;
pub type CMat3 = Matrix3<Complex64>;

/// Separation below which the singular kernels refuse to evaluate.
pub const COINCIDENCE_TOL: f64 = 1e-14;

/// Power series is used below this argument; the trigonometric closed forms
/// cancel catastrophically near zero (about `x^-n` digits lost).
const SERIES_CUTOFF: f64 = 0.5;

/// Background medium and frequency.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WaveParameters {
    pub eps0: f64,
    pub mu0: f64,
    pub omega: f64,
    pub kappa: f64,
}

impl WaveParameters {
    pub fn new(eps0: f64, mu0: f64, omega: f64) -> Result<Self> {
        if !(eps0 > 0.0 && mu0 > 0.0 && omega > 0.0) || !(eps0 * mu0 * omega).is_finite() {
            return Err(Error::InvalidParameter(format!(
                "medium needs eps0, mu0, omega > 0 (got {eps0}, {mu0}, {omega})"
            )));
        }
        Ok(Self { eps0, mu0, omega, kappa: omega * (eps0 * mu0).sqrt() })
    }

    pub fn from_wavenumber(eps0: f64, mu0: f64, kappa: f64) -> Result<Self> {
        if !(eps0 > 0.0 && mu0 > 0.0 && kappa > 0.0) || !(eps0 * mu0 * kappa).is_finite() {
            return Err(Error::InvalidParameter(format!(
                "medium needs eps0, mu0, kappa > 0 (got {eps0}, {mu0}, {kappa})"
            )));
        }
        Ok(Self { eps0, mu0, omega: kappa / (eps0 * mu0).sqrt(), kappa })
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.kappa
    }
}

/// 3×3 complex matrix-valued kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexDyad(pub CMat3);

impl ComplexDyad {
    pub fn re(&self) -> Mat3 {
        self.0.map(|c| c.re)
    }

    pub fn im(&self) -> Mat3 {
        self.0.map(|c| c.im)
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn apply(&self, v: &CVec3) -> CVec3 {
        self.0 * v
    }
}

/// Which argument of a two-point kernel a derivative acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arg {
    First,
    Second,
}

fn series_j(n: u32, x: f64) -> f64 {
    // j_n(x) = x^n Σ_k (-x²/2)^k / (k! (2n+2k+1)!!)
    let mut dfact = 1.0;
    for m in (1..=2 * n + 1).step_by(2) {
        dfact *= m as f64;
    }
    let h = -0.5 * x * x;
    let mut term = x.powi(n as i32) / dfact;
    let mut sum = term;
    for k in 1..20u32 {
        term *= h / (k as f64 * (2 * n + 2 * k + 1) as f64);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

pub fn j0(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        series_j(0, x)
    } else {
        x.sin() / x
    }
}

pub fn j1(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        series_j(1, x)
    } else {
        let (s, c) = x.sin_cos();
        s / (x * x) - c / x
    }
}

pub fn j2(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        series_j(2, x)
    } else {
        let (s, c) = x.sin_cos();
        (3.0 / (x * x * x) - 1.0 / x) * s - 3.0 * c / (x * x)
    }
}

/// Spherical Bessel function of the first kind, orders 0 to 2.
///
/// # Panics
/// For `n > 2`.
pub fn spherical_bessel_j(n: u32, x: f64) -> f64 {
    match n {
        0 => j0(x),
        1 => j1(x),
        2 => j2(x),
        _ => panic!("spherical_bessel_j: order {n} not supported"),
    }
}

fn separation(x: &Point, y: &Point) -> Result<(f64, Point)> {
    let d = x - y;
    let r = d.norm();
    if r < COINCIDENCE_TOL {
        return Err(Error::CoincidentPoints);
    }
    Ok((r, d / r))
}

/// `e^{iκ|x-y|} / (4π|x-y|)`.
pub fn scalar_green(x: &Point, y: &Point, wp: &WaveParameters) -> Result<Complex64> {
    let (r, _) = separation(x, y)?;
    Ok(Complex64::from_polar(1.0 / (4.0 * PI * r), wp.kappa * r))
}

/// Full dyadic Green function, singular at coincidence.
pub fn dyadic_green(x: &Point, y: &Point, wp: &WaveParameters) -> Result<ComplexDyad> {
    let (r, rh) = separation(x, y)?;
    let s = wp.kappa * r;
    let g = Complex64::from_polar(1.0 / (4.0 * PI * r), s);
    let i = Complex64::i();
    let a = 1.0 + i / s - 1.0 / (s * s);
    let b = -1.0 + (-3.0 * i) / s + 3.0 / (s * s);
    let rr = rh * rh.transpose();
    let m = Mat3::identity().map(|v| a * v) + rr.map(|v| b * v);
    Ok(ComplexDyad(m.map(|v| -wp.eps0 * g * v)))
}

/// Imaginary part of Γ, defined for all pairs including `x = y`.
pub fn im_dyadic_green(x: &Point, y: &Point, wp: &WaveParameters) -> Mat3 {
    let d = x - y;
    let r = d.norm();
    let s = wp.kappa * r;
    let pre = -wp.eps0 * wp.kappa / (4.0 * PI);
    let diag = 2.0 / 3.0 * j0(s);
    if r < COINCIDENCE_TOL {
        return Mat3::identity() * (pre * diag);
    }
    let rh = d / r;
    let q = j2(s);
    (Mat3::identity() * (diag - q / 3.0) + rh * rh.transpose() * q) * pre
}

/// Cross-product matrix `[v]ₓ` with `[v]ₓ w = v × w`.
pub fn cross_matrix(v: &Point) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Column-wise curl of `Im Γ(x, y)` with respect to the chosen argument.
///
/// `∇ₓ × Im Γ(x, y) = (ε₀κ²/4π) j₁(κr) [r̂]ₓ` with `r̂ = (x - y)/r`; the
/// derivative in `y` has the opposite sign. Vanishes at `x = y`.
pub fn curl_im_dyadic_green(x: &Point, y: &Point, wp: &WaveParameters, arg: Arg) -> Mat3 {
    let d = x - y;
    let r = d.norm();
    if r < COINCIDENCE_TOL {
        return Mat3::zeros();
    }
    let mut c = wp.eps0 * wp.kappa * wp.kappa / (4.0 * PI) * j1(wp.kappa * r);
    if arg == Arg::Second {
        c = -c;
    }
    cross_matrix(&(d / r)) * c
}

/// Largest component modulus.
pub fn cmax(v: &CVec3) -> f64 {
    v.iter().fold(0.0, |m, c| m.max(c.norm()))
}

/// `A : B = Σᵢⱼ AᵢⱼBᵢⱼ`.
pub fn contract(a: &Mat3, b: &Mat3) -> f64 {
    a.component_mul(b).sum()
}

pub fn frobenius(a: &Mat3) -> f64 {
    a.norm()
}

/// Lift a real vector to complex.
pub fn complexify(v: &Point) -> CVec3 {
    v.map(|x| Complex64::new(x, 0.0))
}

/// Real matrix times complex vector.
pub fn rmul(a: &Mat3, v: &CVec3) -> CVec3 {
    CVec3::new(
        v.x * a[(0, 0)] + v.y * a[(0, 1)] + v.z * a[(0, 2)],
        v.x * a[(1, 0)] + v.y * a[(1, 1)] + v.z * a[(1, 2)],
        v.x * a[(2, 0)] + v.y * a[(2, 1)] + v.z * a[(2, 2)],
    )
}

/// Real vector crossed with complex vector.
pub fn rcross(a: &Point, v: &CVec3) -> CVec3 {
    CVec3::new(
        v.z * a.y - v.y * a.z,
        v.x * a.z - v.z * a.x,
        v.y * a.x - v.x * a.y,
    )
}

/// Bilinear (non-conjugating) dot product.
pub fn cdot(a: &CVec3, b: &CVec3) -> Complex64 {
    a.x * b.x + a.y * b.y + a.z * b.z
}

/// `conj(a) · b`.
pub fn cdotc(a: &CVec3, b: &CVec3) -> Complex64 {
    a.x.conj() * b.x + a.y.conj() * b.y + a.z.conj() * b.z
}
