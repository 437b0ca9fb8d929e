//! Unit-sphere quadrature, incident-direction sets and search grids.

use std::f64::consts::PI;

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::math::{Point, WaveParameters};
use crate::forward::IncidentPlaneWave;

/// Default Gauss–Legendre order in `cos θ`.
pub const DEFAULT_POLAR_ORDER: usize = 32;
/// Default number of uniform azimuthal nodes.
pub const DEFAULT_AZIMUTHAL_COUNT: usize = 64;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `Pₙ`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Product rule on S²: Gauss–Legendre in `cos θ` times the trapezoid rule in `φ`.
///
/// Weights sum to `4π`. Integrals in the imaging functional use the
/// normalized measure `ds/4π`, exposed through [`SphereQuadrature::normalized_weights`].
#[derive(Clone, Debug)]
pub struct SphereQuadrature {
    nodes: Vec<Point>,
    weights: Vec<f64>,
    normalized: Vec<f64>,
    polar_order: usize,
    azimuthal_count: usize,
}

impl SphereQuadrature {
    pub fn product(polar_order: usize, azimuthal_count: usize) -> Result<Self> {
        if polar_order < 1 || azimuthal_count < 1 {
            return Err(Error::InvalidParameter(format!(
                "quadrature needs polar order and azimuthal count >= 1 (got {polar_order}, {azimuthal_count})"
            )));
        }
        let (t, wt) = gauss_legendre(polar_order);
        let dphi = 2.0 * PI / azimuthal_count as f64;
        let mut nodes = Vec::with_capacity(polar_order * azimuthal_count);
        let mut weights = Vec::with_capacity(polar_order * azimuthal_count);
        for (ct, w) in t.iter().zip(&wt) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for a in 0..azimuthal_count {
                let (sp, cp) = (a as f64 * dphi).sin_cos();
                nodes.push(Point::new(st * cp, st * sp, *ct));
                weights.push(w * dphi);
            }
        }
        let normalized = weights.iter().map(|w| w / (4.0 * PI)).collect();
        Ok(Self { nodes, weights, normalized, polar_order, azimuthal_count })
    }

    pub fn default_order() -> Self {
        Self::product(DEFAULT_POLAR_ORDER, DEFAULT_AZIMUTHAL_COUNT).expect("valid default order")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    /// Weights of `ds`, summing to `4π`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weights of `ds/4π`, summing to one.
    pub fn normalized_weights(&self) -> &[f64] {
        &self.normalized
    }

    pub fn polar_order(&self) -> usize {
        self.polar_order
    }

    pub fn azimuthal_count(&self) -> usize {
        self.azimuthal_count
    }

    /// `∫_{S²} f ds`.
    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }
}

/// Error of `(1/4π)∫ e^{iκx̂·r} ds = j₀(κ|r|)` for the given rule, maximised
/// over a few orientations of `r`.
pub fn plane_wave_identity_error(quad: &SphereQuadrature, kappa_r: f64) -> f64 {
    let dirs = [
        Point::new(1.0, 0.0, 0.0),
        Point::new(0.0, 0.0, 1.0),
        Point::new(1.0, 1.0, 0.0).normalize(),
        Point::new(0.3, -0.5, 0.81).normalize(),
        Point::new(1.0, 1.0, 1.0).normalize(),
    ];
    let exact = crate::math::j0(kappa_r);
    dirs.iter()
        .map(|d| {
            let (mut re, mut im) = (0.0, 0.0);
            for (x, w) in quad.nodes().iter().zip(quad.normalized_weights()) {
                let (s, c) = (kappa_r * x.dot(d)).sin_cos();
                re += w * c;
                im += w * s;
            }
            ((re - exact).powi(2) + im * im).sqrt()
        })
        .fold(0.0, f64::max)
}

/// How the incident directions are laid out on the sphere.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DirectionLayout {
    /// Latitude–longitude grid `φₘ = (m-1)π/M`, `ψₙ = 2(n-1)π/N`, poles merged.
    LatLong,
    /// `M·N` points on a Fibonacci spiral; equal-weight and nearly uniform.
    Fibonacci,
}

/// Orthonormal frame `(θ, θ⊥₁, θ⊥₂)` with `θ⊥₂ = θ⊥₁ × θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionTriplet {
    pub theta: Point,
    pub perp1: Point,
    pub perp2: Point,
}

const FRAME_AXIS_TOL: f64 = 1e-8;

impl DirectionTriplet {
    /// Builds the frame with `θ⊥₁ ∝ θ × Rθ`, falling back to `θ × e₂` when
    /// `θ` is (nearly) fixed by the rotation `R`.
    pub fn from_theta(theta: Point) -> Result<Self> {
        let n = theta.norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidDirection(format!("|θ| = {n}")));
        }
        let r = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0);
        let mut p = theta.cross(&(r * theta));
        if p.norm() < FRAME_AXIS_TOL {
            p = theta.cross(&Point::new(0.0, 1.0, 0.0));
        }
        let perp1 = p.normalize();
        let perp2 = perp1.cross(&theta);
        Ok(Self { theta, perp1, perp2 })
    }
}

#[derive(Clone, Debug)]
pub struct DirectionSet {
    triplets: Vec<DirectionTriplet>,
    polar_count: usize,
    azimuthal_count: usize,
    layout: DirectionLayout,
}

/// Latitude–longitude direction set (see [`DirectionLayout::LatLong`]).
pub fn build_direction_set(m: usize, n: usize) -> Result<DirectionSet> {
    DirectionSet::new(m, n, DirectionLayout::LatLong)
}

impl DirectionSet {
    pub fn new(m: usize, n: usize, layout: DirectionLayout) -> Result<Self> {
        if m < 1 || n < 1 {
            return Err(Error::InvalidParameter(format!("direction counts must be >= 1 (got {m}, {n})")));
        }
        let thetas: Vec<Point> = match layout {
            DirectionLayout::LatLong => {
                let mut out: Vec<Point> = Vec::with_capacity(m * n);
                for a in 0..m {
                    let phi = a as f64 * PI / m as f64;
                    for b in 0..n {
                        let psi = 2.0 * b as f64 * PI / n as f64;
                        let t = Point::new(phi.sin() * psi.cos(), phi.sin() * psi.sin(), phi.cos());
                        if !out.iter().any(|q| (q - t).norm() < 1e-12) {
                            out.push(t);
                        }
                    }
                }
                out
            }
            DirectionLayout::Fibonacci => {
                let count = m * n;
                let golden = PI * (3.0 - 5f64.sqrt());
                (0..count)
                    .map(|i| {
                        let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
                        let s = (1.0 - z * z).sqrt();
                        let a = golden * i as f64;
                        Point::new(s * a.cos(), s * a.sin(), z).normalize()
                    })
                    .collect()
            }
        };
        let triplets = thetas.into_iter().map(DirectionTriplet::from_theta).collect::<Result<_>>()?;
        Ok(Self { triplets, polar_count: m, azimuthal_count: n, layout })
    }

    /// A single user-specified frame.
    pub fn single(theta: Point, theta_perp: Point) -> Result<Self> {
        let w = IncidentPlaneWave::check_frame(&theta, &theta_perp)?;
        let triplet = DirectionTriplet { theta, perp1: theta_perp, perp2: w };
        Ok(Self { triplets: vec![triplet], polar_count: 1, azimuthal_count: 1, layout: DirectionLayout::LatLong })
    }

    pub fn triplets(&self) -> &[DirectionTriplet] {
        &self.triplets
    }

    /// Number of distinct directions `n`.
    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn layout(&self) -> DirectionLayout {
        self.layout
    }

    pub fn counts(&self) -> (usize, usize) {
        (self.polar_count, self.azimuthal_count)
    }

    /// `2·M·N`, the nominal field count of an `M × N` grid before the poles are merged.
    pub fn nominal_field_count(&self) -> usize {
        2 * self.polar_count * self.azimuthal_count
    }

    /// The `2n` incident waves, ordered direction-major then polarization `ℓ = 1, 2`.
    pub fn waves(&self, wp: &WaveParameters) -> Vec<IncidentPlaneWave> {
        self.triplets
            .iter()
            .flat_map(|t| {
                [
                    IncidentPlaneWave { theta: t.theta, theta_perp: t.perp1, wp: *wp },
                    IncidentPlaneWave { theta: t.theta, theta_perp: t.perp2, wp: *wp },
                ]
            })
            .collect()
    }
}

/// Regular lattice of search points spanned by orthonormal axes.
///
/// Points are enumerated with the first axis varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchGrid {
    pub origin: Point,
    pub axes: Vec<Point>,
    pub counts: Vec<usize>,
    pub spacing: f64,
}

impl SearchGrid {
    pub fn new(origin: Point, axes: Vec<Point>, counts: Vec<usize>, spacing: f64) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 || axes.len() != counts.len() {
            return Err(Error::InvalidGrid("need 1 to 3 axes with one count each".into()));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing must be positive (got {spacing})")));
        }
        if counts.contains(&0) {
            return Err(Error::InvalidGrid("empty axis".into()));
        }
        for (i, a) in axes.iter().enumerate() {
            if (a.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidGrid(format!("axis {i} is not a unit vector")));
            }
            for b in &axes[..i] {
                if a.dot(b).abs() > 1e-10 {
                    return Err(Error::InvalidGrid("axes are not orthogonal".into()));
                }
            }
        }
        Ok(Self { origin, axes, counts, spacing })
    }

    /// Square `[-h, h]²` in the plane `x₃ = z` with `count` points per side.
    pub fn square_xy(half_width: f64, count: usize, z: f64) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidGrid("need at least two points per side".into()));
        }
        Self::new(
            Point::new(-half_width, -half_width, z),
            vec![Point::x(), Point::y()],
            vec![count, count],
            2.0 * half_width / (count - 1) as f64,
        )
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        self.counts
            .iter()
            .map(|c| {
                let i = flat % c;
                flat /= c;
                i
            })
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.counts).rev().fold(0, |acc, (i, c)| acc * c + i)
    }

    pub fn point_at(&self, idx: &[usize]) -> Point {
        idx.iter()
            .zip(&self.axes)
            .fold(self.origin, |p, (i, a)| p + a * (*i as f64 * self.spacing))
    }

    pub fn enumerate(&self) -> Vec<Point> {
        (0..self.len()).map(|f| self.point_at(&self.multi_index(f))).collect()
    }
}
