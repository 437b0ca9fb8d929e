//! Random-medium fluctuations in the first Born approximation.
//!
//! A permeability fluctuation `μ = μ₀(1 + η)` or permittivity fluctuation
//! `ε = ε₀(1 + φ)` perturbs the Herglotz field of the data by the clutter
//! operators
//!
//! ```text
//! H^η(z) = -(κ/ε₀) ∫ Im Γ(z, y) E₀(y) η(y) dy
//! H^φ(z) = -(1/κε₀) ∫ Im Γ(z, y) ∇×(φ ∇×E₀)(y) dy
//!        = -(κ/4π) ∫ φ(y) j₁(κ|z - y|) r̂ × ∇×E₀(y) dy,   r̂ = (z - y)/|z - y|
//! ```
//!
//! where the second form of `H^φ` follows by moving the curl onto the kernel.
//! Integrals are voxel midpoint sums.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::measurement::stream_rng;
use crate::error::{Error, Result};
use crate::forward::{incident_curl, incident_field, tangential, IncidentPlaneWave, TrialInclusion};
use crate::geometry::{DirectionSet, SphereQuadrature};
use crate::imaging::{ContrastMode, FarFieldBlock, FarFieldData, IndicatorEvaluator};
use crate::math::{
    contract, curl_im_dyadic_green, im_dyadic_green, j1, rcross, rmul, Arg, CVec3, Mat3, Point,
    WaveParameters, COINCIDENCE_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FluctuationKind {
    /// `η`, relative permeability fluctuation.
    Permeability,
    /// `φ`, relative permittivity fluctuation.
    Permittivity,
}

/// Box `[origin, origin + extent]` cut into `counts` voxels per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VoxelGrid {
    pub origin: Point,
    pub extent: Point,
    pub counts: [usize; 3],
}

impl VoxelGrid {
    pub fn new(origin: Point, extent: Point, counts: [usize; 3]) -> Result<Self> {
        if extent.iter().any(|e| !(*e > 0.0)) || counts.contains(&0) {
            return Err(Error::InvalidGrid("voxel box needs positive extent and counts".into()));
        }
        Ok(Self { origin, extent, counts })
    }

    /// Cube `[-h, h]³` with `count` voxels per side.
    pub fn cube(half: f64, count: usize) -> Result<Self> {
        Self::new(Point::repeat(-half), Point::repeat(2.0 * half), [count; 3])
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn step(&self) -> Point {
        Point::new(
            self.extent.x / self.counts[0] as f64,
            self.extent.y / self.counts[1] as f64,
            self.extent.z / self.counts[2] as f64,
        )
    }

    pub fn voxel_volume(&self) -> f64 {
        self.step().product()
    }

    /// Voxel centres along one axis.
    pub fn axis_centers(&self, axis: usize) -> Vec<f64> {
        let h = self.step()[axis];
        (0..self.counts[axis]).map(|i| self.origin[axis] + (i as f64 + 0.5) * h).collect()
    }

    /// Voxel centres, first axis fastest.
    pub fn centers(&self) -> Vec<Point> {
        let (xs, ys, zs) = (self.axis_centers(0), self.axis_centers(1), self.axis_centers(2));
        let mut out = Vec::with_capacity(self.len());
        for z in &zs {
            for y in &ys {
                for x in &xs {
                    out.push(Point::new(*x, *y, *z));
                }
            }
        }
        out
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..3).all(|i| p[i] >= self.origin[i] && p[i] <= self.origin[i] + self.extent[i])
    }

    fn locate(&self, p: &Point) -> Option<usize> {
        if !self.contains(p) {
            return None;
        }
        let h = self.step();
        let idx: Vec<usize> = (0..3)
            .map(|i| (((p[i] - self.origin[i]) / h[i]) as usize).min(self.counts[i] - 1))
            .collect();
        Some(idx[0] + self.counts[0] * (idx[1] + self.counts[1] * idx[2]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluctuationSpec {
    pub kind: FluctuationKind,
    pub grid: VoxelGrid,
    pub sigma: f64,
    pub correlation_length: f64,
    pub seed: u64,
}

/// Piecewise-constant fluctuation, zero outside its box.
#[derive(Clone, Debug, PartialEq)]
pub struct MediumFluctuation {
    pub kind: FluctuationKind,
    pub grid: VoxelGrid,
    pub values: Vec<f64>,
    pub sigma: f64,
    pub correlation_length: f64,
}

impl MediumFluctuation {
    /// Samples `f` at the voxel centres.
    pub fn from_fn(kind: FluctuationKind, grid: VoxelGrid, f: impl Fn(&Point) -> f64) -> Self {
        let values = grid.centers().iter().map(f).collect();
        Self { kind, grid, values, sigma: 0.0, correlation_length: 0.0 }
    }

    pub fn value_at(&self, p: &Point) -> f64 {
        self.grid.locate(p).map_or(0.0, |i| self.values[i])
    }

    pub fn sample_std(&self) -> f64 {
        let n = self.values.len() as f64;
        let m = self.values.iter().sum::<f64>() / n;
        (self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * alpha).collect(), ..self.clone() }
    }
}

/// `C(x, y) = σ² exp(-|x - y|²/ℓ²)`.
pub fn squared_exponential(sigma: f64, ell: f64) -> impl Fn(&Point, &Point) -> f64 + Sync {
    move |x, y| sigma * sigma * (-(x - y).norm_squared() / (ell * ell)).exp()
}

/// Symmetric square root of the 1-D correlation matrix `exp(-(xᵢ - xⱼ)²/ℓ²)`.
fn axis_factor(centers: &[f64], ell: f64) -> DMatrix<f64> {
    let n = centers.len();
    let c = DMatrix::from_fn(n, n, |i, j| (-(centers[i] - centers[j]).powi(2) / (ell * ell)).exp());
    let eig = SymmetricEigen::new(c);
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()
}

/// Gaussian field with covariance `σ² exp(-|x - y|²/ℓ²)` between voxel
/// centres, sampled exactly.
///
/// The kernel factorizes over the axes, so the covariance matrix is a
/// Kronecker product and its square root is applied one axis at a time.
pub fn generate_medium_fluctuation(spec: &FluctuationSpec) -> Result<MediumFluctuation> {
    if !(spec.sigma >= 0.0 && spec.correlation_length > 0.0) {
        return Err(Error::InvalidParameter("fluctuation needs sigma >= 0 and correlation length > 0".into()));
    }
    let g = spec.grid;
    let [nx, ny, _] = g.counts;
    let mut rng = stream_rng(spec.seed, 0);
    let mut v: Vec<f64> = (0..g.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    for axis in 0..3 {
        let f = axis_factor(&g.axis_centers(axis), spec.correlation_length);
        let n = g.counts[axis];
        let stride = [1, nx, nx * ny][axis];
        let mut line = DVector::zeros(n);
        for base in 0..g.len() {
            let pos = (base / stride) % n;
            if pos != 0 {
                continue;
            }
            for i in 0..n {
                line[i] = v[base + i * stride];
            }
            let out = &f * &line;
            for i in 0..n {
                v[base + i * stride] = out[i];
            }
        }
    }
    v.iter_mut().for_each(|x| *x *= spec.sigma);
    Ok(MediumFluctuation {
        kind: spec.kind,
        grid: g,
        values: v,
        sigma: spec.sigma,
        correlation_length: spec.correlation_length,
    })
}

fn require_kind(f: &MediumFluctuation, kind: FluctuationKind) -> Result<()> {
    if f.kind != kind {
        return Err(Error::ModeMismatch(format!("expected a {kind:?} fluctuation, got {:?}", f.kind)));
    }
    Ok(())
}

/// `-(κ/ε₀) Σ_v |v| Im Γ(z, y_v) E₀(y_v) η_v`.
pub fn clutter_herglotz_mu(fluct: &MediumFluctuation, wave: &IncidentPlaneWave, z: &Point) -> Result<CVec3> {
    require_kind(fluct, FluctuationKind::Permeability)?;
    let wp = &wave.wp;
    let vol = fluct.grid.voxel_volume();
    let mut acc = CVec3::zeros();
    for (y, eta) in fluct.grid.centers().iter().zip(&fluct.values) {
        if *eta == 0.0 {
            continue;
        }
        let g = im_dyadic_green(z, y, wp);
        acc += rmul(&g, &incident_field(wave, y)) * Complex64::from(eta * vol);
    }
    Ok(acc * Complex64::from(-wp.kappa / wp.eps0))
}

/// `-(κ/4π) Σ_v |v| φ_v j₁(κr) r̂ × ∇×E₀(y_v)`, the curl moved onto the kernel.
pub fn clutter_herglotz_eps(fluct: &MediumFluctuation, wave: &IncidentPlaneWave, z: &Point) -> Result<CVec3> {
    require_kind(fluct, FluctuationKind::Permittivity)?;
    let wp = &wave.wp;
    let vol = fluct.grid.voxel_volume();
    let mut acc = CVec3::zeros();
    for (y, phi) in fluct.grid.centers().iter().zip(&fluct.values) {
        let d = z - y;
        let r = d.norm();
        if *phi == 0.0 || r < COINCIDENCE_TOL {
            continue;
        }
        let c = rcross(&(d / r), &incident_curl(wave, y));
        acc += c * Complex64::from(phi * vol * j1(wp.kappa * r));
    }
    Ok(acc * Complex64::from(-wp.kappa / (4.0 * PI)))
}

/// Born far-field perturbation on the quadrature nodes:
/// `(κ²/4π) Σ |v| (I - x̂x̂ᵀ) e^{-iκx̂·y} E₀(y) η` for `η`, and
/// `(iκ/4π) x̂ × Σ |v| e^{-iκx̂·y} φ ∇×E₀(y)` for `φ`.
pub fn clutter_far_field(fluct: &MediumFluctuation, wave: &IncidentPlaneWave, quad: &SphereQuadrature) -> Vec<CVec3> {
    let k = wave.wp.kappa;
    let vol = fluct.grid.voxel_volume();
    let centers = fluct.grid.centers();
    let sources: Vec<(Point, CVec3)> = centers
        .iter()
        .zip(&fluct.values)
        .filter(|(_, v)| **v != 0.0)
        .map(|(y, v)| {
            let s = match fluct.kind {
                FluctuationKind::Permeability => incident_field(wave, y),
                FluctuationKind::Permittivity => incident_curl(wave, y),
            };
            (*y, s * Complex64::from(v * vol))
        })
        .collect();
    quad.nodes()
        .iter()
        .map(|x| {
            let mut acc = CVec3::zeros();
            for (y, s) in &sources {
                acc += s * Complex64::from_polar(1.0, -k * x.dot(y));
            }
            match fluct.kind {
                FluctuationKind::Permeability => tangential(x, &acc) * Complex64::from(k * k / (4.0 * PI)),
                FluctuationKind::Permittivity => rcross(x, &acc) * Complex64::new(0.0, k / (4.0 * PI)),
            }
        })
        .collect()
}

/// Clutter far fields of `fluct` for every wave, packaged as measurement data.
pub fn clutter_data(fluct: &MediumFluctuation, waves: &[IncidentPlaneWave], quad: Arc<SphereQuadrature>) -> Result<FarFieldData> {
    let Some(first) = waves.first() else {
        return Err(Error::InvalidParameter("no incident waves".into()));
    };
    let blocks = waves
        .iter()
        .map(|w| FarFieldBlock { tag: w.tag(), samples: clutter_far_field(fluct, w, &quad) })
        .collect();
    Ok(FarFieldData { kappa: first.wp.kappa, quad, blocks, regime_warning: false })
}

/// Multi-measurement indicator at `z` of the clutter data of a unit
/// fluctuation in each voxel.
///
/// Clutter data are linear in the voxel values, so the indicator of a
/// realization is `Σᵥ values[v] · response[v]`.
pub fn voxel_responses(
    kind: FluctuationKind,
    grid: &VoxelGrid,
    dirs: &DirectionSet,
    wp: &WaveParameters,
    trial: &TrialInclusion,
    quad: Arc<SphereQuadrature>,
    z: &Point,
) -> Result<Vec<f64>> {
    let waves = dirs.waves(wp);
    (0..grid.len())
        .into_par_iter()
        .map(|v| {
            let mut f = MediumFluctuation::from_fn(kind, *grid, |_| 0.0);
            f.values[v] = 1.0;
            let data = clutter_data(&f, &waves, quad.clone())?;
            Ok(IndicatorEvaluator::multi(&data, dirs, wp, trial)?.eval(z))
        })
        .collect()
}

/// Two-point kernels of the speckle covariances.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    /// `Im Γ : A Im Γ`
    QEta,
    /// `∇×Im Γ : A ∇×Im Γ`
    QtildeEta,
    /// `∇×Im Γ A : ∇×Im Γ`
    QPhi,
    /// `Im Γ A : Im Γ`
    QtildePhi,
}

pub fn speckle_kernel(kind: KernelKind, a: &Mat3, x: &Point, y: &Point, wp: &WaveParameters) -> f64 {
    match kind {
        KernelKind::QEta => {
            let g = im_dyadic_green(x, y, wp);
            contract(&g, &(a * g))
        }
        KernelKind::QtildePhi => {
            let g = im_dyadic_green(x, y, wp);
            contract(&(g * a), &g)
        }
        KernelKind::QtildeEta => {
            let c = curl_im_dyadic_green(x, y, wp, Arg::Second);
            contract(&c, &(a * c))
        }
        KernelKind::QPhi => {
            let c = curl_im_dyadic_green(x, y, wp, Arg::First);
            contract(&(c * a), &c)
        }
    }
}

/// Kernel, contrast and prefactor power of `κ` for a fluctuation/trial pairing.
fn speckle_family(kind: FluctuationKind, mode: ContrastMode) -> (KernelKind, i32) {
    match (kind, mode) {
        (FluctuationKind::Permeability, ContrastMode::Permittivity) => (KernelKind::QEta, 8),
        (FluctuationKind::Permeability, ContrastMode::Permeability) => (KernelKind::QtildeEta, 4),
        (FluctuationKind::Permittivity, ContrastMode::Permittivity) => (KernelKind::QPhi, 4),
        (FluctuationKind::Permittivity, ContrastMode::Permeability) => (KernelKind::QtildePhi, 8),
    }
}

/// Covariance of the multi-measurement indicator induced by a medium
/// fluctuation with correlation `corr`,
/// `(κᵖa₂²/ε₀⁴) ∬ C(x, y) K[M_S](x, z) K[M_S](y, z') dx dy`, summed over `grid`.
#[allow(clippy::too_many_arguments)]
pub fn speckle_covariance_analytic(
    kind: FluctuationKind,
    mode: ContrastMode,
    trial: &TrialInclusion,
    wp: &WaveParameters,
    corr: &(dyn Fn(&Point, &Point) -> f64 + Sync),
    grid: &VoxelGrid,
    z: &Point,
    z2: &Point,
) -> Result<f64> {
    let (a2, ms) = match mode {
        ContrastMode::Permittivity if trial.a_mu == 0.0 => (trial.a_eps, trial.m_eps),
        ContrastMode::Permeability if trial.a_eps == 0.0 => (trial.a_mu, trial.m_mu),
        _ => return Err(Error::ModeMismatch("trial inclusion must carry only the selected contrast".into())),
    };
    let (kernel, power) = speckle_family(kind, mode);
    let centers = grid.centers();
    let kz: Vec<f64> = centers.iter().map(|y| speckle_kernel(kernel, &ms, y, z, wp)).collect();
    let kz2: Vec<f64> = if z == z2 {
        kz.clone()
    } else {
        centers.iter().map(|y| speckle_kernel(kernel, &ms, y, z2, wp)).collect()
    };
    let mut s = 0.0;
    for (i, x) in centers.iter().enumerate() {
        let mut row = 0.0;
        for (j, y) in centers.iter().enumerate() {
            row += corr(x, y) * kz2[j];
        }
        s += kz[i] * row;
    }
    let vol = grid.voxel_volume();
    Ok(wp.kappa.powi(power) * a2 * a2 / wp.eps0.powi(4) * s * vol * vol)
}
