//! Herglotz back-propagation and the topological-derivative indicator.
//!
//! The Herglotz field of a far-field pattern `Φ` uses the normalized measure
//! on the sphere,
//!
//! ```text
//! H[Φ](z) = (1/4π) ∫ Φ(x̂) e^{iκx̂·z} ds(x̂),
//! ```
//!
//! and the single-measurement indicator for a trial inclusion `(ε₂, μ₂)` is
//!
//! ```text
//! I(z) = -(1/4π) Re{ a₂^μ M^μ ∇×E₀(z) · conj(∇×H(z)) + κ² a₂^ε conj(H(z)) · M^ε E₀(z) }.
//! ```
//!
//! The multi-measurement indicator averages over the `n` directions and sums
//! over both polarizations. Against noiseless data from a ball the
//! closed-form predictors below are reproduced up to quadrature error.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{incident_curl, incident_field, Inclusion, IncidentPlaneWave, TrialInclusion};
use crate::geometry::{DirectionSet, SearchGrid, SphereQuadrature};
use crate::math::{cdot, cdotc, complexify, contract, im_dyadic_green, rcross, rmul, CVec3, Point, WaveParameters};

const TAG_TOL: f64 = 1e-12;

/// Identifies the incident wave that produced a far-field block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveTag {
    pub theta: Point,
    pub theta_perp: Point,
}

impl WaveTag {
    pub fn matches(&self, wave: &IncidentPlaneWave) -> bool {
        (self.theta - wave.theta).amax() <= TAG_TOL && (self.theta_perp - wave.theta_perp).amax() <= TAG_TOL
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FarFieldBlock {
    pub tag: WaveTag,
    pub samples: Vec<CVec3>,
}

/// Far-field samples on the nodes of a shared quadrature, one block per wave.
#[derive(Clone, Debug)]
pub struct FarFieldData {
    pub quad: Arc<SphereQuadrature>,
    pub kappa: f64,
    pub blocks: Vec<FarFieldBlock>,
    pub regime_warning: bool,
}

impl FarFieldData {
    pub fn block_for(&self, wave: &IncidentPlaneWave) -> Result<&FarFieldBlock> {
        self.blocks.iter().find(|b| b.tag.matches(wave)).ok_or(Error::TagMismatch)
    }

    /// Blocks in the order of `waves`; fails unless every wave is present.
    pub fn blocks_for(&self, waves: &[IncidentPlaneWave]) -> Result<Vec<&FarFieldBlock>> {
        if self.blocks.len() != waves.len() {
            return Err(Error::IncompleteCoverage(format!(
                "{} blocks for {} incident fields",
                self.blocks.len(),
                waves.len()
            )));
        }
        waves
            .iter()
            .enumerate()
            .map(|(i, w)| {
                if self.blocks[i].tag.matches(w) {
                    Ok(&self.blocks[i])
                } else {
                    self.block_for(w).map_err(|_| {
                        Error::IncompleteCoverage(format!("no block for wave {i} (θ = {:?})", w.theta.as_slice()))
                    })
                }
            })
            .collect()
    }
}

fn check_samples(quad: &SphereQuadrature, samples: &[CVec3]) {
    assert_eq!(quad.len(), samples.len(), "samples do not match the quadrature");
}

/// `H[Φ](z) = Σₖ ŵₖ Φₖ e^{iκx̂ₖ·z}` with normalized weights `ŵ`.
pub fn herglotz(quad: &SphereQuadrature, samples: &[CVec3], kappa: f64, z: &Point) -> CVec3 {
    check_samples(quad, samples);
    let mut acc = CVec3::zeros();
    for ((x, w), phi) in quad.nodes().iter().zip(quad.normalized_weights()).zip(samples) {
        let e = Complex64::from_polar(*w, kappa * x.dot(z));
        acc += phi.map(|c| c * e);
    }
    acc
}

/// `∇ × H[Φ](z) = iκ Σₖ ŵₖ (x̂ₖ × Φₖ) e^{iκx̂ₖ·z}`.
pub fn herglotz_curl(quad: &SphereQuadrature, samples: &[CVec3], kappa: f64, z: &Point) -> CVec3 {
    check_samples(quad, samples);
    let mut acc = CVec3::zeros();
    for ((x, w), phi) in quad.nodes().iter().zip(quad.normalized_weights()).zip(samples) {
        let e = Complex64::from_polar(*w, kappa * x.dot(z));
        acc += rcross(x, phi).map(|c| c * e);
    }
    acc.map(|c| c * Complex64::new(0.0, kappa))
}

/// Single-measurement topological-derivative indicator at `z`.
pub fn indicator_single(
    data: &FarFieldData,
    block: &FarFieldBlock,
    wave: &IncidentPlaneWave,
    trial: &TrialInclusion,
    z: &Point,
) -> Result<f64> {
    if !block.tag.matches(wave) {
        return Err(Error::TagMismatch);
    }
    let k = wave.wp.kappa;
    let quad = &data.quad;
    let mut acc = Complex64::new(0.0, 0.0);
    if trial.a_eps != 0.0 {
        let h = herglotz(quad, &block.samples, k, z);
        let e0 = rmul(&trial.m_eps, &incident_field(wave, z));
        acc += cdotc(&h, &e0) * (k * k * trial.a_eps);
    }
    if trial.a_mu != 0.0 {
        let ch = herglotz_curl(quad, &block.samples, k, z);
        let c0 = rmul(&trial.m_mu, &incident_curl(wave, z));
        acc += cdotc(&ch, &c0) * trial.a_mu;
    }
    Ok(-acc.re / (4.0 * PI))
}

/// Multi-measurement indicator `(1/n) Σⱼ Σ_ℓ I(z; θⱼ, θ⊥ⱼℓ)`.
pub fn indicator_multi(
    data: &FarFieldData,
    dirs: &DirectionSet,
    wp: &WaveParameters,
    trial: &TrialInclusion,
    z: &Point,
) -> Result<f64> {
    let waves = dirs.waves(wp);
    let blocks = data.blocks_for(&waves)?;
    let mut s = 0.0;
    for (b, w) in blocks.iter().zip(&waves) {
        s += indicator_single(data, b, w, trial, z)?;
    }
    Ok(s / dirs.len() as f64)
}

/// Scaling applied to the sum over incident fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// Divide by the number of directions `n` (the multi-measurement indicator).
    Mean,
    /// Plain sum over all incident fields.
    Sum,
}

/// Fast evaluator for sums of single-measurement indicators.
///
/// Expanding `H` and `∇×H` in the indicator gives
/// `Iᵦ(z) = -(1/4π) Re{ e^{iκθᵦ·z} Σₖ Sᵦₖ e^{-iκx̂ₖ·z} }`, where `Sᵦₖ` contracts
/// the conjugated data with the trial tensors and the incident amplitudes.
/// The matrix `S` is built once, so each point costs one pass over it.
pub struct IndicatorEvaluator {
    kappa: f64,
    nodes: Vec<Point>,
    thetas: Vec<Point>,
    s_re: Vec<f64>,
    s_im: Vec<f64>,
    scale: f64,
}

impl IndicatorEvaluator {
    pub fn new(
        data: &FarFieldData,
        waves: &[IncidentPlaneWave],
        trial: &TrialInclusion,
        normalization: Normalization,
        directions: usize,
    ) -> Result<Self> {
        let blocks = data.blocks_for(waves)?;
        let quad = &data.quad;
        let nk = quad.len();
        let k = data.kappa;
        let mut s_re = Vec::with_capacity(blocks.len() * nk);
        let mut s_im = Vec::with_capacity(blocks.len() * nk);
        for (b, w) in blocks.iter().zip(waves) {
            let me = complexify(&(trial.m_eps * w.polarization()));
            let mm = complexify(&(trial.m_mu * (-w.theta.cross(&w.polarization()) * (k * k))));
            for ((x, wt), phi) in quad.nodes().iter().zip(quad.normalized_weights()).zip(&b.samples) {
                let mut s = Complex64::new(0.0, 0.0);
                if trial.a_eps != 0.0 {
                    s += cdotc(phi, &me) * Complex64::new(0.0, k * k * k * trial.a_eps);
                }
                if trial.a_mu != 0.0 {
                    s += cdotc(&rcross(x, phi), &mm) * Complex64::new(0.0, -k * trial.a_mu);
                }
                s *= *wt;
                s_re.push(s.re);
                s_im.push(s.im);
            }
        }
        let scale = match normalization {
            Normalization::Mean => 1.0 / directions.max(1) as f64,
            Normalization::Sum => 1.0,
        };
        Ok(Self {
            kappa: k,
            nodes: quad.nodes().to_vec(),
            thetas: waves.iter().map(|w| w.theta).collect(),
            s_re,
            s_im,
            scale,
        })
    }

    /// Evaluator for the multi-measurement indicator over `dirs`.
    pub fn multi(data: &FarFieldData, dirs: &DirectionSet, wp: &WaveParameters, trial: &TrialInclusion) -> Result<Self> {
        Self::new(data, &dirs.waves(wp), trial, Normalization::Mean, dirs.len())
    }

    pub fn eval(&self, z: &Point) -> f64 {
        let nk = self.nodes.len();
        let (er, ei): (Vec<f64>, Vec<f64>) = self
            .nodes
            .iter()
            .map(|x| {
                let (s, c) = (-self.kappa * x.dot(z)).sin_cos();
                (c, s)
            })
            .unzip();
        let mut total = 0.0;
        for (b, th) in self.thetas.iter().enumerate() {
            let sr = &self.s_re[b * nk..(b + 1) * nk];
            let si = &self.s_im[b * nk..(b + 1) * nk];
            let (mut tr, mut ti) = (0.0, 0.0);
            for k in 0..nk {
                tr += sr[k] * er[k] - si[k] * ei[k];
                ti += sr[k] * ei[k] + si[k] * er[k];
            }
            let (ps, pc) = (self.kappa * th.dot(z)).sin_cos();
            total += pc * tr - ps * ti;
        }
        -total * self.scale / (4.0 * PI)
    }
}

fn require_eps_only(inc: &Inclusion, trial: &TrialInclusion) -> Result<()> {
    if inc.a_mu != 0.0 || trial.a_mu != 0.0 {
        return Err(Error::ModeMismatch("permittivity predictor needs μ₁ = μ₂ = μ₀".into()));
    }
    Ok(())
}

fn require_mu_only(inc: &Inclusion, trial: &TrialInclusion) -> Result<()> {
    if inc.a_eps != 0.0 || trial.a_eps != 0.0 {
        return Err(Error::ModeMismatch("permeability predictor needs ε₁ = ε₂ = ε₀".into()));
    }
    Ok(())
}

/// `-(ρ³κ³a₁a₂/4πε₀) Re{ Im Γ(z_S, z_D) M_D conj(E₀(z_D)) · M_S E₀(z_S) }`.
pub fn predictor_single_eps(inc: &Inclusion, trial: &TrialInclusion, wave: &IncidentPlaneWave, zs: &Point) -> Result<f64> {
    require_eps_only(inc, trial)?;
    let wp = &wave.wp;
    let g = im_dyadic_green(zs, &inc.center, wp);
    let left = rmul(&g, &rmul(&inc.m_eps, &incident_field(wave, &inc.center).map(|c| c.conj())));
    let right = rmul(&trial.m_eps, &incident_field(wave, zs));
    let pre = -inc.rho.powi(3) * wp.kappa.powi(3) * inc.a_eps * trial.a_eps / (4.0 * PI * wp.eps0);
    Ok(pre * cdot(&left, &right).re)
}

/// Permeability analogue of [`predictor_single_eps`] with `∇×E₀` in place of `E₀`.
pub fn predictor_single_mu(inc: &Inclusion, trial: &TrialInclusion, wave: &IncidentPlaneWave, zs: &Point) -> Result<f64> {
    require_mu_only(inc, trial)?;
    let wp = &wave.wp;
    let g = im_dyadic_green(zs, &inc.center, wp);
    let left = rmul(&g, &rmul(&inc.m_mu, &incident_curl(wave, &inc.center).map(|c| c.conj())));
    let right = rmul(&trial.m_mu, &incident_curl(wave, zs));
    let pre = -inc.rho.powi(3) * wp.kappa * inc.a_mu * trial.a_mu / (4.0 * PI * wp.eps0);
    Ok(pre * cdot(&left, &right).re)
}

/// Which material contrast drives a predictor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContrastMode {
    Permittivity,
    Permeability,
}

/// `(ρ³κ⁴a₁a₂/ε₀²) Im Γ(z_S, z_D) M_D : M_S Im Γ(z_S, z_D)`, the large-`n`
/// limit of the multi-measurement indicator.
pub fn predictor_multi(
    inc: &Inclusion,
    trial: &TrialInclusion,
    wp: &WaveParameters,
    zs: &Point,
    mode: ContrastMode,
) -> Result<f64> {
    let (a1, a2, md, ms) = match mode {
        ContrastMode::Permittivity => {
            require_eps_only(inc, trial)?;
            (inc.a_eps, trial.a_eps, inc.m_eps, trial.m_eps)
        }
        ContrastMode::Permeability => {
            require_mu_only(inc, trial)?;
            (inc.a_mu, trial.a_mu, inc.m_mu, trial.m_mu)
        }
    };
    let g = im_dyadic_green(zs, &inc.center, wp);
    let pre = inc.rho.powi(3) * wp.kappa.powi(4) * a1 * a2 / (wp.eps0 * wp.eps0);
    Ok(pre * contract(&(g * md), &(ms * g)))
}

/// Indicator values on a search grid, in grid enumeration order.
#[derive(Clone, Debug)]
pub struct IndicatorMap {
    pub grid: SearchGrid,
    pub values: Vec<f64>,
    pub meta: Vec<(String, String)>,
}

impl IndicatorMap {
    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Evaluates `f` at every grid point (in parallel, order preserved).
pub fn compute_map(grid: &SearchGrid, f: impl Fn(&Point) -> f64 + Sync) -> IndicatorMap {
    let pts = grid.enumerate();
    let values = pts.par_iter().map(&f).collect();
    IndicatorMap { grid: grid.clone(), values, meta: Vec::new() }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeakReport {
    pub argmax: Point,
    pub index: Vec<usize>,
    pub peak: f64,
    /// Full width at half maximum along each grid axis; `None` when a half-max
    /// crossing is missing inside the grid.
    pub fwhm: Vec<Option<f64>>,
}

/// Locates the maximum and measures its axis-aligned half-maximum width by
/// linear interpolation between neighbouring samples.
pub fn peak_analysis(map: &IndicatorMap) -> Result<PeakReport> {
    let v = &map.values;
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid("map is empty or has non-finite values".into()));
    }
    let (imax, &peak) = v
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let grid = &map.grid;
    let idx = grid.multi_index(imax);
    let half = 0.5 * peak;
    let flat = v.iter().all(|x| *x == peak);
    let fwhm = (0..grid.dims())
        .map(|axis| {
            if flat || peak <= 0.0 {
                return None;
            }
            let at = |i: usize| {
                let mut m = idx.clone();
                m[axis] = i;
                v[grid.flat_index(&m)]
            };
            let c = idx[axis];
            let n = grid.counts[axis];
            let mut right = None;
            for i in c + 1..n {
                let (a, b) = (at(i - 1), at(i));
                if b < half {
                    right = Some((i - 1) as f64 + (a - half) / (a - b));
                    break;
                }
            }
            let mut left = None;
            for i in (0..c).rev() {
                let (a, b) = (at(i + 1), at(i));
                if b < half {
                    left = Some((i + 1) as f64 - (a - half) / (a - b));
                    break;
                }
            }
            Some((right? - left?) * grid.spacing)
        })
        .collect();
    Ok(PeakReport { argmax: grid.point_at(&idx), index: idx, peak, fwhm })
}
