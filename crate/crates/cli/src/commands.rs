//! Subcommand implementations. Each writes its artifact under the output
//! directory and returns what it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use topsens::noise::{
    add_measurement_noise, cov_herglotz_noise, cov_indicator_measurement, draw, estimate_mean, estimate_variance,
    generate_medium_fluctuation, sample_noise_block, snr, speckle_covariance_analytic, squared_exponential,
    stream_rng, voxel_responses, Estimate, FluctuationSpec, MeasurementNoiseSpec, StatsReport,
};
use topsens::validate::{all_passed, run_validation, CheckResult, ValidationOptions};
use topsens::{
    compute_map, herglotz, peak_analysis, synthesize_far_field, ContrastMode, DirectionSet, FarFieldData,
    IndicatorEvaluator, PeakReport, Point, TrialInclusion,
};

use crate::config::{ConfigError, ExperimentConfig, NoiseLevel, Scene, StatCheck};
use crate::formats::{peak_summary, read_farfield, write_farfield, write_map_csv, write_pgm, DataFile, FormatError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Format(#[from] FormatError),
    #[error("data fingerprint mismatch: config expects {expected}, data file has {found}")]
    Fingerprint { expected: String, found: String },
    #[error("{0}")]
    Check(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Library(#[from] topsens::Error),
}

impl CliError {
    /// 2 for configuration errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

fn write_file(out: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let path = out.join(name);
    fs::write(&path, bytes).map_err(io_err(&path))?;
    Ok(path)
}

fn config_invalid(key: &str, msg: &str) -> CliError {
    CliError::Config(ConfigError::Invalid { key: key.into(), msg: msg.into() })
}

pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf, CliError> {
    let scene = cfg.scene()?;
    let mut data = synthesize_far_field(&scene.inclusion, &scene.waves, scene.quad.clone())?;
    if let Some(n) = &cfg.noise {
        let spec = match n.level {
            NoiseLevel::Sigma(s) => MeasurementNoiseSpec::random(s, n.seed),
            NoiseLevel::Percent(p) => MeasurementNoiseSpec::relative(p, n.seed),
        };
        add_measurement_noise(&mut data, &spec)?;
    }
    let file = DataFile { config_fingerprint: cfg.fingerprint(), data_fingerprint: cfg.data_fingerprint(), data };
    write_file(out, &cfg.output.data, write_farfield(&file).as_bytes())
}

#[derive(Clone, Debug)]
pub struct ImageOutcome {
    pub peak: PeakReport,
    pub summary: Vec<(String, String)>,
    pub map_path: PathBuf,
    pub image_path: Option<PathBuf>,
}

/// Images the data file, defaulting to `<out>/<output.data>`.
pub fn image(cfg: &ExperimentConfig, data_path: Option<&Path>, out: &Path) -> Result<ImageOutcome, CliError> {
    let scene = cfg.scene()?;
    let default_path = out.join(&cfg.output.data);
    let path = data_path.unwrap_or(&default_path);
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let file = read_farfield(&path.display().to_string(), &text)?;
    let expected = cfg.data_fingerprint();
    if file.data_fingerprint != expected {
        return Err(CliError::Fingerprint { expected, found: file.data_fingerprint });
    }
    let directions = scene.dirs.as_ref().map_or(1, DirectionSet::len);
    let ev = IndicatorEvaluator::new(&file.data, &scene.waves, &scene.trial, cfg.normalization, directions)?;
    let map = compute_map(&scene.grid, |z| ev.eval(z))
        .with_meta("config_fingerprint", cfg.fingerprint())
        .with_meta("data_fingerprint", &expected)
        .with_meta("kappa", format!("{:.16e}", scene.wp.kappa))
        .with_meta("incident_fields", scene.waves.len())
        .with_meta("directions", directions)
        .with_meta("regime_warning", file.data.regime_warning);
    let peak = peak_analysis(&map)?;
    let summary = peak_summary(&map, &peak);
    let map_path = write_file(out, &cfg.output.map, write_map_csv(&map, &peak).as_bytes())?;
    let image_path = match &cfg.output.image {
        Some(name) => Some(write_file(out, name, &write_pgm(&map, &cfg.fingerprint()))?),
        None => None,
    };
    Ok(ImageOutcome { peak, summary, map_path, image_path })
}

#[derive(Clone, Debug, Serialize)]
pub struct StatsOutput {
    pub config_fingerprint: String,
    pub reports: Vec<StatsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_ratio: Option<f64>,
    /// `√(n₂/n₁)` for the two direction sets of the SNR check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_ratio_expected: Option<f64>,
}

fn contrast_mode(trial: &TrialInclusion) -> Result<ContrastMode, CliError> {
    match (trial.a_eps != 0.0, trial.a_mu != 0.0) {
        (true, false) => Ok(ContrastMode::Permittivity),
        (false, true) => Ok(ContrastMode::Permeability),
        _ => Err(config_invalid("trial", "statistics need exactly one of eps2 != eps0 or mu2 != mu0")),
    }
}

fn measurement_sigma(cfg: &ExperimentConfig) -> Result<f64, CliError> {
    match cfg.noise.map(|n| n.level) {
        Some(NoiseLevel::Sigma(s)) if s > 0.0 => Ok(s),
        _ => Err(config_invalid("noise.sigma", "measurement-noise statistics need noise.sigma > 0")),
    }
}

fn direction_set(scene: &Scene) -> Result<&DirectionSet, CliError> {
    scene.dirs.as_ref().ok_or_else(|| config_invalid("incident", "statistics need a direction set (incident.m, incident.n)"))
}

/// Seed for check number `index`, drawn from its own stream of the master seed.
fn check_seed(seed: u64, index: usize) -> u64 {
    stream_rng(seed, 1 + index as u64).gen()
}

/// Multi-measurement indicator at `z` for `trials` noisy copies of `clean`.
fn noisy_indicator(
    clean: &FarFieldData,
    scene: &Scene,
    dirs: &DirectionSet,
    sigma: f64,
    z: &Point,
    trials: usize,
    seed: u64,
) -> Vec<f64> {
    draw(trials, seed, |rng| {
        let mut d = clean.clone();
        add_measurement_noise(&mut d, &MeasurementNoiseSpec::random(sigma, rng.gen())).expect("sigma validated");
        IndicatorEvaluator::multi(&d, dirs, &scene.wp, &scene.trial).expect("blocks match").eval(z)
    })
}

fn snr_estimate(v: &[f64]) -> Result<Estimate, CliError> {
    let m = estimate_mean(v)?.value;
    let s = m / estimate_variance(v)?.value.sqrt();
    // delta-method standard error of mean/std for Gaussian samples
    let se = ((1.0 + 0.5 * s * s) / v.len() as f64).sqrt();
    Ok(Estimate { value: s, ci95_halfwidth: 1.96 * se, trials: v.len() })
}

pub fn stats(cfg: &ExperimentConfig, out: &Path) -> Result<(StatsOutput, PathBuf), CliError> {
    let spec = cfg.stats.as_ref().ok_or_else(|| config_invalid("stats", "missing stats section"))?;
    let scene = cfg.scene()?;
    let wp = scene.wp;
    let z = spec.point.map_or(scene.inclusion.center, Point::from);
    let mut output = StatsOutput { config_fingerprint: cfg.fingerprint(), reports: Vec::new(), snr_ratio: None, snr_ratio_expected: None };
    for (index, check) in spec.checks.iter().enumerate() {
        let seed = check_seed(spec.seed, index);
        match check {
            StatCheck::HerglotzCovariance => {
                let sigma = measurement_sigma(cfg)?;
                let z2 = z + Point::x() * (spec.lag / wp.kappa);
                let quad = scene.quad.clone();
                let v = draw(spec.trials, seed, |rng| {
                    let xi = sample_noise_block(&quad, sigma, rng);
                    let (h, h2) = (herglotz(&quad, &xi, wp.kappa, &z), herglotz(&quad, &xi, wp.kappa, &z2));
                    (0..3).map(|i| (h[i] * h2[i].conj()).re).sum::<f64>()
                });
                let analytic = cov_herglotz_noise(&z, &z2, &wp, sigma).trace();
                let est = estimate_mean(&v)?;
                output.reports.push(StatsReport::new(check.name(), &est, analytic, 2.0 * sigma * sigma));
            }
            StatCheck::Variance | StatCheck::Mean => {
                let sigma = measurement_sigma(cfg)?;
                let dirs = direction_set(&scene)?;
                let mode = contrast_mode(&scene.trial)?;
                let clean = synthesize_far_field(&scene.inclusion, &scene.waves, scene.quad.clone())?;
                let v = noisy_indicator(&clean, &scene, dirs, sigma, &z, spec.trials, seed);
                let report = if *check == StatCheck::Variance {
                    let analytic = cov_indicator_measurement(&z, &z, &scene.trial, &wp, sigma, dirs.len(), mode)?;
                    StatsReport::new(check.name(), &estimate_variance(&v)?, analytic, f64::MIN_POSITIVE)
                } else {
                    let noiseless = IndicatorEvaluator::multi(&clean, dirs, &wp, &scene.trial)?.eval(&z);
                    StatsReport::new(check.name(), &estimate_mean(&v)?, noiseless, f64::MIN_POSITIVE)
                };
                output.reports.push(report);
            }
            StatCheck::Snr => {
                let sigma = measurement_sigma(cfg)?;
                let dirs = direction_set(&scene)?;
                let mode = contrast_mode(&scene.trial)?;
                let (m, n) = dirs.counts();
                let bigger = DirectionSet::new(2 * m, 2 * n, dirs.layout())?;
                let zd = scene.inclusion.center;
                let mut values = Vec::new();
                for (label, d, sub) in [("snr_n", dirs, 0u64), ("snr_4n", &bigger, 1)] {
                    let waves = d.waves(&wp);
                    let clean = synthesize_far_field(&scene.inclusion, &waves, scene.quad.clone())?;
                    let v = noisy_indicator(&clean, &scene, d, sigma, &zd, spec.trials, seed.wrapping_add(sub));
                    let est = snr_estimate(&v)?;
                    let analytic = snr(&scene.inclusion, &wp, sigma, d.len(), mode)?;
                    output.reports.push(StatsReport::new(label, &est, analytic, f64::MIN_POSITIVE));
                    values.push((est.value, d.len()));
                }
                output.snr_ratio = Some(values[1].0 / values[0].0);
                output.snr_ratio_expected = Some((values[1].1 as f64 / values[0].1 as f64).sqrt());
            }
            StatCheck::Speckle => {
                let mn = cfg.medium_noise.ok_or_else(|| config_invalid("medium_noise", "speckle statistic needs a medium_noise section"))?;
                let grid = scene.voxels.expect("voxels built with medium_noise");
                let dirs = direction_set(&scene)?;
                let mode = contrast_mode(&scene.trial)?;
                let r = voxel_responses(mn.kind, &grid, dirs, &wp, &scene.trial, scene.quad.clone(), &z)?;
                let v = draw(spec.trials, seed, |rng| {
                    let fs = FluctuationSpec { kind: mn.kind, grid, sigma: mn.sigma, correlation_length: mn.correlation_length, seed: rng.gen() };
                    let f = generate_medium_fluctuation(&fs).expect("medium_noise validated");
                    r.iter().zip(&f.values).map(|(a, b)| a * b).sum::<f64>()
                });
                let corr = squared_exponential(mn.sigma, mn.correlation_length);
                let analytic = speckle_covariance_analytic(mn.kind, mode, &scene.trial, &wp, &corr, &grid, &z, &z)?;
                output.reports.push(StatsReport::new(check.name(), &estimate_variance(&v)?, analytic, f64::MIN_POSITIVE));
            }
        }
    }
    let json = serde_json::to_string_pretty(&output).expect("report serializes") + "\n";
    let path = write_file(out, &cfg.output.stats, json.as_bytes())?;
    Ok((output, path))
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationOutput {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

pub fn validate(opts: &ValidationOptions, out: &Path, file_name: &str) -> Result<(ValidationOutput, PathBuf), CliError> {
    let checks = run_validation(opts)?;
    let output = ValidationOutput { passed: all_passed(&checks), checks };
    let json = serde_json::to_string_pretty(&output).expect("report serializes") + "\n";
    let path = write_file(out, file_name, json.as_bytes())?;
    Ok((output, path))
}
