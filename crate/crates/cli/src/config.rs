//! Flat `key.path = value` experiment configuration.
//!
//! One assignment per line; `#` starts a comment. Scalars accept `pi` and
//! `<number>*pi`, vectors are three comma-separated scalars. Every key and
//! its default is listed in the README.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use sha2::{Digest, Sha256};
use thiserror::Error;

use topsens::noise::{FluctuationKind, VoxelGrid};
use topsens::validate::ValidationOptions;
use topsens::{
    DirectionLayout, DirectionSet, IncidentPlaneWave, Inclusion, Normalization, Point, SearchGrid, SphereQuadrature,
    TrialInclusion, WaveParameters, UNIT_BALL_VOLUME,
};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {key}: {msg}")]
    Value { line: usize, key: String, msg: String },
    #[error("{key}: {msg}")]
    Invalid { key: String, msg: String },
}

fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.into(), msg: msg.into() }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MediumSpec {
    pub eps0: f64,
    pub mu0: f64,
    pub kappa: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InclusionSpec {
    pub center: [f64; 3],
    pub rho: f64,
    pub volume: f64,
    pub eps1: f64,
    pub mu1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialSpec {
    pub volume: f64,
    pub eps2: f64,
    pub mu2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IncidentSpec {
    Single { theta: [f64; 3], theta_perp: [f64; 3] },
    Set { m: usize, n: usize, layout: DirectionLayout },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Plane {
    Xy,
    Xz,
    Yz,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub plane: Plane,
    pub half_width: f64,
    pub count: usize,
    pub offset: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub polar: usize,
    pub azimuthal: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseLevel {
    Sigma(f64),
    Percent(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub level: NoiseLevel,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatCheck {
    HerglotzCovariance,
    Variance,
    Mean,
    Snr,
    Speckle,
}

impl StatCheck {
    const ALL: [(StatCheck, &'static str); 5] = [
        (StatCheck::HerglotzCovariance, "herglotz_covariance"),
        (StatCheck::Variance, "variance"),
        (StatCheck::Mean, "mean"),
        (StatCheck::Snr, "snr"),
        (StatCheck::Speckle, "speckle"),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(c, _)| *c == self).map(|(_, n)| *n).unwrap()
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().find(|(_, n)| *n == s).map(|(c, _)| *c)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StatsSpec {
    pub checks: Vec<StatCheck>,
    pub trials: usize,
    pub seed: u64,
    pub point: Option<[f64; 3]>,
    /// `κ|z - z'|` for the Herglotz covariance check, displaced along x.
    pub lag: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MediumNoiseSpec {
    pub kind: FluctuationKind,
    pub sigma: f64,
    pub correlation_length: f64,
    pub half_width: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSpec {
    pub data: String,
    pub map: String,
    pub image: Option<String>,
    pub stats: String,
    pub validation: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub medium: MediumSpec,
    pub inclusion: InclusionSpec,
    pub trial: TrialSpec,
    pub incident: IncidentSpec,
    pub normalization: Normalization,
    pub grid: GridSpec,
    pub quadrature: QuadratureSpec,
    pub noise: Option<NoiseSpec>,
    pub stats: Option<StatsSpec>,
    pub medium_noise: Option<MediumNoiseSpec>,
    pub output: OutputSpec,
}

const KEYS: &[&str] = &[
    "medium.eps0",
    "medium.mu0",
    "medium.kappa",
    "inclusion.center",
    "inclusion.rho",
    "inclusion.volume",
    "inclusion.eps1",
    "inclusion.mu1",
    "trial.volume",
    "trial.eps2",
    "trial.mu2",
    "incident.theta",
    "incident.theta_perp",
    "incident.m",
    "incident.n",
    "incident.layout",
    "incident.normalization",
    "grid.plane",
    "grid.half_width",
    "grid.count",
    "grid.offset",
    "quadrature.polar",
    "quadrature.azimuthal",
    "noise.sigma",
    "noise.percent",
    "noise.seed",
    "stats.checks",
    "stats.trials",
    "stats.seed",
    "stats.point",
    "stats.lag",
    "medium_noise.kind",
    "medium_noise.sigma",
    "medium_noise.correlation_length",
    "medium_noise.half_width",
    "medium_noise.count",
    "output.data",
    "output.map",
    "output.image",
    "output.stats",
    "output.validation",
];

/// Raw assignments with their line numbers.
struct Raw {
    entries: BTreeMap<String, (usize, String)>,
}

impl Raw {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(ConfigError::Syntax { line: line_no, msg: format!("expected `key = value`, got `{body}`") });
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(ConfigError::Syntax { line: line_no, msg: format!("unknown key `{k}`") });
            }
            if v.is_empty() {
                return Err(ConfigError::Value { line: line_no, key: k.into(), msg: "empty value".into() });
            }
            if let Some((first, _)) = entries.insert(k.to_string(), (line_no, v.to_string())) {
                return Err(ConfigError::Syntax { line: line_no, msg: format!("`{k}` already set on line {first}") });
            }
        }
        Ok(Self { entries })
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn has_section(&self, prefix: &str) -> bool {
        self.entries.keys().any(|k| k.starts_with(prefix))
    }

    fn get<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => parse(v).map(Some).map_err(|msg| ConfigError::Value { line: *line, key: key.into(), msg }),
        }
    }

    fn require<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<T, ConfigError> {
        self.get(key, parse)?.ok_or_else(|| invalid(key, "missing required key"))
    }
}

pub fn parse_scalar(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let parsed = if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim();
        let factor = match head.strip_suffix('*').map(str::trim) {
            Some(f) => f.parse::<f64>().map_err(|_| format!("bad factor in `{t}`"))?,
            None if head.is_empty() => 1.0,
            None if head == "-" => -1.0,
            None => return Err(format!("expected `<number>*pi`, got `{t}`")),
        };
        factor * std::f64::consts::PI
    } else {
        t.parse::<f64>().map_err(|_| format!("expected a number, got `{t}`"))?
    };
    if !parsed.is_finite() {
        return Err(format!("`{t}` is not finite"));
    }
    Ok(parsed)
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated values, got `{s}`"));
    }
    Ok([parse_scalar(parts[0])?, parse_scalar(parts[1])?, parse_scalar(parts[2])?])
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.trim().parse().map_err(|_| format!("expected a non-negative integer, got `{s}`"))
}

fn parse_u64(s: &str) -> Result<u64, String> {
    s.trim().parse().map_err(|_| format!("expected an unsigned 64-bit integer, got `{s}`"))
}

fn parse_string(s: &str) -> Result<String, String> {
    Ok(s.trim().to_string())
}

fn parse_layout(s: &str) -> Result<DirectionLayout, String> {
    match s {
        "latlong" => Ok(DirectionLayout::LatLong),
        "fibonacci" => Ok(DirectionLayout::Fibonacci),
        _ => Err(format!("expected `latlong` or `fibonacci`, got `{s}`")),
    }
}

fn layout_name(l: DirectionLayout) -> &'static str {
    match l {
        DirectionLayout::LatLong => "latlong",
        DirectionLayout::Fibonacci => "fibonacci",
    }
}

fn parse_normalization(s: &str) -> Result<Normalization, String> {
    match s {
        "mean" => Ok(Normalization::Mean),
        "sum" => Ok(Normalization::Sum),
        _ => Err(format!("expected `mean` or `sum`, got `{s}`")),
    }
}

fn normalization_name(n: Normalization) -> &'static str {
    match n {
        Normalization::Mean => "mean",
        Normalization::Sum => "sum",
    }
}

fn parse_plane(s: &str) -> Result<Plane, String> {
    match s {
        "xy" => Ok(Plane::Xy),
        "xz" => Ok(Plane::Xz),
        "yz" => Ok(Plane::Yz),
        _ => Err(format!("expected `xy`, `xz` or `yz`, got `{s}`")),
    }
}

fn plane_name(p: Plane) -> &'static str {
    match p {
        Plane::Xy => "xy",
        Plane::Xz => "xz",
        Plane::Yz => "yz",
    }
}

fn parse_kind(s: &str) -> Result<FluctuationKind, String> {
    match s {
        "permeability" => Ok(FluctuationKind::Permeability),
        "permittivity" => Ok(FluctuationKind::Permittivity),
        _ => Err(format!("expected `permeability` or `permittivity`, got `{s}`")),
    }
}

fn kind_name(k: FluctuationKind) -> &'static str {
    match k {
        FluctuationKind::Permeability => "permeability",
        FluctuationKind::Permittivity => "permittivity",
    }
}

fn parse_checks(s: &str) -> Result<Vec<StatCheck>, String> {
    let mut out = Vec::new();
    for name in s.split(',').map(str::trim) {
        let c = StatCheck::parse(name).ok_or_else(|| format!("unknown statistic `{name}`"))?;
        if out.contains(&c) {
            return Err(format!("statistic `{name}` listed twice"));
        }
        out.push(c);
    }
    Ok(out)
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be positive (got {v})")))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw = Raw::parse(text)?;
        let medium = MediumSpec {
            eps0: positive("medium.eps0", raw.get("medium.eps0", parse_scalar)?.unwrap_or(1.0))?,
            mu0: positive("medium.mu0", raw.get("medium.mu0", parse_scalar)?.unwrap_or(1.0))?,
            kappa: positive("medium.kappa", raw.require("medium.kappa", parse_scalar)?)?,
        };
        let inclusion = InclusionSpec {
            center: raw.get("inclusion.center", parse_vec3)?.unwrap_or([0.0; 3]),
            rho: positive("inclusion.rho", raw.get("inclusion.rho", parse_scalar)?.unwrap_or(0.01))?,
            volume: positive("inclusion.volume", raw.get("inclusion.volume", parse_scalar)?.unwrap_or(UNIT_BALL_VOLUME))?,
            eps1: positive("inclusion.eps1", raw.get("inclusion.eps1", parse_scalar)?.unwrap_or(medium.eps0))?,
            mu1: positive("inclusion.mu1", raw.get("inclusion.mu1", parse_scalar)?.unwrap_or(medium.mu0))?,
        };
        let trial = TrialSpec {
            volume: positive("trial.volume", raw.get("trial.volume", parse_scalar)?.unwrap_or(UNIT_BALL_VOLUME))?,
            eps2: positive("trial.eps2", raw.get("trial.eps2", parse_scalar)?.unwrap_or(inclusion.eps1))?,
            mu2: positive("trial.mu2", raw.get("trial.mu2", parse_scalar)?.unwrap_or(inclusion.mu1))?,
        };

        let single = ["incident.theta", "incident.theta_perp"].iter().any(|k| raw.has(k));
        let set = ["incident.m", "incident.n", "incident.layout"].iter().any(|k| raw.has(k));
        let incident = match (single, set) {
            (true, true) => return Err(invalid("incident", "give either theta/theta_perp or m/n, not both")),
            (true, false) => IncidentSpec::Single {
                theta: raw.require("incident.theta", parse_vec3)?,
                theta_perp: raw.require("incident.theta_perp", parse_vec3)?,
            },
            (false, true) => IncidentSpec::Set {
                m: raw.require("incident.m", parse_usize)?,
                n: raw.require("incident.n", parse_usize)?,
                layout: raw.get("incident.layout", parse_layout)?.unwrap_or(DirectionLayout::LatLong),
            },
            (false, false) => return Err(invalid("incident", "give theta/theta_perp or m/n")),
        };
        let normalization = raw.get("incident.normalization", parse_normalization)?.unwrap_or(Normalization::Mean);

        let grid = GridSpec {
            plane: raw.get("grid.plane", parse_plane)?.unwrap_or(Plane::Xy),
            half_width: positive("grid.half_width", raw.get("grid.half_width", parse_scalar)?.unwrap_or(1.0))?,
            count: raw.get("grid.count", parse_usize)?.unwrap_or(201),
            offset: raw.get("grid.offset", parse_scalar)?.unwrap_or(0.0),
        };
        if grid.count < 2 {
            return Err(invalid("grid.count", "need at least 2 points per axis"));
        }
        let quadrature = QuadratureSpec {
            polar: raw.get("quadrature.polar", parse_usize)?.unwrap_or(topsens::geometry::DEFAULT_POLAR_ORDER),
            azimuthal: raw.get("quadrature.azimuthal", parse_usize)?.unwrap_or(topsens::geometry::DEFAULT_AZIMUTHAL_COUNT),
        };

        let noise = if raw.has_section("noise.") {
            let level = match (raw.get("noise.sigma", parse_scalar)?, raw.get("noise.percent", parse_scalar)?) {
                (Some(_), Some(_)) => return Err(invalid("noise", "give either sigma or percent")),
                (Some(s), None) if s >= 0.0 => NoiseLevel::Sigma(s),
                (None, Some(p)) if p >= 0.0 => NoiseLevel::Percent(p),
                (None, None) => return Err(invalid("noise", "missing noise.sigma or noise.percent")),
                _ => return Err(invalid("noise", "noise level must be non-negative")),
            };
            Some(NoiseSpec { level, seed: raw.require("noise.seed", parse_u64)? })
        } else {
            None
        };

        let stats = if raw.has_section("stats.") {
            let trials = raw.require("stats.trials", parse_usize)?;
            if trials < 2 {
                return Err(invalid("stats.trials", format!("need at least 2 trials (got {trials})")));
            }
            Some(StatsSpec {
                checks: raw.require("stats.checks", parse_checks)?,
                trials,
                seed: raw.get("stats.seed", parse_u64)?.unwrap_or(1),
                point: raw.get("stats.point", parse_vec3)?,
                lag: raw.get("stats.lag", parse_scalar)?.unwrap_or(0.0),
            })
        } else {
            None
        };

        let medium_noise = if raw.has_section("medium_noise.") {
            let count = raw.get("medium_noise.count", parse_usize)?.unwrap_or(9);
            if count == 0 {
                return Err(invalid("medium_noise.count", "must be positive"));
            }
            let sigma = raw.require("medium_noise.sigma", parse_scalar)?;
            if sigma < 0.0 {
                return Err(invalid("medium_noise.sigma", "must be non-negative"));
            }
            Some(MediumNoiseSpec {
                kind: raw.require("medium_noise.kind", parse_kind)?,
                sigma,
                correlation_length: positive(
                    "medium_noise.correlation_length",
                    raw.require("medium_noise.correlation_length", parse_scalar)?,
                )?,
                half_width: positive("medium_noise.half_width", raw.get("medium_noise.half_width", parse_scalar)?.unwrap_or(0.5))?,
                count,
            })
        } else {
            None
        };

        let image = raw.get("output.image", parse_string)?.unwrap_or_else(|| "map.pgm".into());
        let output = OutputSpec {
            data: raw.get("output.data", parse_string)?.unwrap_or_else(|| "farfield.txt".into()),
            map: raw.get("output.map", parse_string)?.unwrap_or_else(|| "map.csv".into()),
            image: (image != "none").then_some(image),
            stats: raw.get("output.stats", parse_string)?.unwrap_or_else(|| "stats.json".into()),
            validation: raw.get("output.validation", parse_string)?.unwrap_or_else(|| "validation.json".into()),
        };

        let cfg = Self { medium, inclusion, trial, incident, normalization, grid, quadrature, noise, stats, medium_noise, output };
        cfg.scene()?;
        Ok(cfg)
    }

    /// Every key with its resolved value, in a fixed order; parses back to `self`.
    pub fn render(&self) -> String {
        let mut s = String::new();
        self.render_data_section(&mut s);
        let v3 = |v: &[f64; 3]| format!("{:?}, {:?}, {:?}", v[0], v[1], v[2]);
        let _ = writeln!(s, "trial.volume = {:?}", self.trial.volume);
        let _ = writeln!(s, "trial.eps2 = {:?}", self.trial.eps2);
        let _ = writeln!(s, "trial.mu2 = {:?}", self.trial.mu2);
        let _ = writeln!(s, "incident.normalization = {}", normalization_name(self.normalization));
        let g = &self.grid;
        let _ = writeln!(s, "grid.plane = {}", plane_name(g.plane));
        let _ = writeln!(s, "grid.half_width = {:?}", g.half_width);
        let _ = writeln!(s, "grid.count = {}", g.count);
        let _ = writeln!(s, "grid.offset = {:?}", g.offset);
        if let Some(st) = &self.stats {
            let names: Vec<&str> = st.checks.iter().map(|c| c.name()).collect();
            let _ = writeln!(s, "stats.checks = {}", names.join(", "));
            let _ = writeln!(s, "stats.trials = {}", st.trials);
            let _ = writeln!(s, "stats.seed = {}", st.seed);
            if let Some(p) = &st.point {
                let _ = writeln!(s, "stats.point = {}", v3(p));
            }
            let _ = writeln!(s, "stats.lag = {:?}", st.lag);
        }
        if let Some(m) = &self.medium_noise {
            let _ = writeln!(s, "medium_noise.kind = {}", kind_name(m.kind));
            let _ = writeln!(s, "medium_noise.sigma = {:?}", m.sigma);
            let _ = writeln!(s, "medium_noise.correlation_length = {:?}", m.correlation_length);
            let _ = writeln!(s, "medium_noise.half_width = {:?}", m.half_width);
            let _ = writeln!(s, "medium_noise.count = {}", m.count);
        }
        let o = &self.output;
        let _ = writeln!(s, "output.data = {}", o.data);
        let _ = writeln!(s, "output.map = {}", o.map);
        let _ = writeln!(s, "output.image = {}", o.image.as_deref().unwrap_or("none"));
        let _ = writeln!(s, "output.stats = {}", o.stats);
        let _ = writeln!(s, "output.validation = {}", o.validation);
        s
    }

    /// The keys that determine the far-field data file.
    fn render_data_section(&self, s: &mut String) {
        let v3 = |v: &[f64; 3]| format!("{:?}, {:?}, {:?}", v[0], v[1], v[2]);
        let m = &self.medium;
        let _ = writeln!(s, "medium.eps0 = {:?}", m.eps0);
        let _ = writeln!(s, "medium.mu0 = {:?}", m.mu0);
        let _ = writeln!(s, "medium.kappa = {:?}", m.kappa);
        let i = &self.inclusion;
        let _ = writeln!(s, "inclusion.center = {}", v3(&i.center));
        let _ = writeln!(s, "inclusion.rho = {:?}", i.rho);
        let _ = writeln!(s, "inclusion.volume = {:?}", i.volume);
        let _ = writeln!(s, "inclusion.eps1 = {:?}", i.eps1);
        let _ = writeln!(s, "inclusion.mu1 = {:?}", i.mu1);
        match &self.incident {
            IncidentSpec::Single { theta, theta_perp } => {
                let _ = writeln!(s, "incident.theta = {}", v3(theta));
                let _ = writeln!(s, "incident.theta_perp = {}", v3(theta_perp));
            }
            IncidentSpec::Set { m, n, layout } => {
                let _ = writeln!(s, "incident.m = {m}");
                let _ = writeln!(s, "incident.n = {n}");
                let _ = writeln!(s, "incident.layout = {}", layout_name(*layout));
            }
        }
        let _ = writeln!(s, "quadrature.polar = {}", self.quadrature.polar);
        let _ = writeln!(s, "quadrature.azimuthal = {}", self.quadrature.azimuthal);
        if let Some(nz) = &self.noise {
            match nz.level {
                NoiseLevel::Sigma(v) => {
                    let _ = writeln!(s, "noise.sigma = {v:?}");
                }
                NoiseLevel::Percent(v) => {
                    let _ = writeln!(s, "noise.percent = {v:?}");
                }
            }
            let _ = writeln!(s, "noise.seed = {}", nz.seed);
        }
    }

    /// SHA-256 of the canonical rendering.
    pub fn fingerprint(&self) -> String {
        hex_digest(&self.render())
    }

    /// SHA-256 over the keys that determine the far-field data.
    pub fn data_fingerprint(&self) -> String {
        let mut s = String::new();
        self.render_data_section(&mut s);
        hex_digest(&s)
    }

    /// Replaces every seed with `seed`.
    pub fn override_seed(&mut self, seed: u64) {
        if let Some(n) = &mut self.noise {
            n.seed = seed;
        }
        if let Some(st) = &mut self.stats {
            st.seed = seed;
        }
    }

    /// Builds the library objects, reporting failures against config keys.
    pub fn scene(&self) -> Result<Scene, ConfigError> {
        let m = &self.medium;
        let wp = WaveParameters::from_wavenumber(m.eps0, m.mu0, m.kappa).map_err(|e| invalid("medium", e.to_string()))?;
        let i = &self.inclusion;
        let inclusion = Inclusion::sphere(Point::from(i.center), i.rho, i.volume, i.eps1, i.mu1, &wp)
            .map_err(|e| invalid("inclusion", e.to_string()))?;
        let t = &self.trial;
        let trial = TrialInclusion::sphere(t.volume, t.eps2, t.mu2, &wp).map_err(|e| invalid("trial", e.to_string()))?;
        let (waves, dirs) = match &self.incident {
            IncidentSpec::Single { theta, theta_perp } => {
                let w = IncidentPlaneWave::new(Point::from(*theta), Point::from(*theta_perp), &wp)
                    .map_err(|e| invalid("incident.theta", e.to_string()))?;
                (vec![w], None)
            }
            IncidentSpec::Set { m, n, layout } => {
                let d = DirectionSet::new(*m, *n, *layout).map_err(|e| invalid("incident.m", e.to_string()))?;
                (d.waves(&wp), Some(d))
            }
        };
        let g = &self.grid;
        let (a, b, normal) = match g.plane {
            Plane::Xy => (Point::x(), Point::y(), Point::z()),
            Plane::Xz => (Point::x(), Point::z(), Point::y()),
            Plane::Yz => (Point::y(), Point::z(), Point::x()),
        };
        let spacing = 2.0 * g.half_width / (g.count - 1) as f64;
        let grid = SearchGrid::new(normal * g.offset - (a + b) * g.half_width, vec![a, b], vec![g.count, g.count], spacing)
            .map_err(|e| invalid("grid", e.to_string()))?;
        let q = &self.quadrature;
        let quad = SphereQuadrature::product(q.polar, q.azimuthal).map_err(|e| invalid("quadrature", e.to_string()))?;
        let voxels = match &self.medium_noise {
            Some(mn) => Some(VoxelGrid::cube(mn.half_width, mn.count).map_err(|e| invalid("medium_noise", e.to_string()))?),
            None => None,
        };
        Ok(Scene { wp, inclusion, trial, waves, dirs, grid, quad: Arc::new(quad), voxels })
    }
}

/// Validation-suite options from a config file. Only `medium.kappa`,
/// `quadrature.*`, `incident.m`/`incident.n` and `stats.seed` are read;
/// other keys are syntax-checked and ignored.
pub fn validation_options(text: &str) -> Result<ValidationOptions, ConfigError> {
    let raw = Raw::parse(text)?;
    let mut o = ValidationOptions::default();
    if let Some(k) = raw.get("medium.kappa", parse_scalar)? {
        o.kappa = positive("medium.kappa", k)?;
    }
    o.polar_order = raw.get("quadrature.polar", parse_usize)?.unwrap_or(o.polar_order);
    o.azimuthal_count = raw.get("quadrature.azimuthal", parse_usize)?.unwrap_or(o.azimuthal_count);
    o.directions_m = raw.get("incident.m", parse_usize)?.unwrap_or(o.directions_m);
    o.directions_n = raw.get("incident.n", parse_usize)?.unwrap_or(o.directions_n);
    o.seed = raw.get("stats.seed", parse_u64)?.unwrap_or(o.seed);
    Ok(o)
}

pub fn hex_digest(s: &str) -> String {
    Sha256::digest(s.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Library objects built from a validated config.
#[derive(Clone, Debug)]
pub struct Scene {
    pub wp: WaveParameters,
    pub inclusion: Inclusion,
    pub trial: TrialInclusion,
    pub waves: Vec<IncidentPlaneWave>,
    pub dirs: Option<DirectionSet>,
    pub grid: SearchGrid,
    pub quad: Arc<SphereQuadrature>,
    pub voxels: Option<VoxelGrid>,
}
