//! On-disk formats: far-field text files, CSV maps and PGM images.
//!
//! Floats are written with `{:.16e}` (17 significant digits), which
//! round-trips every finite `f64`.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use topsens::{CVec3, FarFieldBlock, FarFieldData, IndicatorMap, PeakReport, Point, SphereQuadrature, WaveTag};

pub const FARFIELD_MAGIC: &str = "# topsens far-field v1";
pub const MAP_MAGIC: &str = "# topsens map v1";

#[derive(Debug, Error, PartialEq)]
#[error("{path}: line {line}: {msg}")]
pub struct FormatError {
    pub path: String,
    pub line: usize,
    pub msg: String,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn vec3(p: &Point) -> String {
    format!("{},{},{}", num(p.x), num(p.y), num(p.z))
}

/// Far-field data plus the fingerprints of the config that produced it.
#[derive(Clone, Debug)]
pub struct DataFile {
    pub config_fingerprint: String,
    pub data_fingerprint: String,
    pub data: FarFieldData,
}

pub fn write_farfield(f: &DataFile) -> String {
    let d = &f.data;
    let mut s = String::new();
    let _ = writeln!(s, "{FARFIELD_MAGIC}");
    let _ = writeln!(s, "# config_fingerprint={}", f.config_fingerprint);
    let _ = writeln!(s, "# data_fingerprint={}", f.data_fingerprint);
    let _ = writeln!(s, "kappa={}", num(d.kappa));
    let _ = writeln!(s, "quadrature=product {} {}", d.quad.polar_order(), d.quad.azimuthal_count());
    let _ = writeln!(s, "nodes={}", d.quad.len());
    let _ = writeln!(s, "blocks={}", d.blocks.len());
    let _ = writeln!(s, "regime_warning={}", d.regime_warning);
    for b in &d.blocks {
        let _ = writeln!(s, "@block theta={} theta_perp={}", vec3(&b.tag.theta), vec3(&b.tag.theta_perp));
        for v in &b.samples {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                num(v.x.re),
                num(v.x.im),
                num(v.y.re),
                num(v.y.im),
                num(v.z.re),
                num(v.z.im)
            );
        }
    }
    s
}

struct Lines<'a> {
    path: &'a str,
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, msg: impl Into<String>) -> FormatError {
        FormatError { path: self.path.into(), line: self.line, msg: msg.into() }
    }

    fn next(&mut self) -> Result<&'a str, FormatError> {
        match self.iter.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => {
                self.line += 1;
                Err(self.err("unexpected end of file"))
            }
        }
    }

    fn field(&mut self, prefix: &str) -> Result<&'a str, FormatError> {
        let l = self.next()?;
        l.strip_prefix(prefix).ok_or_else(|| self.err(format!("expected `{prefix}...`")))
    }

    fn parse_f64(&self, s: &str) -> Result<f64, FormatError> {
        s.trim().parse().map_err(|_| self.err(format!("bad number `{s}`")))
    }

    fn parse_usize(&self, s: &str) -> Result<usize, FormatError> {
        s.trim().parse().map_err(|_| self.err(format!("bad count `{s}`")))
    }

    fn parse_vec3(&self, s: &str) -> Result<Point, FormatError> {
        let p: Vec<&str> = s.split(',').collect();
        if p.len() != 3 {
            return Err(self.err("expected three components"));
        }
        Ok(Point::new(self.parse_f64(p[0])?, self.parse_f64(p[1])?, self.parse_f64(p[2])?))
    }
}

pub fn read_farfield(path: &str, text: &str) -> Result<DataFile, FormatError> {
    let mut r = Lines { path, iter: text.lines().enumerate(), line: 0 };
    if r.next()? != FARFIELD_MAGIC {
        return Err(r.err("not a topsens far-field file"));
    }
    let config_fingerprint = r.field("# config_fingerprint=")?.to_string();
    let data_fingerprint = r.field("# data_fingerprint=")?.to_string();
    let kappa = r.field("kappa=")?;
    let kappa = r.parse_f64(kappa)?;
    let q = r.field("quadrature=product ")?;
    let orders: Vec<&str> = q.split_whitespace().collect();
    if orders.len() != 2 {
        return Err(r.err("expected `quadrature=product <polar> <azimuthal>`"));
    }
    let quad = SphereQuadrature::product(r.parse_usize(orders[0])?, r.parse_usize(orders[1])?)
        .map_err(|e| r.err(e.to_string()))?;
    let nodes = r.field("nodes=")?;
    if r.parse_usize(nodes)? != quad.len() {
        return Err(r.err("node count does not match the quadrature"));
    }
    let nb = r.field("blocks=")?;
    let nb = r.parse_usize(nb)?;
    let regime_warning = match r.field("regime_warning=")? {
        "true" => true,
        "false" => false,
        _ => return Err(r.err("expected true or false")),
    };
    let mut blocks = Vec::with_capacity(nb);
    for _ in 0..nb {
        let head = r.field("@block theta=")?;
        let Some((th, tp)) = head.split_once(" theta_perp=") else {
            return Err(r.err("expected `@block theta=... theta_perp=...`"));
        };
        let tag = WaveTag { theta: r.parse_vec3(th)?, theta_perp: r.parse_vec3(tp)? };
        let mut samples = Vec::with_capacity(quad.len());
        for _ in 0..quad.len() {
            let row = r.next()?;
            let v: Vec<&str> = row.split(',').collect();
            if v.len() != 6 {
                return Err(r.err("expected six values per node"));
            }
            let mut c = [Complex64::new(0.0, 0.0); 3];
            for (i, ci) in c.iter_mut().enumerate() {
                *ci = Complex64::new(r.parse_f64(v[2 * i])?, r.parse_f64(v[2 * i + 1])?);
            }
            samples.push(CVec3::new(c[0], c[1], c[2]));
        }
        blocks.push(FarFieldBlock { tag, samples });
    }
    if let Some((i, l)) = r.iter.find(|(_, l)| !l.trim().is_empty()) {
        return Err(FormatError { path: path.into(), line: i + 1, msg: format!("trailing content `{l}`") });
    }
    Ok(DataFile {
        config_fingerprint,
        data_fingerprint,
        data: FarFieldData { quad: Arc::new(quad), kappa, blocks, regime_warning },
    })
}

/// CSV map: `# key=value` header lines, the peak summary, then `x,y,z,value` rows.
pub fn write_map_csv(map: &IndicatorMap, peak: &PeakReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAP_MAGIC}");
    for (k, v) in &map.meta {
        let _ = writeln!(s, "# {k}={v}");
    }
    for (k, v) in peak_summary(map, peak) {
        let _ = writeln!(s, "# {k}={v}");
    }
    let _ = writeln!(s, "x,y,z,value");
    for (p, v) in map.grid.enumerate().iter().zip(&map.values) {
        let _ = writeln!(s, "{},{}", vec3(p), num(*v));
    }
    s
}

/// Peak-analysis key/value pairs shared by the CSV header and stdout.
pub fn peak_summary(map: &IndicatorMap, peak: &PeakReport) -> Vec<(String, String)> {
    let mut out = vec![
        ("grid.counts".to_string(), format!("{}x{}", map.grid.counts[0], map.grid.counts[1])),
        ("grid.spacing".to_string(), num(map.grid.spacing)),
        ("peak.argmax".to_string(), vec3(&peak.argmax)),
        ("peak.value".to_string(), num(peak.peak)),
        ("map.min".to_string(), num(map.values.iter().copied().fold(f64::INFINITY, f64::min))),
    ];
    for (axis, w) in peak.fwhm.iter().enumerate() {
        let v = w.map_or_else(|| "none".to_string(), num);
        out.push((format!("peak.fwhm_axis{axis}"), v));
    }
    out
}

/// Binary PGM, min-max scaled to 0..=255, first row at the largest second-axis index.
pub fn write_pgm(map: &IndicatorMap, config_fingerprint: &str) -> Vec<u8> {
    let (w, h) = (map.grid.counts[0], map.grid.counts[1]);
    let lo = map.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = map.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = format!("P5\n# config_fingerprint={config_fingerprint}\n{w} {h}\n255\n").into_bytes();
    for row in (0..h).rev() {
        for col in 0..w {
            let v = map.values[col + w * row];
            let px = if hi > lo { ((v - lo) / (hi - lo) * 255.0).round() } else { 0.0 };
            out.push(px.clamp(0.0, 255.0) as u8);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use topsens::{compute_map, peak_analysis, SearchGrid};

    fn sample_data() -> DataFile {
        let quad = SphereQuadrature::product(3, 4).unwrap();
        let samples = (0..quad.len())
            .map(|i| {
                let x = i as f64;
                CVec3::new(Complex64::new(x.sin(), 1.0 / 3.0), Complex64::new(-x, 1e-300), Complex64::new(0.1, -7e10))
            })
            .collect();
        let tag = WaveTag { theta: Point::x(), theta_perp: Point::new(0.0, 0.6, 0.8) };
        DataFile {
            config_fingerprint: "ab".into(),
            data_fingerprint: "cd".into(),
            data: FarFieldData { quad: Arc::new(quad), kappa: 4.0 * std::f64::consts::PI, blocks: vec![FarFieldBlock { tag, samples }], regime_warning: true },
        }
    }

    #[test]
    fn farfield_round_trip_is_bit_exact() {
        let f = sample_data();
        let text = write_farfield(&f);
        let back = read_farfield("mem", &text).unwrap();
        assert_eq!(back.data.blocks, f.data.blocks);
        assert_eq!(back.data.kappa.to_bits(), f.data.kappa.to_bits());
        assert!(back.data.regime_warning);
        assert_eq!(back.config_fingerprint, "ab");
        assert_eq!(write_farfield(&back), text);
    }

    #[test]
    fn farfield_errors_point_at_lines() {
        let text = write_farfield(&sample_data());
        let broken = text.replacen("nodes=12", "nodes=13", 1);
        let e = read_farfield("f.txt", &broken).unwrap_err();
        assert_eq!(e.line, 6);
        let truncated: String = text.lines().take(12).map(|l| format!("{l}\n")).collect();
        let e = read_farfield("f.txt", &truncated).unwrap_err();
        assert!(e.msg.contains("end of file"), "{e}");
        assert!(read_farfield("f.txt", "hello\n").is_err());
    }

    #[test]
    fn csv_and_pgm_layout() {
        let grid = SearchGrid::square_xy(1.0, 3, 0.0).unwrap();
        let map = compute_map(&grid, |p| p.x + 10.0 * p.y).with_meta("config_fingerprint", "ff");
        let peak = peak_analysis(&map).unwrap();
        let csv = write_map_csv(&map, &peak);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], MAP_MAGIC);
        assert_eq!(lines[1], "# config_fingerprint=ff");
        let hdr = lines.iter().position(|l| *l == "x,y,z,value").unwrap();
        assert_eq!(lines.len() - hdr - 1, 9);
        assert_eq!(lines[hdr + 1], "-1.0000000000000000e0,-1.0000000000000000e0,0.0000000000000000e0,-1.1000000000000000e1");
        let pgm = write_pgm(&map, "ff");
        let body = &pgm[pgm.len() - 9..];
        // top row is y = +1: values 9, 10, 11 -> brightest row
        assert_eq!(body[..3], [232, 243, 255]);
        assert_eq!(body[6..], [0, 12, 23]);
        assert!(pgm.starts_with(b"P5\n# config_fingerprint=ff\n3 3\n255\n"));
    }

    #[test]
    fn constant_map_is_black() {
        let grid = SearchGrid::square_xy(1.0, 2, 0.0).unwrap();
        let map = compute_map(&grid, |_| 4.0);
        let pgm = write_pgm(&map, "x");
        assert!(pgm.ends_with(&[0, 0, 0, 0]));
    }
}
