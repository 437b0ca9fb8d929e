use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use topsens_cli::formats::read_farfield;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_topsens"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env("RUST_LOG", "error").output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn summary_value(stdout: &[u8], key: &str) -> String {
    let text = String::from_utf8_lossy(stdout);
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in output:\n{text}"))
        .to_string()
}

const SMALL: &str = "medium.kappa = 4*pi\ninclusion.eps1 = 2\ntrial.eps2 = 2\nincident.m = 2\nincident.n = 2\nquadrature.polar = 8\nquadrature.azimuthal = 16\ngrid.count = 21\n";

#[test]
fn simulate_writes_tangential_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--config", s(&config("fig1_permittivity_4pi.cfg")), "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("farfield.txt")).unwrap();
    let f = read_farfield("farfield.txt", &text).unwrap();
    assert_eq!(f.data.blocks.len(), 1);
    let mut peak: f64 = 0.0;
    let mut radial: f64 = 0.0;
    for (x, v) in f.data.quad.nodes().iter().zip(&f.data.blocks[0].samples) {
        peak = peak.max(v.iter().map(|c| c.norm()).fold(0.0, f64::max));
        radial = radial.max((v.x * x.x + v.y * x.y + v.z * x.z).norm());
    }
    assert!(peak > 0.0);
    assert!(radial <= 1e-12 * peak, "{radial} vs {peak}");
}

#[test]
fn matched_contrast_gives_zero_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.cfg", &SMALL.replace("inclusion.eps1 = 2", "inclusion.eps1 = 1"));
    assert!(run(&["simulate", "--config", s(&cfg), "--out", s(dir.path())]).status.success());
    let f = read_farfield("f", &fs::read_to_string(dir.path().join("farfield.txt")).unwrap()).unwrap();
    assert!(f.data.blocks.iter().flat_map(|b| &b.samples).all(|v| v.iter().all(|c| c.re == 0.0 && c.im == 0.0)));
}

#[test]
fn seeded_simulation_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n.cfg", &format!("{SMALL}noise.percent = 10\nnoise.seed = 4\n"));
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for d in [&a, &b] {
        assert!(run(&["simulate", "--config", s(&cfg), "--out", s(d)]).status.success());
    }
    assert!(run(&["simulate", "--config", s(&cfg), "--out", s(&c), "--seed", "5"]).status.success());
    let read = |d: &Path| fs::read(d.join("farfield.txt")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn fig1_map_peaks_at_origin_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("fig1_permittivity_4pi.cfg");
    assert!(run(&["simulate", "--config", s(&cfg), "--out", s(dir.path())]).status.success());
    let first = run(&["image", "--config", s(&cfg), "--out", s(dir.path())]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let argmax: Vec<f64> = summary_value(&first.stdout, "peak.argmax").split(',').map(|v| v.parse().unwrap()).collect();
    assert!(argmax.iter().map(|v| v * v).sum::<f64>().sqrt() <= 0.01, "{argmax:?}");
    let csv = fs::read(dir.path().join("map.csv")).unwrap();
    let pgm = fs::read(dir.path().join("map.pgm")).unwrap();
    assert_eq!(pgm.len(), b"P5\n".len() + "# config_fingerprint=\n".len() + 64 + "201 201\n255\n".len() + 201 * 201);

    let again = run(&["--threads", "1", "image", "--config", s(&cfg), "--out", s(dir.path())]);
    assert!(again.status.success());
    assert_eq!(fs::read(dir.path().join("map.csv")).unwrap(), csv);
    assert_eq!(fs::read(dir.path().join("map.pgm")).unwrap(), pgm);

    let text = String::from_utf8(csv).unwrap();
    let header = text.lines().position(|l| l == "x,y,z,value").unwrap();
    assert_eq!(text.lines().count() - header - 1, 201 * 201);
    assert!(text.lines().take(header).all(|l| l.starts_with("# ")));
}

#[test]
fn fig5_peak_grows_with_incident_fields() {
    let dir = tempfile::tempdir().unwrap();
    let mut peaks = Vec::new();
    for name in ["fig5_directions_n50.cfg", "fig5_directions_n200.cfg"] {
        let cfg = config(name);
        let d = dir.path().join(name);
        assert!(run(&["simulate", "--config", s(&cfg), "--out", s(&d)]).status.success());
        let out = run(&["image", "--config", s(&cfg), "--out", s(&d)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        peaks.push(summary_value(&out.stdout, "peak.value").parse::<f64>().unwrap());
    }
    assert!(peaks[1] > peaks[0], "{peaks:?}");
}

#[test]
fn image_refuses_foreign_data() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["simulate", "--config", s(&config("fig1_permittivity_4pi.cfg")), "--out", s(dir.path())]).status.success());
    let data = dir.path().join("farfield.txt");
    let out = run(&["image", "--config", s(&config("fig1_permittivity_8pi.cfg")), "--data", s(&data), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fingerprint mismatch"));
    assert!(!dir.path().join("map.csv").exists());
}

#[test]
fn imaging_only_keys_keep_the_data_valid() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "a.cfg", SMALL);
    let b = write_config(dir.path(), "b.cfg", &format!("{SMALL}grid.plane = xz\noutput.image = none\n"));
    assert!(run(&["simulate", "--config", s(&a), "--out", s(dir.path())]).status.success());
    let out = run(&["image", "--config", s(&b), "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("map.pgm").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.cfg", "medium.kappa = 4*pi\nmedium.kapa = 1\n");
    let out = run(&["simulate", "--config", s(&bad), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("medium.kapa"), "{err}");

    let zero = write_config(dir.path(), "z.cfg", &format!("{SMALL}noise.sigma = 0.1\nnoise.seed = 1\nstats.checks = variance\nstats.trials = 0\n"));
    let out = run(&["stats", "--config", s(&zero), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stats.trials"));

    let missing = run(&["stats", "--config", s(&write_config(dir.path(), "m.cfg", SMALL)), "--out", s(dir.path())]);
    assert_eq!(missing.status.code(), Some(2));

    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["simulate"]).status.code(), Some(2));
}

#[test]
fn missing_files_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--config", s(&dir.path().join("nope.cfg"))]);
    assert_eq!(out.status.code(), Some(1));
    let cfg = write_config(dir.path(), "a.cfg", SMALL);
    let out = run(&["image", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn measurement_statistics_match_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["stats", "--config", s(&config("stats_measurement.cfg")), "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: Value = serde_json::from_slice(&fs::read(dir.path().join("stats.json")).unwrap()).unwrap();
    let report = |name: &str| json["reports"].as_array().unwrap().iter().find(|r| r["name"] == name).unwrap().clone();
    assert!(report("variance")["rel_error"].as_f64().unwrap() <= 0.10);
    assert!(report("herglotz_covariance")["rel_error"].as_f64().unwrap() <= 0.05);
    let mean = report("mean");
    let dev = (mean["estimate"].as_f64().unwrap() - mean["analytic"].as_f64().unwrap()).abs();
    assert!(dev <= mean["ci95_halfwidth"].as_f64().unwrap());
    assert!(report("snr_n")["rel_error"].as_f64().unwrap() <= 0.15);
    let ratio = json["snr_ratio"].as_f64().unwrap();
    assert!((ratio - 2.0).abs() <= 0.3, "{ratio}");
    assert_eq!(json["snr_ratio_expected"].as_f64().unwrap(), 2.0);
    assert_eq!(json["config_fingerprint"].as_str().unwrap().len(), 64);
}

#[test]
fn stats_are_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.cfg",
        &format!("{SMALL}noise.sigma = 0.01\nnoise.seed = 1\nstats.checks = variance, herglotz_covariance\nstats.trials = 64\n"),
    );
    let mut files = Vec::new();
    for t in ["1", "3"] {
        let d = dir.path().join(t);
        let out = run(&["--threads", t, "stats", "--config", s(&cfg), "--out", s(&d)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        files.push(fs::read(d.join("stats.json")).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn speckle_statistic_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sp.cfg",
        "medium.kappa = 2*pi\ninclusion.eps1 = 2\ntrial.eps2 = 2\nincident.m = 3\nincident.n = 3\nincident.layout = fibonacci\n\
         quadrature.polar = 12\nquadrature.azimuthal = 24\nmedium_noise.kind = permittivity\nmedium_noise.sigma = 0.1\n\
         medium_noise.correlation_length = 0.3\nmedium_noise.count = 4\nstats.checks = speckle\nstats.trials = 50\n",
    );
    let out = run(&["stats", "--config", s(&cfg), "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: Value = serde_json::from_slice(&fs::read(dir.path().join("stats.json")).unwrap()).unwrap();
    let r = &json["reports"][0];
    assert_eq!(r["name"], "speckle");
    assert!(r["estimate"].as_f64().unwrap() > 0.0 && r["analytic"].as_f64().unwrap() > 0.0);
}

#[test]
fn validate_passes_by_default_and_fails_when_underresolved() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(&["validate", "--out", s(dir.path())]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let json: Value = serde_json::from_slice(&fs::read(dir.path().join("validation.json")).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
    let recip = json["checks"].as_array().unwrap().iter().find(|c| c["name"] == "green_reciprocity").unwrap();
    assert!(recip["measured"].as_f64().unwrap() < 1e-12);

    let bad = run(&["validate", "--config", s(&config("validate_underresolved.cfg")), "--out", s(dir.path())]);
    assert_eq!(bad.status.code(), Some(1));
    let json: Value = serde_json::from_slice(&fs::read(dir.path().join("validation.json")).unwrap()).unwrap();
    let pw = json["checks"].as_array().unwrap().iter().find(|c| c["name"] == "plane_wave_identity").unwrap();
    assert_eq!(pw["passed"], false);
}

#[test]
fn shipped_configs_parse_and_round_trip() {
    use topsens_cli::config::ExperimentConfig;
    for entry in fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        if path.file_name().unwrap().to_str().unwrap().starts_with("validate") {
            topsens_cli::config::validation_options(&text).unwrap();
            continue;
        }
        let cfg = ExperimentConfig::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(ExperimentConfig::parse(&cfg.render()).unwrap(), cfg, "{}", path.display());
    }
}
