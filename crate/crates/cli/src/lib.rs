//! Command-line runner for topological-sensitivity imaging experiments.

pub mod commands;
pub mod config;
pub mod formats;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use commands::CliError;
use config::{validation_options, ExperimentConfig};
use topsens::validate::ValidationOptions;

#[derive(Debug, Parser)]
#[command(name = "topsens", version, about = "Topological-sensitivity imaging of small EM inclusions")]
pub struct Cli {
    /// Worker threads for map sweeps and Monte Carlo trials (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overrides noise.seed and stats.seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize far-field data.
    Simulate(Common),
    /// Image far-field data into a CSV map and optional PGM.
    Image {
        #[command(flatten)]
        common: Common,
        /// Data file; defaults to `<out>/<output.data>`.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Monte Carlo statistics against closed forms.
    Stats(Common),
    /// Run the numerical validation suite.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::parse(&read_text(&common.config)?).map_err(|e| {
        CliError::Config(match e {
            config::ConfigError::Syntax { line, msg } => config::ConfigError::Syntax {
                line,
                msg: format!("{}: {msg}", common.config.display()),
            },
            other => other,
        })
    })?;
    if let Some(s) = common.seed {
        cfg.override_seed(s);
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Simulate(common) => {
            let cfg = load(&common)?;
            let path = commands::simulate(&cfg, &common.out)?;
            println!("wrote {}", path.display());
            println!("config_fingerprint={}", cfg.fingerprint());
            Ok(0)
        }
        Command::Image { common, data } => {
            let cfg = load(&common)?;
            let o = commands::image(&cfg, data.as_deref(), &common.out)?;
            for (k, v) in &o.summary {
                println!("{k}={v}");
            }
            println!("wrote {}", o.map_path.display());
            if let Some(p) = &o.image_path {
                println!("wrote {}", p.display());
            }
            Ok(0)
        }
        Command::Stats(common) => {
            let cfg = load(&common)?;
            let (o, path) = commands::stats(&cfg, &common.out)?;
            for r in &o.reports {
                println!(
                    "{:<20} estimate={:.6e} analytic={:.6e} rel_error={:.4} ci95={:.3e} trials={}",
                    r.name, r.estimate, r.analytic, r.rel_error, r.ci95_halfwidth, r.trials
                );
            }
            if let (Some(r), Some(e)) = (o.snr_ratio, o.snr_ratio_expected) {
                println!("snr_ratio={r:.4} expected={e:.4}");
            }
            println!("wrote {}", path.display());
            Ok(0)
        }
        Command::Validate { config, out } => {
            let (opts, name) = match &config {
                Some(p) => {
                    let text = read_text(p)?;
                    let name = ExperimentConfig::parse(&text).map(|c| c.output.validation).unwrap_or_else(|_| "validation.json".into());
                    (validation_options(&text)?, name)
                }
                None => (ValidationOptions::default(), "validation.json".to_string()),
            };
            let (o, path) = commands::validate(&opts, &out, &name)?;
            for c in &o.checks {
                let status = match (c.passed, c.gating) {
                    (true, _) => "pass",
                    (false, true) => "FAIL",
                    (false, false) => "info",
                };
                println!("{status} {:<36} {:.3e} (tol {:.1e})", c.name, c.measured, c.tolerance);
            }
            println!("wrote {}", path.display());
            Ok(if o.passed { 0 } else { 1 })
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not configure thread pool: {e}");
        }
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
