//! Monte Carlo harness.
//!
//! Trial `i` draws from stream `i` of the master seed, samples are gathered
//! in trial order and reduced by pairwise summation, so results do not
//! depend on how rayon schedules the trials.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::measurement::stream_rng;
use crate::error::{Error, Result};

/// Evaluates `f` once per trial, in trial order.
pub fn draw<T, F>(trials: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| f(&mut stream_rng(seed, i as u64)))
        .collect()
}

/// Pairwise sum; fixed association order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

pub fn mean(v: &[f64]) -> f64 {
    pairwise_sum(v) / v.len() as f64
}

/// Point estimate with a normal-approximation 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub ci95_halfwidth: f64,
    pub trials: usize,
}

const Z95: f64 = 1.959_963_984_540_054;

fn check_trials(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidStatistics(format!("need at least 2 trials (got {n})")));
    }
    Ok(())
}

pub fn estimate_mean(v: &[f64]) -> Result<Estimate> {
    check_trials(v.len())?;
    let n = v.len() as f64;
    let m = mean(v);
    let dev: Vec<f64> = v.iter().map(|x| (x - m).powi(2)).collect();
    let s2 = pairwise_sum(&dev) / (n - 1.0);
    Ok(Estimate { value: m, ci95_halfwidth: Z95 * (s2 / n).sqrt(), trials: v.len() })
}

/// Unbiased covariance of paired samples; the interval uses the fourth
/// moment `Var[(a-ā)(b-b̄)]/n`.
pub fn estimate_covariance(a: &[f64], b: &[f64]) -> Result<Estimate> {
    check_trials(a.len())?;
    if a.len() != b.len() {
        return Err(Error::InvalidStatistics("paired samples differ in length".into()));
    }
    let n = a.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let c = pairwise_sum(&prod) / (n - 1.0);
    let cm = pairwise_sum(&prod) / n;
    let dev: Vec<f64> = prod.iter().map(|p| (p - cm).powi(2)).collect();
    let var_p = pairwise_sum(&dev) / (n - 1.0);
    Ok(Estimate { value: c, ci95_halfwidth: Z95 * (var_p / n).sqrt(), trials: a.len() })
}

pub fn estimate_variance(v: &[f64]) -> Result<Estimate> {
    estimate_covariance(v, v)
}

/// Which moment a Monte Carlo run estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistic {
    Mean,
    Variance,
}

/// Runs `trials` independent evaluations of `sample` and estimates `statistic`.
pub fn monte_carlo<F>(statistic: Statistic, trials: usize, seed: u64, sample: F) -> Result<Estimate>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    check_trials(trials)?;
    let v = draw(trials, seed, sample);
    match statistic {
        Statistic::Mean => estimate_mean(&v),
        Statistic::Variance => estimate_variance(&v),
    }
}

/// Monte Carlo estimate next to its closed-form value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatsReport {
    pub name: String,
    pub estimate: f64,
    pub analytic: f64,
    pub trials: usize,
    pub rel_error: f64,
    pub ci95_halfwidth: f64,
}

impl StatsReport {
    /// `rel_error = |estimate - analytic| / max(|analytic|, floor)`.
    pub fn new(name: impl Into<String>, est: &Estimate, analytic: f64, floor: f64) -> Self {
        Self {
            name: name.into(),
            estimate: est.value,
            analytic,
            trials: est.trials,
            rel_error: (est.value - analytic).abs() / analytic.abs().max(floor),
            ci95_halfwidth: est.ci95_halfwidth,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn deterministic_statistic() {
        let e = monte_carlo(Statistic::Variance, 100, 1, |_| 3.5).unwrap();
        assert_eq!(e.value, 0.0);
        let m = monte_carlo(Statistic::Mean, 100, 1, |_| 3.5).unwrap();
        assert_eq!(m.value, 3.5);
        assert!(monte_carlo(Statistic::Mean, 1, 1, |_| 3.5).is_err());
    }

    #[test]
    fn gaussian_variance() {
        let e = monte_carlo(Statistic::Variance, 10_000, 9, |r| r.sample::<f64, _>(StandardNormal)).unwrap();
        assert!((e.value - 1.0).abs() < 0.05);
    }

    #[test]
    fn ci_shrinks_like_inverse_sqrt() {
        let f = |r: &mut ChaCha8Rng| r.sample::<f64, _>(StandardNormal);
        let a = monte_carlo(Statistic::Mean, 1000, 2, f).unwrap();
        let b = monte_carlo(Statistic::Mean, 4000, 2, f).unwrap();
        let ratio = a.ci95_halfwidth / b.ci95_halfwidth;
        assert!((ratio - 2.0).abs() < 0.4, "{ratio}");
    }

    #[test]
    fn reproducible_across_pools() {
        let f = |r: &mut ChaCha8Rng| r.gen::<f64>();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| monte_carlo(Statistic::Variance, 777, 4, f).unwrap());
        let b = three.install(|| monte_carlo(Statistic::Variance, 777, 4, f).unwrap());
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn report_rel_error_floor() {
        let e = Estimate { value: 1e-9, ci95_halfwidth: 0.0, trials: 10 };
        let r = StatsReport::new("x", &e, 0.0, 1e-6);
        assert!((r.rel_error - 1e-3).abs() < 1e-15);
    }
}
