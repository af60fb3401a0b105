//! The restarted process on the half-line and its inverse local time.
//!
//! With restarts drawn from `μ` on `(0, ∞)`, the inverse local time at zero is
//! a subordinator. Reflected Brownian motion alone contributes `√(2λ)` to its
//! exponent; every restart to `z` adds an excursion whose return time has
//! transform `e^{−z√(2λ)}`, so
//!
//! ```text
//! Ψ(λ) = √(2λ) + ∫(1 − e^{−z√(2λ)}) μ(dz) = Φ(√(2λ)).
//! ```
//!
//! The simulated exponent at `κ = 0` fixes the constant in front of `√(2λ)`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;

use crate::exec::{chunk_count, chunk_range, Executor};
use crate::geometry::{DomainSpec, Point};
use crate::measures::{LaplaceExponent, RestartMeasure};
use crate::rng::{path_rng, PathRng};
use crate::sde::{steps_for, Walker};
use crate::stats::RunningStats;
use crate::{Error, Result};

/// Minimum fraction of paths that must reach the level.
pub const REACH_FRACTION: f64 = 0.95;

/// A path of the restarted process on `[0, ∞)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfLinePath {
    pub h: f64,
    pub positions: Vec<f64>,
    pub local_time: Vec<f64>,
    pub jump_times: Vec<f64>,
    pub thresholds: Vec<f64>,
}

impl HalfLinePath {
    /// `inf{t : L_t ≥ level}` on the step grid, if reached.
    pub fn passage_time(&self, level: f64) -> Option<f64> {
        self.local_time.iter().position(|&l| l >= level).map(|i| i as f64 * self.h)
    }
}

fn check_measure(measure: &RestartMeasure) -> Result<()> {
    if measure.total_mass() > 0.0 {
        LaplaceExponent::new(measure.clone())?;
    }
    Ok(())
}

pub fn simulate_halfline(measure: &RestartMeasure, x0: f64, horizon: f64, h: f64, seed: u64) -> Result<HalfLinePath> {
    check_measure(measure)?;
    if h > horizon {
        return Err(Error::StepTooLarge { h, horizon });
    }
    let domain = DomainSpec::HalfLine;
    let mut rng = path_rng(seed, 0);
    let mut walker = Walker::new(&domain, measure, Point::on_line(x0), h, &mut rng)?;
    let n = steps_for(horizon, h);
    let mut path = HalfLinePath {
        h,
        positions: Vec::with_capacity(n + 1),
        local_time: Vec::with_capacity(n + 1),
        jump_times: Vec::new(),
        thresholds: Vec::new(),
    };
    path.positions.push(x0);
    path.local_time.push(0.0);
    for i in 1..=n {
        let level = walker.threshold();
        let out = walker.step(&mut rng)?;
        if out.jumped {
            path.jump_times.push(i as f64 * h);
            path.thresholds.push(level);
        }
        path.positions.push(walker.position.x);
        path.local_time.push(walker.local_time);
    }
    Ok(path)
}

/// Settings for the first-passage ensemble `σ(ℓ*)` started at zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PassageConfig {
    pub level: f64,
    pub horizon: f64,
    pub h: f64,
    pub n_paths: usize,
    pub seed: u64,
}

/// `σ(level)` for each path, `None` when the horizon is reached first.
pub fn passage_times<E: Executor>(measure: &RestartMeasure, cfg: &PassageConfig, exec: &E) -> Result<Vec<Option<f64>>> {
    check_measure(measure)?;
    if !(cfg.level > 0.0 && cfg.h > 0.0 && cfg.horizon >= cfg.h) {
        return Err(Error::invalid("passage", "need level > 0 and 0 < h ≤ horizon"));
    }
    let domain = DomainSpec::HalfLine;
    let max_steps = steps_for(cfg.horizon, cfg.h);
    let chunks = exec.map(chunk_count(cfg.n_paths), |c| -> Result<Vec<Option<f64>>> {
        let mut out = Vec::new();
        for p in chunk_range(c, cfg.n_paths) {
            let mut rng = path_rng(cfg.seed, p as u64);
            let mut walker = Walker::new(&domain, measure, Point::ORIGIN, cfg.h, &mut rng)?;
            let mut hit = None;
            for i in 1..=max_steps {
                walker.step(&mut rng)?;
                if walker.local_time >= cfg.level {
                    hit = Some(i as f64 * cfg.h);
                    break;
                }
            }
            out.push(hit);
        }
        Ok(out)
    });
    let mut all = Vec::with_capacity(cfg.n_paths);
    for c in chunks {
        all.extend(c?);
    }
    Ok(all)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentEstimate {
    pub lambda: f64,
    pub psi: f64,
    /// Bootstrap standard deviation.
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentReport {
    pub level: f64,
    pub reached: usize,
    pub total: usize,
    pub estimates: Vec<ExponentEstimate>,
}

fn psi_hat(times: &[Option<f64>], idx: impl Iterator<Item = usize>, lambda: f64, level: f64) -> f64 {
    let mut s = RunningStats::new();
    for i in idx {
        s.push(times[i].map_or(0.0, |t| (-lambda * t).exp()));
    }
    -s.mean.ln() / level
}

/// `Ψ̂(λ) = −log E[e^{−λσ(ℓ*)}] / ℓ*` with percentile bootstrap intervals.
///
/// Censored paths enter with `e^{−λσ} = 0`.
pub fn inverse_local_time_exponent(
    times: &[Option<f64>],
    level: f64,
    lambdas: &[f64],
    resamples: usize,
    seed: u64,
) -> Result<ExponentReport> {
    let total = times.len();
    let reached = times.iter().filter(|t| t.is_some()).count();
    if total == 0 || (reached as f64) < REACH_FRACTION * total as f64 {
        return Err(Error::InsufficientLevel { reached, total, level });
    }
    let mut estimates = Vec::with_capacity(lambdas.len());
    for (k, &lambda) in lambdas.iter().enumerate() {
        if !(lambda > 0.0) {
            return Err(Error::invalid("lambda", "must be positive"));
        }
        let psi = psi_hat(times, 0..total, lambda, level);
        let mut rng = PathRng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let mut boots = Vec::with_capacity(resamples);
        let mut spread = RunningStats::new();
        for _ in 0..resamples {
            let idx = (0..total).map(|_| rand::Rng::random_range(&mut rng, 0..total));
            let b = psi_hat(times, idx.collect::<Vec<_>>().into_iter(), lambda, level);
            spread.push(b);
            boots.push(b);
        }
        boots.sort_by(f64::total_cmp);
        let pick = |q: f64| if boots.is_empty() { psi } else { boots[((q * resamples as f64) as usize).min(resamples - 1)] };
        estimates.push(ExponentEstimate { lambda, psi, std_error: spread.std_dev(), ci_low: pick(0.025), ci_high: pick(0.975) });
    }
    Ok(ExponentReport { level, reached, total, estimates })
}

/// The constant `a` in `Ψ̂₀(λ) ≈ a√(2λ)` measured without restarts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub constant: f64,
    pub std_error: f64,
}

impl Calibration {
    pub const EXACT: Calibration = Calibration { constant: 1.0, std_error: 0.0 };

    pub fn from_report(report: &ExponentReport) -> Result<Self> {
        if report.estimates.is_empty() {
            return Err(Error::invalid("calibration", "needs at least one λ"));
        }
        let n = report.estimates.len() as f64;
        let mut constant = 0.0;
        let mut std_error = 0.0;
        for e in &report.estimates {
            let s = (2.0 * e.lambda).sqrt();
            constant += e.psi / s / n;
            std_error += e.std_error / s / n;
        }
        Ok(Calibration { constant, std_error })
    }

    /// `a√(2λ) + ∫(1 − e^{−z√(2λ)}) μ(dz)` and its uncertainty from `a`.
    pub fn predict(&self, measure: &RestartMeasure, lambda: f64) -> Result<(f64, f64)> {
        let s = (2.0 * lambda).sqrt();
        let jumps = if measure.total_mass() > 0.0 { LaplaceExponent::new(measure.clone())?.eval(s)? - s } else { 0.0 };
        Ok((self.constant * s + jumps, self.std_error * s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;

    #[test]
    fn reflected_local_time_mean() {
        let t = 1.0;
        let mut s = RunningStats::new();
        for seed in 0..1500 {
            let p = simulate_halfline(&RestartMeasure::zero(), 0.0, t, 1e-3, seed).unwrap();
            assert!(p.jump_times.is_empty());
            s.push(*p.local_time.last().unwrap());
        }
        let exact = (2.0 * t / core::f64::consts::PI).sqrt();
        assert!((s.mean - exact).abs() < 3.0 * s.std_error(), "{} vs {exact}", s.mean);
    }

    #[test]
    fn same_seed_same_path() {
        let mu = RestartMeasure::point_mass(Point::on_line(1.0), 1.0).unwrap();
        let a = simulate_halfline(&mu, 0.2, 2.0, 1e-3, 9).unwrap();
        let b = simulate_halfline(&mu, 0.2, 2.0, 1e-3, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.positions.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn passage_time_is_first_crossing() {
        let p = simulate_halfline(&RestartMeasure::zero(), 0.0, 5.0, 1e-3, 4).unwrap();
        let level = 0.5 * p.local_time.last().unwrap();
        let t = p.passage_time(level).unwrap();
        let i = (t / p.h).round() as usize;
        assert!(p.local_time[i] >= level && p.local_time[i - 1] < level);
    }

    #[test]
    fn rejects_restart_at_the_origin() {
        let mu = RestartMeasure::point_mass(Point::on_line(0.0), 1.0).unwrap();
        assert!(simulate_halfline(&mu, 0.0, 1.0, 1e-3, 0).is_err());
    }

    #[test]
    fn insufficient_level() {
        let times = [Some(1.0), None, None, Some(2.0)];
        assert!(matches!(
            inverse_local_time_exponent(&times, 0.5, &[1.0], 10, 0),
            Err(Error::InsufficientLevel { reached: 2, total: 4, .. })
        ));
    }

    #[test]
    fn exact_stable_half_passage_times() {
        // σ(ℓ) for reflected BM is the hitting time of ℓ by BM: ℓ²/Z².
        let level = 0.5;
        let mut rng = path_rng(1, 0);
        let times: Vec<Option<f64>> =
            (0..20000).map(|_| Some(level * level / crate::rng::normal(&mut rng).powi(2))).collect();
        let r = inverse_local_time_exponent(&times, level, &[0.5, 1.0, 2.0], 200, 3).unwrap();
        for e in &r.estimates {
            let exact = (2.0 * e.lambda).sqrt();
            assert!((e.psi - exact).abs() < 3.0 * e.std_error, "{} vs {exact} ± {}", e.psi, e.std_error);
            assert!(e.ci_low <= e.psi && e.psi <= e.ci_high);
        }
        let cal = Calibration::from_report(&r).unwrap();
        assert!((cal.constant - 1.0).abs() < 0.02);
    }

    #[test]
    fn simulated_exponent_without_restarts() {
        let cfg = PassageConfig { level: 0.5, horizon: 256.0, h: 1e-3, n_paths: 1024, seed: 2 };
        let times = passage_times(&RestartMeasure::zero(), &cfg, &Sequential).unwrap();
        let r = inverse_local_time_exponent(&times, cfg.level, &[0.5, 1.0, 2.0], 200, 5).unwrap();
        assert!(r.estimates.windows(2).all(|w| w[1].psi >= w[0].psi));
        let e = r.estimates[1];
        assert!((e.psi - 2f64.sqrt()).abs() < 0.1 * 2f64.sqrt(), "{}", e.psi);
    }
}
