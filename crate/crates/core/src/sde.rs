//! Path simulation and Monte Carlo estimators.
//!
//! A path is reflected Brownian motion advanced by Gaussian increments. Near
//! the boundary the local time increment over a step is the overshoot of the
//! Brownian bridge maximum of the outward normal component past the current
//! distance to the wall, and the endpoint is pushed back by that amount; any
//! residue left by curvature is projected onto the closure and added to `L`.
//! For a flat wall this reproduces the Skorokhod map exactly.
//!
//! Independent `Exp(κ)` increments build the thresholds `ℓ₁ < ℓ₂ < …`; at the
//! end of the first step where `L` would pass `ℓ_k` the walker is moved to a
//! fresh point drawn from `μ/κ` and `L` is set to `ℓ_k`. At most one jump
//! happens per step.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::exec::{chunk_count, chunk_range, Executor};
use crate::geometry::{DomainSpec, Point};
use crate::measures::RestartMeasure;
use crate::rng::{self, path_rng};
use crate::spectral::CtSolution;
use crate::stats::RunningStats;
use crate::{Error, Result};

/// Retries with a perturbed proposal before an ambiguous projection is
/// reported.
const PROJECTION_RETRIES: usize = 3;

/// Distance from the wall, in units of `√h`, beyond which the bridge
/// correction is skipped.
const BRIDGE_REACH: f64 = 8.0;

/// Number of steps of size `h` needed to reach `t`.
pub fn steps_for(t: f64, h: f64) -> usize {
    (t / h - 1e-9).ceil().max(0.0) as usize
}

/// One reflected step: returns the new position and the local time
/// increment.
pub fn step_reflected<R: Rng + ?Sized>(domain: &DomainSpec, position: Point, h: f64, rng: &mut R) -> Result<(Point, f64)> {
    let sqrt_h = h.sqrt();
    let w = increment(domain, sqrt_h, rng);
    let (sd, normal) = domain.boundary_frame(position);
    bridge_step(domain, position, w, -sd, normal, sqrt_h, rng)
}

#[inline]
fn increment<R: Rng + ?Sized>(domain: &DomainSpec, sqrt_h: f64, rng: &mut R) -> Point {
    let dx = sqrt_h * rng::normal(rng);
    let dy = if domain.dimension() == 2 { sqrt_h * rng::normal(rng) } else { 0.0 };
    Point::new(dx, dy)
}

#[inline]
fn bridge_step<R: Rng + ?Sized>(
    domain: &DomainSpec,
    position: Point,
    w: Point,
    depth: f64,
    outward: Point,
    sqrt_h: f64,
    rng: &mut R,
) -> Result<(Point, f64)> {
    let mut dl = 0.0;
    let mut proposal = position + w;
    if depth < BRIDGE_REACH * sqrt_h {
        let wn = w.dot(outward);
        let u = 1.0 - rng::uniform(rng);
        let peak = 0.5 * (wn + (wn * wn - 2.0 * sqrt_h * sqrt_h * u.ln()).sqrt());
        dl = (peak - depth.max(0.0)).max(0.0);
        proposal += outward * -dl;
    }
    let (q, extra) = project(domain, proposal, sqrt_h, rng)?;
    Ok((q, dl + extra))
}

#[inline]
fn project<R: Rng + ?Sized>(domain: &DomainSpec, mut proposal: Point, sqrt_h: f64, rng: &mut R) -> Result<(Point, f64)> {
    let mut attempt = 0;
    loop {
        match domain.project_to_closure(proposal) {
            Err(Error::AmbiguousProjection { .. }) if attempt < PROJECTION_RETRIES => {
                attempt += 1;
                let jitter = 1e-9 * sqrt_h;
                proposal += Point::new(jitter * rng::normal(rng), jitter * rng::normal(rng));
            }
            other => return other,
        }
    }
}

/// Local-time levels at which the walker restarts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpClock {
    rate: f64,
    level: f64,
}

impl JumpClock {
    pub fn new<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Self {
        JumpClock { rate, level: rng::exponential(rng, rate) }
    }

    /// The next level `ℓ_k`; `+∞` when `κ = 0`.
    pub fn threshold(&self) -> f64 {
        self.level
    }

    /// Moves to `ℓ_{k+1}` and returns the increment.
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let inc = rng::exponential(rng, self.rate);
        self.level += inc;
        inc
    }
}

/// What happened during one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub local_time_increment: f64,
    pub jumped: bool,
}

/// A single walker advanced one step at a time.
#[derive(Clone, Debug)]
pub struct Walker<'a> {
    domain: &'a DomainSpec,
    measure: &'a RestartMeasure,
    sqrt_h: f64,
    /// Lower bound on the distance from `position` to the boundary.
    clearance: f64,
    pub position: Point,
    pub local_time: f64,
    pub jumps: usize,
    clock: JumpClock,
}

impl<'a> Walker<'a> {
    pub fn new<R: Rng + ?Sized>(
        domain: &'a DomainSpec,
        measure: &'a RestartMeasure,
        x0: Point,
        h: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid("h", "must be positive"));
        }
        if !domain.contains(x0) {
            return Err(Error::OutOfDomain { x: x0.x, y: x0.y });
        }
        Ok(Walker {
            domain,
            measure,
            sqrt_h: h.sqrt(),
            clearance: 0.0,
            position: x0,
            local_time: 0.0,
            jumps: 0,
            clock: JumpClock::new(measure.total_mass(), rng),
        })
    }

    pub fn threshold(&self) -> f64 {
        self.clock.threshold()
    }

    #[inline]
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<StepOutcome> {
        let w = increment(self.domain, self.sqrt_h, rng);
        let reach = BRIDGE_REACH * self.sqrt_h;
        let dl = if self.clearance >= reach + w.norm() {
            self.position += w;
            self.clearance -= w.norm();
            0.0
        } else {
            let (sd, outward) = self.domain.boundary_frame(self.position);
            let (p, dl) = bridge_step(self.domain, self.position, w, -sd, outward, self.sqrt_h, rng)?;
            self.clearance = if -sd >= reach { -sd - w.norm() } else { 0.0 };
            self.position = p;
            dl
        };
        let mut dl = dl;
        let level = self.clock.threshold();
        let jumped = self.local_time + dl >= level;
        if jumped {
            // The path leaves the wall when L reaches the level.
            dl = level - self.local_time;
            self.position = self.measure.sample(rng)?;
            self.clearance = 0.0;
            self.clock.advance(rng);
            self.jumps += 1;
        }
        self.local_time += dl;
        Ok(StepOutcome { local_time_increment: dl, jumped })
    }
}

/// One simulated trajectory on the uniform grid `t_i = i·h`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathRecord {
    pub h: f64,
    pub positions: Vec<Point>,
    pub local_time: Vec<f64>,
    /// Step indices at whose end a jump happened.
    pub jump_steps: Vec<usize>,
    pub restart_points: Vec<Point>,
    /// The thresholds `ℓ_k` that triggered each jump.
    pub thresholds: Vec<f64>,
}

impl PathRecord {
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn jump_times(&self) -> Vec<f64> {
        self.jump_steps.iter().map(|&i| self.time(i)).collect()
    }

    /// `N_{L_T}`.
    pub fn jump_count(&self) -> usize {
        self.jump_steps.len()
    }

    /// Local time accumulated between consecutive jumps (the first one is
    /// measured from zero).
    pub fn interjump_local_times(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.jump_steps
            .iter()
            .map(|&i| {
                let l = self.local_time[i];
                let d = l - prev;
                prev = l;
                d
            })
            .collect()
    }

    pub fn final_local_time(&self) -> f64 {
        self.local_time.last().copied().unwrap_or(0.0)
    }
}

pub fn simulate_path<R: Rng + ?Sized>(
    domain: &DomainSpec,
    measure: &RestartMeasure,
    x0: Point,
    t_end: f64,
    h: f64,
    rng: &mut R,
) -> Result<PathRecord> {
    if h > t_end {
        return Err(Error::StepTooLarge { h, horizon: t_end });
    }
    let mut walker = Walker::new(domain, measure, x0, h, rng)?;
    let n = steps_for(t_end, h);
    let mut record = PathRecord {
        h,
        positions: Vec::with_capacity(n + 1),
        local_time: Vec::with_capacity(n + 1),
        jump_steps: Vec::new(),
        restart_points: Vec::new(),
        thresholds: Vec::new(),
    };
    record.positions.push(x0);
    record.local_time.push(0.0);
    for i in 1..=n {
        let level = walker.threshold();
        let out = walker.step(rng)?;
        if out.jumped {
            record.jump_steps.push(i);
            record.restart_points.push(walker.position);
            record.thresholds.push(level);
        }
        record.positions.push(walker.position);
        record.local_time.push(walker.local_time);
    }
    Ok(record)
}

/// Path count, step and seed of a Monte Carlo run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarlo {
    pub n_paths: usize,
    pub h: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorResult {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl EstimatorResult {
    pub fn from_stats(stats: &RunningStats, seed: u64) -> Self {
        EstimatorResult { mean: stats.mean, std_error: stats.std_error(), n_paths: stats.count as usize, seed }
    }
}

fn check_times(times: &[f64], h: f64) -> Result<Vec<usize>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("h", "must be positive"));
    }
    let mut idx = Vec::with_capacity(times.len());
    for &t in times {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::invalid("t", "times must be finite and nonnegative"));
        }
        if t > 0.0 && h > t {
            return Err(Error::StepTooLarge { h, horizon: t });
        }
        idx.push((t / h).round() as usize);
    }
    Ok(idx)
}

/// Runs `per_chunk` over every chunk of paths and folds the per-time stats in
/// chunk order.
fn run_chunks<E, F>(exec: &E, mc: &MonteCarlo, n_outputs: usize, per_chunk: F) -> Result<Vec<EstimatorResult>>
where
    E: Executor,
    F: Fn(core::ops::Range<usize>) -> Result<Vec<RunningStats>> + Sync + Send,
{
    if mc.n_paths == 0 {
        return Err(Error::invalid("n_paths", "must be positive"));
    }
    let parts = exec.map(chunk_count(mc.n_paths), |c| per_chunk(chunk_range(c, mc.n_paths)));
    let mut total = vec![RunningStats::new(); n_outputs];
    for part in parts {
        for (acc, s) in total.iter_mut().zip(part?.iter()) {
            acc.merge(s);
        }
    }
    Ok(total.iter().map(|s| EstimatorResult::from_stats(s, mc.seed)).collect())
}

/// `E_x[f(X_t)]` for each `t` in `times`, one path serving all times.
pub fn semigroup_estimates<F, E>(
    f: F,
    domain: &DomainSpec,
    measure: &RestartMeasure,
    x: Point,
    times: &[f64],
    mc: &MonteCarlo,
    exec: &E,
) -> Result<Vec<EstimatorResult>>
where
    F: Fn(Point) -> f64 + Sync + Send,
    E: Executor,
{
    let idx = check_times(times, mc.h)?;
    let last = idx.iter().copied().max().unwrap_or(0);
    run_chunks(exec, mc, times.len(), |range| {
        let mut stats = vec![RunningStats::new(); times.len()];
        for path in range {
            let mut rng = path_rng(mc.seed, path as u64);
            let mut walker = Walker::new(domain, measure, x, mc.h, &mut rng)?;
            let mut values = vec![0.0; times.len()];
            for step in 0..=last {
                if step > 0 {
                    walker.step(&mut rng)?;
                }
                for (k, &i) in idx.iter().enumerate() {
                    if i == step {
                        values[k] = f(walker.position);
                    }
                }
            }
            for (s, v) in stats.iter_mut().zip(values) {
                s.push(v);
            }
        }
        Ok(stats)
    })
}

pub fn semigroup_estimate<F, E>(
    f: F,
    domain: &DomainSpec,
    measure: &RestartMeasure,
    x: Point,
    t: f64,
    mc: &MonteCarlo,
    exec: &E,
) -> Result<EstimatorResult>
where
    F: Fn(Point) -> f64 + Sync + Send,
    E: Executor,
{
    Ok(semigroup_estimates(f, domain, measure, x, &[t], mc, exec)?[0])
}

/// Pathwise elastic representation
/// `E_x[e^{−κL_t} f(B⁺_t)] + E_x[∫₀ᵗ e^{−κL_s} c(t − s) dL_s]`
/// over reflected Brownian motion `B⁺` without jumps.
///
/// On a step with increment `δL` the integral gains
/// `c(t − s_mid) · e^{−κL} · (1 − e^{−κδL})/κ`, the exact integral of the
/// damping factor across the step.
pub fn elastic_functional<F, E>(
    f: F,
    domain: &DomainSpec,
    kappa: f64,
    c: &CtSolution,
    x: Point,
    times: &[f64],
    mc: &MonteCarlo,
    exec: &E,
) -> Result<Vec<EstimatorResult>>
where
    F: Fn(Point) -> f64 + Sync + Send,
    E: Executor,
{
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::invalid("kappa", "must be nonnegative"));
    }
    if c.dt() > 1e3 * mc.h {
        return Err(Error::GridTooCoarse { spacing: c.dt(), h: mc.h });
    }
    let idx = check_times(times, mc.h)?;
    for &t in times {
        if t > c.horizon() * (1.0 + 1e-12) {
            return Err(Error::HorizonExceeded { t, horizon: c.horizon() });
        }
    }
    let last = idx.iter().copied().max().unwrap_or(0);
    let reflected = RestartMeasure::zero();
    let h = mc.h;
    run_chunks(exec, mc, times.len(), |range| {
        let mut stats = vec![RunningStats::new(); times.len()];
        let mut sums = vec![0.0; times.len()];
        let mut values = vec![0.0; times.len()];
        for path in range {
            let mut rng = path_rng(mc.seed, path as u64);
            let mut walker = Walker::new(domain, &reflected, x, h, &mut rng)?;
            sums.iter_mut().for_each(|s| *s = 0.0);
            for step in 0..=last {
                if step > 0 {
                    let before = walker.local_time;
                    let out = walker.step(&mut rng)?;
                    let dl = out.local_time_increment;
                    if dl > 0.0 {
                        let weight = if kappa > 0.0 {
                            (-kappa * before).exp() * -(-kappa * dl).exp_m1() / kappa
                        } else {
                            dl
                        };
                        let s_mid = (step as f64 - 0.5) * h;
                        for (k, &i) in idx.iter().enumerate() {
                            if step <= i {
                                sums[k] += weight * c.value_at((i as f64 * h - s_mid).max(0.0));
                            }
                        }
                    }
                }
                for (k, &i) in idx.iter().enumerate() {
                    if i == step {
                        values[k] = (-kappa * walker.local_time).exp() * f(walker.position) + sums[k];
                    }
                }
            }
            for (s, &v) in stats.iter_mut().zip(values.iter()) {
                s.push(v);
            }
        }
        Ok(stats)
    })
}

/// A scalar field with a gradient.
pub trait SmoothField {
    fn value(&self, p: Point) -> f64;
    fn gradient(&self, p: Point) -> Point;
}

/// A [`SmoothField`] from a value closure and a gradient closure.
pub struct FnField<V, G>(pub V, pub G);

impl<V: Fn(Point) -> f64, G: Fn(Point) -> Point> SmoothField for FnField<V, G> {
    fn value(&self, p: Point) -> f64 {
        (self.0)(p)
    }
    fn gradient(&self, p: Point) -> Point {
        (self.1)(p)
    }
}

/// `∂ₙf(q) + ∫ (f(y) − f(q)) μ(dy)` at a boundary point `q`.
pub fn boundary_condition_residual<F: SmoothField>(
    f: &F,
    domain: &DomainSpec,
    measure: &RestartMeasure,
    q: Point,
) -> Result<f64> {
    let n = domain.inward_normal(q)?;
    let fq = f.value(q);
    let nonlocal = measure.integrate(|y| f.value(y) - fq)?;
    Ok(f.gradient(q).dot(n) + nonlocal)
}

/// Long-run occupation settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Occupation {
    pub t_end: f64,
    pub burn_in: f64,
    pub bins: usize,
    pub n_paths: usize,
    pub h: f64,
    pub seed: u64,
    /// Record every `stride`-th step after burn-in.
    pub stride: usize,
}

/// Occupation counts on equal bins of an interval.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn edges(&self) -> Vec<f64> {
        let n = self.counts.len();
        (0..=n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / n as f64).collect()
    }

    /// Bin probabilities (sum to one).
    pub fn masses(&self) -> Vec<f64> {
        let total = self.total() as f64;
        self.counts.iter().map(|&c| c as f64 / total).collect()
    }

    /// Density estimate per bin.
    pub fn density(&self) -> Vec<f64> {
        let w = (self.hi - self.lo) / self.counts.len() as f64;
        self.masses().into_iter().map(|m| m / w).collect()
    }
}

/// Histogram of positions after burn-in, pooled over independent paths.
pub fn occupation_histogram<E: Executor>(
    domain: &DomainSpec,
    measure: &RestartMeasure,
    x0: Point,
    cfg: &Occupation,
    exec: &E,
) -> Result<Histogram> {
    let DomainSpec::Interval { a, b } = *domain else {
        return Err(Error::UnsupportedDomain(alloc::string::String::from(
            "occupation histograms are one-dimensional",
        )));
    };
    if !(cfg.t_end > cfg.burn_in && cfg.burn_in >= 0.0) {
        return Err(Error::invalid("burn_in", "must lie in [0, T)"));
    }
    if cfg.h > cfg.t_end {
        return Err(Error::StepTooLarge { h: cfg.h, horizon: cfg.t_end });
    }
    if cfg.bins == 0 || cfg.n_paths == 0 || cfg.stride == 0 {
        return Err(Error::invalid("bins", "bins, paths and stride must be positive"));
    }
    let n = steps_for(cfg.t_end, cfg.h);
    let start = steps_for(cfg.burn_in, cfg.h);
    let scale = cfg.bins as f64 / (b - a);
    let parts = exec.map(chunk_count(cfg.n_paths), |c| -> Result<Vec<u64>> {
        let mut counts = vec![0u64; cfg.bins];
        for path in chunk_range(c, cfg.n_paths) {
            let mut rng = path_rng(cfg.seed, path as u64);
            let mut walker = Walker::new(domain, measure, x0, cfg.h, &mut rng)?;
            for step in 1..=n {
                walker.step(&mut rng)?;
                if step >= start && (step - start) % cfg.stride == 0 {
                    let bin = (((walker.position.x - a) * scale) as usize).min(cfg.bins - 1);
                    counts[bin] += 1;
                }
            }
        }
        Ok(counts)
    });
    let mut counts = vec![0u64; cfg.bins];
    for part in parts {
        for (acc, c) in counts.iter_mut().zip(part?) {
            *acc += c;
        }
    }
    Ok(Histogram { lo: a, hi: b, counts })
}
