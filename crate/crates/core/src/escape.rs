//! First passage into a target in the far chamber of a dumbbell.
//!
//! Pure reflection has to find the neck, which takes longer as the neck
//! narrows. With restarts, each jump lands in a compact `K` inside the target
//! chamber with probability `α₀ = μ(K)/κ`, and the renewal argument bounds the
//! mean passage time from any start by `S/α₀ + R₀`, where `S = sup E_x[τ₁]`
//! and `R₀` is the largest mean passage time from `K`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::exec::{chunk_count, chunk_range, Executor};
use crate::geometry::{DomainSpec, DumbbellParams, Point};
use crate::measures::RestartMeasure;
use crate::rng::{derive_seed, path_rng};
use crate::sde::{steps_for, Walker};
use crate::stats::RunningStats;
use crate::{Error, Result};

/// Censored fraction above which an estimate is not reported as valid.
pub const CENSORING_LIMIT: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Self {
        Ball { center, radius }
    }

    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        p.distance(self.center) <= self.radius
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EscapeConfig {
    /// Geometry; the neck half-width is replaced by each entry of `eps_grid`.
    pub dumbbell: DumbbellParams,
    pub target: Ball,
    /// The compact set `K` in the second chamber.
    pub core_set: Ball,
    pub measure: RestartMeasure,
    pub eps_grid: Vec<f64>,
    pub n_paths: usize,
    pub h: f64,
    /// Censoring horizon `T_max`.
    pub horizon: f64,
}

impl EscapeConfig {
    /// Unit chambers at `(±2, 0)`, target `B((2, 0), 0.2)`, `K = B((2, 0), 0.5)`,
    /// `h = 2.5e−4`, `T_max = 500`.
    pub fn standard(measure: RestartMeasure) -> Self {
        let far = Point::new(2.0, 0.0);
        EscapeConfig {
            dumbbell: DumbbellParams::standard(0.4),
            target: Ball::new(far, 0.2),
            core_set: Ball::new(far, 0.5),
            measure,
            eps_grid: alloc::vec![0.4, 0.2, 0.1, 0.05],
            n_paths: 4000,
            h: 2.5e-4,
            horizon: 500.0,
        }
    }

    fn far_chamber(&self) -> Ball {
        Ball::new(self.dumbbell.chamber_centers[1], self.dumbbell.chamber_radius)
    }

    fn strictly_inside_far(&self, b: &Ball) -> bool {
        let c = self.far_chamber();
        b.center.distance(c.center) + b.radius < c.radius
    }

    pub fn domain(&self, eps: f64) -> Result<DomainSpec> {
        DomainSpec::dumbbell(self.dumbbell.with_neck_halfwidth(eps))
    }

    /// `μ(K)/κ`.
    pub fn alpha0(&self) -> Result<f64> {
        let kappa = self.measure.total_mass();
        if kappa <= 0.0 {
            return Ok(0.0);
        }
        let k = self.core_set;
        Ok(self.measure.integrate(|p| if k.contains(p) { 1.0 } else { 0.0 })? / kappa)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.strictly_inside_far(&self.target) || !(self.target.radius > 0.0) {
            return Err(Error::invalid("target", "must be a ball strictly inside the second chamber"));
        }
        if !self.strictly_inside_far(&self.core_set) || !(self.core_set.radius >= 0.0) {
            return Err(Error::invalid("core_set", "must be a closed ball strictly inside the second chamber"));
        }
        if self.eps_grid.is_empty() {
            return Err(Error::invalid("eps_grid", "is empty"));
        }
        for &eps in &self.eps_grid {
            let domain = self.domain(eps)?;
            self.measure.check_support(&domain)?;
        }
        if self.n_paths == 0 {
            return Err(Error::invalid("n_paths", "must be positive"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::invalid("horizon", "must be finite and positive"));
        }
        if !(self.h > 0.0) || self.h > self.horizon {
            return Err(Error::StepTooLarge { h: self.h, horizon: self.horizon });
        }
        Ok(())
    }

    fn validate_with_restarts(&self) -> Result<f64> {
        self.validate()?;
        let a = self.alpha0()?;
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::invalid("measure", alloc::format!("needs α₀ = μ(K)/κ in (0, 1], got {a}")));
        }
        Ok(a)
    }
}

/// Start points from a 5×5 grid over both chambers and the neck, keeping
/// those at least `0.02` inside the domain and outside the target.
pub fn start_grid(cfg: &EscapeConfig, eps: f64) -> Result<Vec<Point>> {
    let domain = cfg.domain(eps)?;
    let [c1, c2] = cfg.dumbbell.chamber_centers;
    let r = cfg.dumbbell.chamber_radius;
    let axis = (c2 - c1).unit();
    let normal = axis.perp();
    let mut out = Vec::new();
    for i in 0..5 {
        let s = i as f64 / 4.0;
        let along = c1 - axis * (0.6 * r) + (c2 - c1 + axis * (1.2 * r)) * s;
        for j in 0..5 {
            let p = along + normal * (0.6 * r * (j as f64 / 2.0 - 1.0));
            if domain.signed_distance(p) < -0.02 && !cfg.target.contains(p) {
                out.push(p);
            }
        }
    }
    Ok(out)
}

/// The centre of `K` and eight points on its boundary circle.
pub fn core_points(cfg: &EscapeConfig) -> Vec<Point> {
    let k = cfg.core_set;
    let mut out = alloc::vec![k.center];
    for i in 0..8 {
        let t = i as f64 * core::f64::consts::FRAC_PI_4;
        out.push(k.center + Point::new(t.cos(), t.sin()) * k.radius);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dynamics {
    Reflected,
    Jump,
}

impl Dynamics {
    pub fn name(self) -> &'static str {
        match self {
            Dynamics::Reflected => "reflected",
            Dynamics::Jump => "jump",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowStatus {
    /// No path was censored.
    Exact,
    /// Some paths were censored; the mean is a lower bound.
    LowerBound,
    /// More than 20% censored.
    CensoringDominates,
}

/// Mean of `min(T, T_max)` over an ensemble.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PassageEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub censored: usize,
    pub n_paths: usize,
    pub horizon: f64,
}

impl PassageEstimate {
    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.n_paths as f64
    }

    pub fn status(&self) -> RowStatus {
        if self.censored == 0 {
            RowStatus::Exact
        } else if self.censored_fraction() > CENSORING_LIMIT {
            RowStatus::CensoringDominates
        } else {
            RowStatus::LowerBound
        }
    }

    /// The gate on censoring.
    pub fn check(&self) -> Result<()> {
        match self.status() {
            RowStatus::CensoringDominates => {
                Err(Error::CensoringDominates { censored: self.censored, total: self.n_paths, horizon: self.horizon })
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MfptRow {
    pub eps: f64,
    pub x0: Point,
    pub dynamics: Dynamics,
    pub estimate: PassageEstimate,
}

impl MfptRow {
    pub fn status(&self) -> RowStatus {
        self.estimate.status()
    }
}

/// What stops a path.
#[derive(Clone, Copy, Debug)]
enum Stop {
    Target(Ball),
    FirstJump,
}

#[allow(clippy::too_many_arguments)]
fn ensemble<E: Executor>(
    domain: &DomainSpec,
    measure: &RestartMeasure,
    x0: Point,
    stop: Stop,
    n_paths: usize,
    h: f64,
    horizon: f64,
    seed: u64,
    exec: &E,
) -> Result<PassageEstimate> {
    let max_steps = steps_for(horizon, h);
    let chunks = exec.map(chunk_count(n_paths), |c| -> Result<(RunningStats, usize)> {
        let mut stats = RunningStats::new();
        let mut censored = 0;
        for p in chunk_range(c, n_paths) {
            let mut rng = path_rng(seed, p as u64);
            let mut walker = Walker::new(domain, measure, x0, h, &mut rng)?;
            let mut time = None;
            if let Stop::Target(b) = stop {
                if b.contains(x0) {
                    time = Some(0.0);
                }
            }
            let mut i = 0;
            while time.is_none() && i < max_steps {
                i += 1;
                let out = walker.step(&mut rng)?;
                let done = match stop {
                    Stop::Target(b) => b.contains(walker.position),
                    Stop::FirstJump => out.jumped,
                };
                if done {
                    time = Some(i as f64 * h);
                }
            }
            match time {
                Some(t) => stats.push(t),
                None => {
                    censored += 1;
                    stats.push(horizon);
                }
            }
        }
        Ok((stats, censored))
    });
    let mut stats = RunningStats::new();
    let mut censored = 0;
    for c in chunks {
        let (s, k) = c?;
        stats.merge(&s);
        censored += k;
    }
    Ok(PassageEstimate { mean: stats.mean, std_error: stats.std_error(), censored, n_paths, horizon })
}

fn mfpt_table<E: Executor>(
    cfg: &EscapeConfig,
    x0_list: &[Point],
    seed: u64,
    dynamics: Dynamics,
    exec: &E,
) -> Result<Vec<MfptRow>> {
    let zero = RestartMeasure::zero();
    let measure = match dynamics {
        Dynamics::Reflected => &zero,
        Dynamics::Jump => &cfg.measure,
    };
    let mut rows = Vec::new();
    for (ie, &eps) in cfg.eps_grid.iter().enumerate() {
        let domain = cfg.domain(eps)?;
        for (ix, &x0) in x0_list.iter().enumerate() {
            if !domain.contains(x0) {
                return Err(Error::OutOfDomain { x: x0.x, y: x0.y });
            }
            let s = derive_seed(seed, &[dynamics as u64, ie as u64, ix as u64]);
            let estimate = ensemble(&domain, measure, x0, Stop::Target(cfg.target), cfg.n_paths, cfg.h, cfg.horizon, s, exec)?;
            rows.push(MfptRow { eps, x0, dynamics, estimate });
        }
    }
    Ok(rows)
}

/// Mean passage time into the target for reflected Brownian motion.
pub fn mfpt_reflected<E: Executor>(cfg: &EscapeConfig, x0_list: &[Point], seed: u64, exec: &E) -> Result<Vec<MfptRow>> {
    cfg.validate()?;
    mfpt_table(cfg, x0_list, seed, Dynamics::Reflected, exec)
}

/// Mean passage time into the target with restarts from `μ`.
pub fn mfpt_jump<E: Executor>(cfg: &EscapeConfig, x0_list: &[Point], seed: u64, exec: &E) -> Result<Vec<MfptRow>> {
    cfg.validate_with_restarts()?;
    mfpt_table(cfg, x0_list, seed, Dynamics::Jump, exec)
}

/// `Ŝ`, `R̂₀` and `Ŝ/α₀ + R̂₀` at one neck width.
#[derive(Clone, Debug, PartialEq)]
pub struct RenewalBound {
    pub eps: f64,
    pub alpha0: f64,
    pub s_hat: PassageEstimate,
    pub s_argmax: Point,
    pub r0_hat: PassageEstimate,
    pub r0_argmax: Point,
    pub bound: f64,
    pub bound_std_error: f64,
    /// `E_x[τ₁]` over the start grid.
    pub first_jump: Vec<(Point, PassageEstimate)>,
}

fn argmax(v: &[(Point, PassageEstimate)]) -> (Point, PassageEstimate) {
    let mut best = v[0];
    for &e in &v[1..] {
        if e.1.mean > best.1.mean {
            best = e;
        }
    }
    best
}

pub fn renewal_bound<E: Executor>(cfg: &EscapeConfig, eps: f64, seed: u64, exec: &E) -> Result<RenewalBound> {
    let alpha0 = cfg.validate_with_restarts()?;
    let domain = cfg.domain(eps)?;
    let mut first_jump = Vec::new();
    for (ix, x0) in start_grid(cfg, eps)?.into_iter().enumerate() {
        let s = derive_seed(seed, &[7, eps.to_bits(), ix as u64]);
        let e = ensemble(&domain, &cfg.measure, x0, Stop::FirstJump, cfg.n_paths, cfg.h, cfg.horizon, s, exec)?;
        e.check()?;
        first_jump.push((x0, e));
    }
    let mut from_core = Vec::new();
    for (ix, x0) in core_points(cfg).into_iter().enumerate() {
        let s = derive_seed(seed, &[8, eps.to_bits(), ix as u64]);
        let e = ensemble(&domain, &cfg.measure, x0, Stop::Target(cfg.target), cfg.n_paths, cfg.h, cfg.horizon, s, exec)?;
        e.check()?;
        from_core.push((x0, e));
    }
    let (s_argmax, s_hat) = argmax(&first_jump);
    let (r0_argmax, r0_hat) = argmax(&from_core);
    let bound = s_hat.mean / alpha0 + r0_hat.mean;
    let bound_std_error = (s_hat.std_error / alpha0).hypot(r0_hat.std_error);
    Ok(RenewalBound { eps, alpha0, s_hat, s_argmax, r0_hat, r0_argmax, bound, bound_std_error, first_jump })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;

    fn quick(measure: RestartMeasure) -> EscapeConfig {
        EscapeConfig { n_paths: 64, h: 1e-3, horizon: 50.0, eps_grid: alloc::vec![0.4], ..EscapeConfig::standard(measure) }
    }

    fn centre_restart() -> RestartMeasure {
        RestartMeasure::point_mass(Point::new(2.0, 0.0), 1.0).unwrap()
    }

    #[test]
    fn alpha0_counts_mass_in_k() {
        assert_eq!(quick(centre_restart()).alpha0().unwrap(), 1.0);
        let split = RestartMeasure::atoms(alloc::vec![(Point::new(-2.0, 0.0), 0.5), (Point::new(2.0, 0.0), 0.5)]).unwrap();
        assert_eq!(quick(split).alpha0().unwrap(), 0.5);
    }

    #[test]
    fn validation() {
        let mut cfg = quick(centre_restart());
        assert!(cfg.validate().is_ok());
        cfg.target = Ball::new(Point::new(2.9, 0.0), 0.2);
        assert!(cfg.validate().is_err());
        let mut cfg = quick(RestartMeasure::point_mass(Point::new(-2.0, 0.0), 1.0).unwrap());
        assert!(cfg.validate().is_ok());
        assert!(cfg.validate_with_restarts().is_err());
        cfg.horizon = f64::INFINITY;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn start_grid_is_interior() {
        let cfg = quick(centre_restart());
        for eps in [0.4, 0.05] {
            let d = cfg.domain(eps).unwrap();
            let g = start_grid(&cfg, eps).unwrap();
            assert!(g.len() >= 15, "{}", g.len());
            assert!(g.iter().all(|&p| d.signed_distance(p) < -0.02));
        }
        assert_eq!(core_points(&cfg).len(), 9);
    }

    #[test]
    fn start_in_target_is_zero() {
        let cfg = quick(centre_restart());
        let rows = mfpt_reflected(&cfg, &[Point::new(2.05, 0.0)], 1, &Sequential).unwrap();
        assert_eq!(rows[0].estimate.mean, 0.0);
        assert_eq!(rows[0].status(), RowStatus::Exact);
    }

    #[test]
    fn censoring_is_flagged() {
        let mut cfg = quick(centre_restart());
        cfg.horizon = 0.05;
        let rows = mfpt_reflected(&cfg, &[Point::new(-2.0, 0.0)], 1, &Sequential).unwrap();
        assert_eq!(rows[0].status(), RowStatus::CensoringDominates);
        assert!(matches!(rows[0].estimate.check(), Err(Error::CensoringDominates { .. })));
    }

    #[test]
    fn restarts_shorten_passage() {
        let cfg = quick(centre_restart());
        let x0 = [Point::new(-2.0, 0.0)];
        let r = mfpt_reflected(&cfg, &x0, 3, &Sequential).unwrap()[0].estimate;
        let j = mfpt_jump(&cfg, &x0, 3, &Sequential).unwrap()[0].estimate;
        assert!(j.mean < r.mean, "{} vs {}", j.mean, r.mean);
    }
}
