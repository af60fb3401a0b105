//! Finite restart measures and the Laplace exponent built on them.

use alloc::string::ToString;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::geometry::{DomainSpec, Point};
use crate::quad::{self, Tolerance};
use crate::rng;
use crate::{Error, Result};

/// Restart points must sit at least this deep inside the domain.
pub const SUPPORT_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum MeasureKind {
    /// No mass at all; the process never restarts.
    Zero,
    PointMass { at: Point, weight: f64 },
    Atoms(Vec<(Point, f64)>),
    /// Uniform on an interval (`dimension = 1`) or a disk (`dimension = 2`).
    UniformOnBall { center: Point, radius: f64, weight: f64, dimension: usize },
    /// An isotropic Gaussian conditioned on a bounded domain.
    TruncatedGaussian { center: Point, sigma: f64, domain: DomainSpec, weight: f64 },
    /// Piecewise-constant density on a one-dimensional grid: `masses[i]` is
    /// the mass of the cell `[edges[i], edges[i + 1]]`.
    DensityOnGrid { edges: Vec<f64>, masses: Vec<f64> },
}

/// A finite measure `μ` with total mass `κ`.
#[derive(Clone, Debug, PartialEq)]
pub struct RestartMeasure {
    kind: MeasureKind,
    total_mass: f64,
    /// Mass of the untruncated Gaussian inside its domain.
    gaussian_inside: f64,
    cumulative: Vec<f64>,
}

fn weight_ok(name: &'static str, w: f64) -> Result<()> {
    if w.is_finite() && w > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, "weight must be positive and finite"))
    }
}

fn gaussian_density(p: Point, center: Point, sigma: f64, dimension: usize) -> f64 {
    let q = (p - center).norm_sq() / (sigma * sigma);
    let norm = match dimension {
        1 => (2.0 * core::f64::consts::PI).sqrt() * sigma,
        _ => 2.0 * core::f64::consts::PI * sigma * sigma,
    };
    (-0.5 * q).exp() / norm
}

impl RestartMeasure {
    pub fn new(kind: MeasureKind) -> Result<Self> {
        let mut cumulative = Vec::new();
        let mut gaussian_inside = 1.0;
        let total_mass = match &kind {
            MeasureKind::Zero => 0.0,
            MeasureKind::PointMass { weight, .. } => {
                weight_ok("weight", *weight)?;
                *weight
            }
            MeasureKind::Atoms(atoms) => {
                if atoms.is_empty() {
                    return Err(Error::invalid("atoms", "need at least one atom"));
                }
                let mut acc = 0.0;
                for &(_, w) in atoms {
                    weight_ok("weight", w)?;
                    acc += w;
                    cumulative.push(acc);
                }
                acc
            }
            MeasureKind::UniformOnBall { radius, weight, dimension, .. } => {
                weight_ok("weight", *weight)?;
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::invalid("radius", "must be positive"));
                }
                if !(1..=2).contains(dimension) {
                    return Err(Error::invalid("dimension", "must be 1 or 2"));
                }
                *weight
            }
            MeasureKind::TruncatedGaussian { center, sigma, domain, weight } => {
                weight_ok("weight", *weight)?;
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::invalid("sigma", "must be positive"));
                }
                gaussian_inside = match domain {
                    DomainSpec::Interval { a, b } => quad::integrate(
                        |x| gaussian_density(Point::on_line(x), *center, *sigma, 1),
                        *a,
                        *b,
                        Tolerance::default(),
                    )?,
                    DomainSpec::Disk { center: c, radius } => quad::integrate_disk_polar(
                        |r, t| {
                            let p = *c + Point::new(r * t.cos(), r * t.sin());
                            gaussian_density(p, *center, *sigma, 2)
                        },
                        *radius,
                        Tolerance::default(),
                    )?,
                    _ => {
                        return Err(Error::UnsupportedDomain(
                            "truncated Gaussian needs an interval or a disk".to_string(),
                        ))
                    }
                };
                if gaussian_inside < 1e-6 {
                    return Err(Error::invalid("sigma", "almost no Gaussian mass inside the domain"));
                }
                *weight
            }
            MeasureKind::DensityOnGrid { edges, masses } => {
                if edges.len() < 2 || masses.len() + 1 != edges.len() {
                    return Err(Error::invalid("edges", "need one more edge than cells"));
                }
                if edges.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::invalid("edges", "must be strictly increasing"));
                }
                let mut acc = 0.0;
                for &m in masses {
                    if !(m.is_finite() && m >= 0.0) {
                        return Err(Error::invalid("masses", "must be nonnegative"));
                    }
                    acc += m;
                    cumulative.push(acc);
                }
                if acc <= 0.0 {
                    return Err(Error::invalid("masses", "total mass must be positive"));
                }
                acc
            }
        };
        Ok(RestartMeasure { kind, total_mass, gaussian_inside, cumulative })
    }

    pub fn zero() -> Self {
        RestartMeasure { kind: MeasureKind::Zero, total_mass: 0.0, gaussian_inside: 1.0, cumulative: Vec::new() }
    }

    pub fn point_mass(at: Point, weight: f64) -> Result<Self> {
        Self::new(MeasureKind::PointMass { at, weight })
    }

    pub fn atoms(atoms: Vec<(Point, f64)>) -> Result<Self> {
        Self::new(MeasureKind::Atoms(atoms))
    }

    /// Uniform mass `weight` on `[a, b]`.
    pub fn uniform_interval(a: f64, b: f64, weight: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::invalid("uniform", "need a < b"));
        }
        Self::new(MeasureKind::UniformOnBall {
            center: Point::on_line(0.5 * (a + b)),
            radius: 0.5 * (b - a),
            weight,
            dimension: 1,
        })
    }

    pub fn uniform_disk(center: Point, radius: f64, weight: f64) -> Result<Self> {
        Self::new(MeasureKind::UniformOnBall { center, radius, weight, dimension: 2 })
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    /// `κ = μ(D)`.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Copy with every weight multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let kind = match &self.kind {
            MeasureKind::Zero => MeasureKind::Zero,
            MeasureKind::PointMass { at, weight } => MeasureKind::PointMass { at: *at, weight: weight * factor },
            MeasureKind::Atoms(a) => MeasureKind::Atoms(a.iter().map(|&(p, w)| (p, w * factor)).collect()),
            MeasureKind::UniformOnBall { center, radius, weight, dimension } => MeasureKind::UniformOnBall {
                center: *center,
                radius: *radius,
                weight: weight * factor,
                dimension: *dimension,
            },
            MeasureKind::TruncatedGaussian { center, sigma, domain, weight } => MeasureKind::TruncatedGaussian {
                center: *center,
                sigma: *sigma,
                domain: domain.clone(),
                weight: weight * factor,
            },
            MeasureKind::DensityOnGrid { edges, masses } => MeasureKind::DensityOnGrid {
                edges: edges.clone(),
                masses: masses.iter().map(|m| m * factor).collect(),
            },
        };
        Self::new(kind)
    }

    /// Checks that the support lies strictly inside `domain`.
    pub fn check_support(&self, domain: &DomainSpec) -> Result<()> {
        let inside = |p: Point, depth: f64| domain.signed_distance(p) < -(depth + SUPPORT_MARGIN);
        let leak = |what: &str| Err(Error::UnsupportedDomain(alloc::format!("support must be interior: {what}")));
        match &self.kind {
            MeasureKind::Zero => Ok(()),
            MeasureKind::PointMass { at, .. } => {
                if inside(*at, 0.0) {
                    Ok(())
                } else {
                    leak("atom on or outside the boundary")
                }
            }
            MeasureKind::Atoms(atoms) => {
                if atoms.iter().all(|&(p, _)| inside(p, 0.0)) {
                    Ok(())
                } else {
                    leak("atom on or outside the boundary")
                }
            }
            MeasureKind::UniformOnBall { center, radius, dimension, .. } => {
                if *dimension != domain.dimension() {
                    return leak("dimension differs from the domain");
                }
                if inside(*center, *radius) {
                    Ok(())
                } else {
                    leak("ball reaches the boundary")
                }
            }
            MeasureKind::TruncatedGaussian { domain: own, .. } => {
                if own == domain {
                    Ok(())
                } else {
                    leak("Gaussian truncated to a different domain")
                }
            }
            MeasureKind::DensityOnGrid { edges, .. } => {
                let (lo, hi) = (edges[0], edges[edges.len() - 1]);
                if domain.dimension() == 1 && inside(Point::on_line(lo), 0.0) && inside(Point::on_line(hi), 0.0) {
                    Ok(())
                } else {
                    leak("grid reaches the boundary")
                }
            }
        }
    }

    /// Draws from `μ/κ`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point> {
        match &self.kind {
            MeasureKind::Zero => Err(Error::invalid("measure", "cannot sample the zero measure")),
            MeasureKind::PointMass { at, .. } => Ok(*at),
            MeasureKind::Atoms(atoms) => {
                let i = self.pick_cell(rng);
                Ok(atoms[i].0)
            }
            MeasureKind::UniformOnBall { center, radius, dimension, .. } => {
                if *dimension == 1 {
                    Ok(Point::on_line(center.x + radius * (2.0 * rng::uniform(rng) - 1.0)))
                } else {
                    let r = radius * rng::uniform(rng).sqrt();
                    let t = 2.0 * core::f64::consts::PI * rng::uniform(rng);
                    Ok(*center + Point::new(r * t.cos(), r * t.sin()))
                }
            }
            MeasureKind::TruncatedGaussian { center, sigma, domain, .. } => {
                let dimension = domain.dimension();
                for _ in 0..1_000_000 {
                    let y = if dimension == 2 { sigma * rng::normal(rng) } else { 0.0 };
                    let p = *center + Point::new(sigma * rng::normal(rng), y);
                    if domain.signed_distance(p) < -SUPPORT_MARGIN {
                        return Ok(p);
                    }
                }
                Err(Error::UnsupportedDomain("rejection sampler made no progress".to_string()))
            }
            MeasureKind::DensityOnGrid { edges, .. } => {
                let i = self.pick_cell(rng);
                let u = rng::uniform(rng);
                Ok(Point::on_line(edges[i] + u * (edges[i + 1] - edges[i])))
            }
        }
    }

    fn pick_cell<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let target = rng::uniform(rng) * self.total_mass;
        let i = self.cumulative.partition_point(|&c| c <= target);
        // Skip empty cells that share the cumulative value.
        i.min(self.cumulative.len() - 1)
    }

    /// `∫ g dμ`.
    pub fn integrate<G: FnMut(Point) -> f64>(&self, g: G) -> Result<f64> {
        self.integrate_with_breaks(g, &[])
    }

    /// `∫ g dμ` for an integrand with kinks at `breaks` (one-dimensional
    /// kinds only; other kinds ignore the hint).
    pub fn integrate_with_breaks<G: FnMut(Point) -> f64>(&self, mut g: G, breaks: &[f64]) -> Result<f64> {
        let tol = Tolerance::new(1e-14, 1e-12);
        match &self.kind {
            MeasureKind::Zero => Ok(0.0),
            MeasureKind::PointMass { at, weight } => Ok(weight * g(*at)),
            MeasureKind::Atoms(atoms) => Ok(atoms.iter().map(|&(p, w)| w * g(p)).sum()),
            MeasureKind::UniformOnBall { center, radius, weight, dimension } => {
                if *dimension == 1 {
                    let (a, b) = (center.x - radius, center.x + radius);
                    let v = quad::integrate_with_breaks(|x| g(Point::on_line(x)), a, b, breaks, tol)?;
                    Ok(weight * v / (b - a))
                } else {
                    let v = quad::integrate_disk_polar(
                        |r, t| g(*center + Point::new(r * t.cos(), r * t.sin())),
                        *radius,
                        tol,
                    )?;
                    Ok(weight * v / (core::f64::consts::PI * radius * radius))
                }
            }
            MeasureKind::TruncatedGaussian { center, sigma, domain, weight } => {
                let v = match domain {
                    DomainSpec::Interval { a, b } => quad::integrate_with_breaks(
                        |x| {
                            let p = Point::on_line(x);
                            g(p) * gaussian_density(p, *center, *sigma, 1)
                        },
                        *a,
                        *b,
                        breaks,
                        tol,
                    )?,
                    DomainSpec::Disk { center: c, radius } => quad::integrate_disk_polar(
                        |r, t| {
                            let p = *c + Point::new(r * t.cos(), r * t.sin());
                            g(p) * gaussian_density(p, *center, *sigma, 2)
                        },
                        *radius,
                        tol,
                    )?,
                    _ => unreachable!("rejected at construction"),
                };
                Ok(weight * v / self.gaussian_inside)
            }
            MeasureKind::DensityOnGrid { edges, masses } => {
                let mut total = 0.0;
                for (i, &m) in masses.iter().enumerate() {
                    if m == 0.0 {
                        continue;
                    }
                    let (a, b) = (edges[i], edges[i + 1]);
                    let v = quad::integrate_with_breaks(|x| g(Point::on_line(x)), a, b, breaks, tol)?;
                    total += m * v / (b - a);
                }
                Ok(total)
            }
        }
    }

    /// Points where a one-dimensional integrand against `μ` may be non-smooth:
    /// atoms and the ends of continuous pieces.
    pub fn breakpoints_1d(&self) -> Vec<f64> {
        match &self.kind {
            MeasureKind::Zero => Vec::new(),
            MeasureKind::PointMass { at, .. } => alloc::vec![at.x],
            MeasureKind::Atoms(a) => a.iter().map(|(p, _)| p.x).collect(),
            MeasureKind::UniformOnBall { center, radius, .. } => alloc::vec![center.x - radius, center.x + radius],
            MeasureKind::TruncatedGaussian { .. } => Vec::new(),
            MeasureKind::DensityOnGrid { edges, .. } => edges.clone(),
        }
    }

    /// CDF of `μ/κ` along the line, for one-dimensional kinds.
    pub fn cdf_1d(&self, x: f64) -> Option<f64> {
        let k = self.total_mass;
        match &self.kind {
            MeasureKind::PointMass { at, .. } => Some(if x >= at.x { 1.0 } else { 0.0 }),
            MeasureKind::Atoms(a) => Some(a.iter().filter(|(p, _)| p.x <= x).map(|(_, w)| w).sum::<f64>() / k),
            MeasureKind::UniformOnBall { center, radius, dimension: 1, .. } => {
                Some(((x - center.x + radius) / (2.0 * radius)).clamp(0.0, 1.0))
            }
            MeasureKind::DensityOnGrid { edges, masses } => {
                let mut acc = 0.0;
                for (i, &m) in masses.iter().enumerate() {
                    let (a, b) = (edges[i], edges[i + 1]);
                    acc += m * ((x - a) / (b - a)).clamp(0.0, 1.0);
                }
                Some(acc / k)
            }
            MeasureKind::TruncatedGaussian { domain: DomainSpec::Interval { .. }, .. } => self
                .integrate_with_breaks(|p| if p.x <= x { 1.0 } else { 0.0 }, &[x])
                .ok()
                .map(|v| v / k),
            _ => None,
        }
    }
}

/// `Φ(λ) = λ + ∫ (1 − e^{−λz}) μ(dz)` for a finite measure on `(0, ∞)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplaceExponent {
    measure: RestartMeasure,
}

impl LaplaceExponent {
    pub fn new(measure: RestartMeasure) -> Result<Self> {
        measure.check_support(&DomainSpec::HalfLine)?;
        Ok(LaplaceExponent { measure })
    }

    pub fn measure(&self) -> &RestartMeasure {
        &self.measure
    }

    pub fn eval(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::invalid("lambda", "must be nonnegative"));
        }
        let jumps = self.measure.integrate(|z| -(-lambda * z.x).exp_m1())?;
        Ok(lambda + jumps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::path_rng;

    #[test]
    fn point_mass_is_deterministic() {
        let m = RestartMeasure::point_mass(Point::on_line(0.5), 1.0).unwrap();
        let mut r = path_rng(1, 0);
        for _ in 0..10 {
            assert_eq!(m.sample(&mut r).unwrap(), Point::on_line(0.5));
        }
        assert_eq!(m.integrate(|p| p.x * p.x).unwrap(), 0.25);
    }

    #[test]
    fn uniform_disk_second_moment() {
        let m = RestartMeasure::uniform_disk(Point::ORIGIN, 0.3, 1.0).unwrap();
        let v = m.integrate(|p| p.norm_sq()).unwrap();
        assert!((v - 0.045).abs() < 1e-12, "{v}");
        assert!((m.integrate(|_| 1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_atom_is_rejected() {
        let m = RestartMeasure::point_mass(Point::on_line(1.0), 1.0).unwrap();
        assert!(matches!(
            m.check_support(&DomainSpec::unit_interval()),
            Err(Error::UnsupportedDomain(_))
        ));
        let ball = RestartMeasure::uniform_disk(Point::new(0.5, 0.0), 0.5, 1.0).unwrap();
        assert!(ball.check_support(&DomainSpec::unit_disk()).is_err());
    }

    #[test]
    fn atom_at_zero_is_not_a_levy_measure_here() {
        let m = RestartMeasure::point_mass(Point::on_line(0.0), 1.0).unwrap();
        assert!(LaplaceExponent::new(m).is_err());
    }

    #[test]
    fn laplace_exponent_values() {
        let phi = LaplaceExponent::new(RestartMeasure::point_mass(Point::on_line(1.0), 1.0).unwrap()).unwrap();
        assert_eq!(phi.eval(0.0).unwrap(), 0.0);
        assert!((phi.eval(1.0).unwrap() - (2.0 - (-1f64).exp())).abs() < 1e-12);
        let phi2 = LaplaceExponent::new(RestartMeasure::point_mass(Point::on_line(0.5), 2.0).unwrap()).unwrap();
        let v = phi2.eval(50.0).unwrap();
        assert!((51.9..=52.0).contains(&v), "{v}");
        for lam in [1e2, 1e3, 1e4] {
            assert!((phi2.eval(lam).unwrap() / lam - 1.0).abs() <= 2.0 / lam + 1e-15);
        }
    }

    #[test]
    fn density_on_grid_mass_and_cdf() {
        let m = RestartMeasure::new(MeasureKind::DensityOnGrid {
            edges: alloc::vec![0.2, 0.4, 0.8],
            masses: alloc::vec![0.5, 1.5],
        })
        .unwrap();
        assert_eq!(m.total_mass(), 2.0);
        assert!((m.integrate(|_| 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((m.cdf_1d(0.4).unwrap() - 0.25).abs() < 1e-15);
        assert!((m.cdf_1d(0.6).unwrap() - 0.625).abs() < 1e-15);
    }

    #[test]
    fn truncated_gaussian_total_mass() {
        let m = RestartMeasure::new(MeasureKind::TruncatedGaussian {
            center: Point::ORIGIN,
            sigma: 1.0,
            domain: DomainSpec::unit_disk(),
            weight: 3.0,
        })
        .unwrap();
        assert!((m.integrate(|_| 1.0).unwrap() - 3.0).abs() < 1e-10);
        // P(|N| ≤ 1) for a standard planar Gaussian.
        assert!((m.gaussian_inside - (1.0 - (-0.5f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn scaling_multiplies_mass() {
        let m = RestartMeasure::atoms(alloc::vec![(Point::on_line(0.3), 1.0), (Point::on_line(0.7), 1.0)]).unwrap();
        assert_eq!(m.scaled(2.5).unwrap().total_mass(), 5.0);
    }
}
