//! Robin eigenbases and the spectral solution of the nonlocal heat problem.
//!
//! With `−½Δφ_j = λ_jφ_j`, `∂ₙφ_j = κφ_j` on `∂D`, the solution is
//!
//! ```text
//! u(t,x) = Σ_j [e^{−λ_j t} f_j + (γ_j/κ) λ_j ∫₀ᵗ e^{−λ_j(t−s)} c(s) ds] φ_j(x)
//! ```
//!
//! where `c(t) = ∫u(t,y)μ(dy)` solves the renewal equation
//!
//! ```text
//! c(t) = Σ_j α_j f_j e^{−λ_j t} + Σ_j (γ_jα_j/κ) λ_j ∫₀ᵗ e^{−λ_j(t−s)} c(s) ds.
//! ```
//!
//! The factor `λ_j` in the kernel follows from integrating the series against
//! `μ`; with `f ≡ 1` it gives `c ≡ κ` and `u ≡ 1`.

mod disk;
mod interval;
mod volterra;

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{DomainSpec, Point};
use crate::measures::RestartMeasure;
use crate::quad::{self, Tolerance};
use crate::{Error, Result};

pub use disk::robin_eigenbasis_disk;
pub use interval::{robin_eigenbasis_interval, robin_frequency_equation};
pub use volterra::{
    evaluate_solution, laplace_check, mode_amplitudes, solve_volterra, solve_volterra_with, CtSolution, LaplacePoint,
    LaplaceReport, Scheme, TruncationWarning,
};

/// Default number of interval modes.
pub const DEFAULT_INTERVAL_MODES: usize = 50;
/// Default number of disk modes.
pub const DEFAULT_DISK_MODES: usize = 40;

/// Angular factor of a disk mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Cos,
    Sin,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    /// `(cos ωx + (κ/ω) sin ωx) / norm` on `[0, 1]`.
    Interval { omega: f64, norm: f64 },
    /// `J_m(kr) · cos(mθ) or sin(mθ) / norm` on the unit disk.
    Disk { m: u32, k: f64, parity: Parity, norm: f64 },
}

/// One normalized Robin eigenpair with `γ = ⟨1, φ⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigenpair {
    pub lambda: f64,
    pub gamma: f64,
    pub mode: Mode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralBasis {
    domain: DomainSpec,
    kappa: f64,
    pairs: Vec<Eigenpair>,
}

impl SpectralBasis {
    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[Eigenpair] {
        &self.pairs
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.gamma).collect()
    }

    /// The first `j` modes.
    pub fn truncated(&self, j: usize) -> SpectralBasis {
        SpectralBasis { domain: self.domain.clone(), kappa: self.kappa, pairs: self.pairs[..j.min(self.len())].to_vec() }
    }

    pub fn eval(&self, j: usize, p: Point) -> f64 {
        match self.pairs[j].mode {
            Mode::Interval { omega, norm } => {
                let (s, c) = (omega * p.x).sin_cos();
                (c + self.kappa / omega * s) / norm
            }
            Mode::Disk { m, k, parity, norm } => {
                let r = p.norm();
                let theta = p.y.atan2(p.x);
                disk::bessel(m, k * r) * angular(m, parity, theta) / norm
            }
        }
    }

    pub fn gradient(&self, j: usize, p: Point) -> Point {
        match self.pairs[j].mode {
            Mode::Interval { omega, norm } => {
                let (s, c) = (omega * p.x).sin_cos();
                Point::on_line((-omega * s + self.kappa * c) / norm)
            }
            Mode::Disk { m, k, parity, norm } => {
                let r = p.norm();
                if r < 1e-14 {
                    return match (m, parity) {
                        (1, Parity::Cos) => Point::new(0.5 * k / norm, 0.0),
                        (1, Parity::Sin) => Point::new(0.0, 0.5 * k / norm),
                        _ => Point::ORIGIN,
                    };
                }
                let theta = p.y.atan2(p.x);
                let (st, ct) = theta.sin_cos();
                let dr = k * disk::bessel_derivative(m, k * r) * angular(m, parity, theta) / norm;
                let dtheta_over_r = disk::bessel(m, k * r) * angular_derivative(m, parity, theta) / (r * norm);
                Point::new(dr * ct - dtheta_over_r * st, dr * st + dtheta_over_r * ct)
            }
        }
    }

    /// An upper bound for `sup |φ_j|` over the closed domain.
    pub fn sup_bound(&self, j: usize) -> f64 {
        match self.pairs[j].mode {
            Mode::Interval { omega, norm } => (1.0 + (self.kappa / omega).powi(2)).sqrt() / norm,
            Mode::Disk { norm, .. } => 1.0 / norm,
        }
    }

    /// `Σ_j a_j φ_j(p)`.
    pub fn synthesize(&self, amplitudes: &[f64], p: Point) -> f64 {
        amplitudes.iter().enumerate().map(|(j, a)| a * self.eval(j, p)).sum()
    }

    /// `∫_D g φ_j`.
    pub fn inner_product<G: FnMut(Point) -> f64>(&self, j: usize, mut g: G) -> Result<f64> {
        let tol = Tolerance { abs: 1e-13, rel: 1e-12, max_intervals: 4000 };
        match self.domain {
            DomainSpec::Interval { a, b } => quad::integrate(|x| g(Point::on_line(x)) * self.eval(j, Point::on_line(x)), a, b, tol),
            DomainSpec::Disk { radius, .. } => quad::integrate_disk_polar(
                |r, t| {
                    let p = Point::new(r * t.cos(), r * t.sin());
                    g(p) * self.eval(j, p)
                },
                radius,
                tol,
            ),
            _ => Err(Error::UnsupportedDomain(alloc::string::String::from("spectral bases exist for the interval and disk"))),
        }
    }
}

fn angular(m: u32, parity: Parity, theta: f64) -> f64 {
    match parity {
        Parity::Cos => (m as f64 * theta).cos(),
        Parity::Sin => (m as f64 * theta).sin(),
    }
}

fn angular_derivative(m: u32, parity: Parity, theta: f64) -> f64 {
    let mf = m as f64;
    match parity {
        Parity::Cos => -mf * (mf * theta).sin(),
        Parity::Sin => mf * (mf * theta).cos(),
    }
}

/// `f_j = ⟨f, φ_j⟩` and `α_j = ∫φ_j dμ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    pub f: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl CoefficientSet {
    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }
}

pub fn project_coefficients<F: Fn(Point) -> f64>(
    f: F,
    measure: &RestartMeasure,
    basis: &SpectralBasis,
) -> Result<CoefficientSet> {
    let mut fj = Vec::with_capacity(basis.len());
    let mut alpha = Vec::with_capacity(basis.len());
    for j in 0..basis.len() {
        fj.push(basis.inner_product(j, &f)?);
        alpha.push(measure.integrate(|p| basis.eval(j, p))?);
    }
    Ok(CoefficientSet { f: fj, alpha })
}

/// Bisection on a bracketing interval, run to machine resolution.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_of_a_basis_function() {
        let basis = robin_eigenbasis_interval(1.0, 8).unwrap();
        let mu = RestartMeasure::point_mass(Point::on_line(0.3), 1.0).unwrap();
        let c = project_coefficients(|p| basis.eval(0, p), &mu, &basis).unwrap();
        for (j, fj) in c.f.iter().enumerate() {
            let expected = if j == 0 { 1.0 } else { 0.0 };
            assert!((fj - expected).abs() < 1e-8, "f_{j} = {fj}");
        }
        for (j, a) in c.alpha.iter().enumerate() {
            assert_eq!(*a, basis.eval(j, Point::on_line(0.3)));
        }
        let ones = project_coefficients(|_| 1.0, &mu, &basis).unwrap();
        for (fj, p) in ones.f.iter().zip(basis.pairs()) {
            assert!((fj - p.gamma).abs() < 1e-8);
        }
    }

    #[test]
    fn bessel_inequality_is_monotone() {
        let basis = robin_eigenbasis_interval(2.0, 30).unwrap();
        let mu = RestartMeasure::point_mass(Point::on_line(0.5), 2.0).unwrap();
        let f = |p: Point| (core::f64::consts::PI * p.x).sin() + 1.0;
        let c = project_coefficients(f, &mu, &basis).unwrap();
        let norm_sq = 1.5 + 4.0 / core::f64::consts::PI;
        let mut acc = 0.0;
        for fj in &c.f {
            let next = acc + fj * fj;
            assert!(next >= acc);
            acc = next;
        }
        assert!(acc <= norm_sq + 1e-12);
    }
}
