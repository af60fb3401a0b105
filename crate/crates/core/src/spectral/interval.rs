//! Robin modes of `−½ d²/dx²` on `[0, 1]`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{bisect, Eigenpair, Mode, SpectralBasis};
use crate::geometry::DomainSpec;
use crate::{Error, Result};

/// `F(ω) = (ω² − κ²) sin ω − 2κω cos ω`, whose positive roots are the
/// frequencies of the modes `cos ωx + (κ/ω) sin ωx`.
pub fn robin_frequency_equation(kappa: f64, omega: f64) -> f64 {
    let (s, c) = omega.sin_cos();
    (omega * omega - kappa * kappa) * s - 2.0 * kappa * omega * c
}

fn norm(kappa: f64, omega: f64) -> f64 {
    let a = kappa / omega;
    let (s2, c2) = (2.0 * omega).sin_cos();
    let sq = 0.5 * (1.0 + a * a) + (1.0 - a * a) * s2 / (4.0 * omega) + a * (1.0 - c2) / (2.0 * omega);
    sq.sqrt()
}

fn frequencies(kappa: f64, count: usize) -> Result<Vec<f64>> {
    let step = (1e-3f64).min(0.25 * (2.0 * kappa).sqrt());
    let mut ceiling = (count as f64 + 1.0) * core::f64::consts::PI;
    let mut found = 0;
    for _ in 0..3 {
        let mut roots = Vec::with_capacity(count);
        let mut lo = step;
        let mut flo = robin_frequency_equation(kappa, lo);
        while lo < ceiling && roots.len() < count {
            let hi = lo + step;
            let fhi = robin_frequency_equation(kappa, hi);
            if fhi == 0.0 || (flo < 0.0) != (fhi < 0.0) {
                roots.push(bisect(|w| robin_frequency_equation(kappa, w), lo, hi));
                // Step past an exact hit so it is not counted twice.
                lo = hi + if fhi == 0.0 { step } else { 0.0 };
                flo = robin_frequency_equation(kappa, lo);
                continue;
            }
            lo = hi;
            flo = fhi;
        }
        if roots.len() == count {
            return Ok(roots);
        }
        found = roots.len();
        ceiling *= 2.0;
    }
    Err(Error::RootBracketingFailed { found, wanted: count, ceiling: ceiling / 2.0 })
}

/// The first `count` Robin eigenpairs on `[0, 1]` with
/// `φ'(0) = κφ(0)`, `−φ'(1) = κφ(1)`.
pub fn robin_eigenbasis_interval(kappa: f64, count: usize) -> Result<SpectralBasis> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::invalid("kappa", "must be positive"));
    }
    if count == 0 {
        return Err(Error::invalid("modes", "need at least one mode"));
    }
    let pairs = frequencies(kappa, count)?
        .into_iter()
        .map(|omega| {
            let n = norm(kappa, omega);
            let a = kappa / omega;
            let (s, c) = omega.sin_cos();
            let gamma = (s + a * (1.0 - c)) / (omega * n);
            Eigenpair { lambda: 0.5 * omega * omega, gamma, mode: Mode::Interval { omega, norm: n } }
        })
        .collect();
    Ok(SpectralBasis { domain: DomainSpec::unit_interval(), kappa, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::quad::{integrate, Tolerance};
    use nalgebra::DMatrix;

    #[test]
    fn neumann_limit() {
        let b = robin_eigenbasis_interval(1e-4, 4).unwrap();
        let Mode::Interval { omega, .. } = b.pairs()[0].mode else { unreachable!() };
        assert!(omega < 0.2);
        for j in 1..4 {
            let expected = (j as f64 * core::f64::consts::PI).powi(2) / 2.0;
            assert!((b.pairs()[j].lambda - expected).abs() / expected < 1e-3);
        }
    }

    #[test]
    fn roots_and_boundary_conditions() {
        let kappa = 1.0;
        let b = robin_eigenbasis_interval(kappa, 5).unwrap();
        for (j, p) in b.pairs().iter().enumerate() {
            let Mode::Interval { omega, .. } = p.mode else { unreachable!() };
            assert!(robin_frequency_equation(kappa, omega).abs() < 1e-10);
            let left = b.gradient(j, Point::on_line(0.0)).x - kappa * b.eval(j, Point::on_line(0.0));
            let right = -b.gradient(j, Point::on_line(1.0)).x - kappa * b.eval(j, Point::on_line(1.0));
            assert!(left.abs() < 1e-7 && right.abs() < 1e-7, "{left} {right}");
        }
    }

    #[test]
    fn eigenvalues_strictly_increase() {
        let b = robin_eigenbasis_interval(3.0, 50).unwrap();
        assert!(b.eigenvalues().windows(2).all(|w| w[1] > w[0]));
        assert!(b.eigenvalues()[0] > 0.0);
    }

    #[test]
    fn orthonormal_by_quadrature() {
        let b = robin_eigenbasis_interval(2.0, 12).unwrap();
        for i in 0..b.len() {
            for j in 0..=i {
                let v = integrate(
                    |x| b.eval(i, Point::on_line(x)) * b.eval(j, Point::on_line(x)),
                    0.0,
                    1.0,
                    Tolerance::default(),
                )
                .unwrap();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-8, "<{i},{j}> = {v}");
            }
        }
    }

    #[test]
    fn gamma_matches_boundary_formula_and_parseval() {
        let kappa = 0.7;
        let b = robin_eigenbasis_interval(kappa, 50).unwrap();
        let mut sum = 0.0;
        for (j, p) in b.pairs().iter().enumerate() {
            let boundary = kappa * (b.eval(j, Point::on_line(0.0)) + b.eval(j, Point::on_line(1.0))) / (2.0 * p.lambda);
            assert!((p.gamma - boundary).abs() < 1e-12);
            sum += p.gamma * p.gamma;
        }
        assert!(sum <= 1.0 && sum > 1.0 - 1e-4, "{sum}");
    }

    #[test]
    fn matches_finite_volume_eigenvalues() {
        // Cell-centred finite volumes with the Robin flux folded into the
        // boundary cells give a symmetric matrix.
        let kappa = 1.0;
        let n = 500;
        let dx = 1.0 / n as f64;
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            if i > 0 {
                a[(i, i - 1)] = -0.5 / (dx * dx);
                diag += 0.5 / (dx * dx);
            }
            if i + 1 < n {
                a[(i, i + 1)] = -0.5 / (dx * dx);
                diag += 0.5 / (dx * dx);
            }
            if i == 0 || i + 1 == n {
                // Flux κu_b with u_b from the half-cell Robin relation.
                diag += 0.5 * kappa / (1.0 + 0.5 * kappa * dx) / dx;
            }
            a[(i, i)] = diag;
        }
        let mut fd: Vec<f64> = a.symmetric_eigen().eigenvalues.iter().copied().collect();
        fd.sort_by(f64::total_cmp);
        let b = robin_eigenbasis_interval(kappa, 5).unwrap();
        for (j, p) in b.pairs().iter().enumerate() {
            let rel = (p.lambda - fd[j]).abs() / p.lambda;
            assert!(rel < 5e-3, "mode {j}: {} vs {}", p.lambda, fd[j]);
        }
    }
}
