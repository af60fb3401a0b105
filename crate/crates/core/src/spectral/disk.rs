//! Robin modes of `−½Δ` on the unit disk.
//!
//! Separation in polar coordinates gives `J_m(kr) cos(mθ)` and
//! `J_m(kr) sin(mθ)` with `λ = k²/2`; the Robin condition becomes
//! `k J_m'(k) + κ J_m(k) = 0`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{bisect, Eigenpair, Mode, Parity, SpectralBasis};
use crate::geometry::DomainSpec;
use crate::{Error, Result};

pub(crate) fn bessel(m: u32, x: f64) -> f64 {
    libm::jn(m as i32, x)
}

pub(crate) fn bessel_derivative(m: u32, x: f64) -> f64 {
    if m == 0 {
        -libm::j1(x)
    } else {
        0.5 * (libm::jn(m as i32 - 1, x) - libm::jn(m as i32 + 1, x))
    }
}

fn robin_radial(kappa: f64, m: u32, k: f64) -> f64 {
    k * bessel_derivative(m, k) + kappa * bessel(m, k)
}

/// Roots of the radial Robin equation for index `m` in `(0, ceiling)`.
fn radial_roots(kappa: f64, m: u32, ceiling: f64) -> Vec<f64> {
    let step = 1e-2;
    let mut roots = Vec::new();
    let mut lo = 1e-6;
    let mut flo = robin_radial(kappa, m, lo);
    while lo < ceiling {
        let hi = lo + step;
        let fhi = robin_radial(kappa, m, hi);
        if (flo < 0.0) != (fhi < 0.0) {
            roots.push(bisect(|k| robin_radial(kappa, m, k), lo, hi));
        }
        lo = hi;
        flo = fhi;
    }
    roots
}

/// `∫₀¹ J_m(kr)² r dr`.
fn radial_norm_sq(m: u32, k: f64) -> f64 {
    let jm = bessel(m, k);
    let dj = bessel_derivative(m, k);
    let mf = m as f64;
    0.5 * (dj * dj + (1.0 - mf * mf / (k * k)) * jm * jm)
}

/// The first `count` Robin eigenpairs on the unit disk centred at the origin,
/// ordered by eigenvalue (cosine before sine within a degenerate pair).
pub fn robin_eigenbasis_disk(kappa: f64, count: usize) -> Result<SpectralBasis> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::invalid("kappa", "must be positive"));
    }
    if count == 0 {
        return Err(Error::invalid("modes", "need at least one mode"));
    }
    // Weyl's law on the unit disk: about k²/4 modes below k.
    let mut ceiling = 2.0 * (count as f64).sqrt() + 6.0;
    let mut found = 0;
    for _ in 0..3 {
        let mut pairs = Vec::new();
        for m in 0u32.. {
            // The first root for index m lies above m − κ-ish; stop once none are found.
            let roots = radial_roots(kappa, m, ceiling);
            if roots.is_empty() && (m as f64) > ceiling {
                break;
            }
            for k in roots {
                let radial = radial_norm_sq(m, k);
                let lambda = 0.5 * k * k;
                if m == 0 {
                    let norm = (2.0 * core::f64::consts::PI * radial).sqrt();
                    let gamma = 2.0 * core::f64::consts::PI * libm::j1(k) / k / norm;
                    pairs.push(Eigenpair { lambda, gamma, mode: Mode::Disk { m, k, parity: Parity::Cos, norm } });
                } else {
                    let norm = (core::f64::consts::PI * radial).sqrt();
                    for parity in [Parity::Cos, Parity::Sin] {
                        pairs.push(Eigenpair { lambda, gamma: 0.0, mode: Mode::Disk { m, k, parity, norm } });
                    }
                }
            }
        }
        pairs.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        if pairs.len() >= count {
            pairs.truncate(count);
            let domain = DomainSpec::unit_disk();
            return Ok(SpectralBasis { domain, kappa, pairs });
        }
        found = pairs.len();
        ceiling *= 2.0;
    }
    Err(Error::RootBracketingFailed { found, wanted: count, ceiling: ceiling / 2.0 })
}
