//! Adaptive quadrature.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Requested accuracy: stop once the error estimate is below
/// `max(abs, rel · |integral|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-13, rel: 1e-12, max_intervals: 2000 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel, ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let s = f(center - dx) + f(center + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    Segment { a, b, value: k * half, error: ((k - g) * half).abs() }
}

/// Globally adaptive Gauss–Kronrod 7/15 quadrature of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut segments: Vec<Segment> = Vec::with_capacity(64);
    segments.push(kronrod(&mut f, a, b));
    loop {
        let (total, error) = segments.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if !total.is_finite() {
            return Err(Error::QuadratureNotConverged { estimate: f64::INFINITY });
        }
        if error <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(total);
        }
        if segments.len() >= tol.max_intervals {
            return Err(Error::QuadratureNotConverged { estimate: error });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            return Err(Error::QuadratureNotConverged { estimate: error });
        }
        segments.push(kronrod(&mut f, s.a, mid));
        segments.push(kronrod(&mut f, mid, s.b));
    }
}

/// Like [`integrate`], split at interior breakpoints (kinks, atoms).
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<f64> {
    let mut nodes: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let mut total = 0.0;
    let mut left = a;
    for &right in nodes.iter().chain(core::iter::once(&b)) {
        total += integrate(&mut f, left, right, tol)?;
        left = right;
    }
    Ok(total)
}

/// Periodic trapezoid rule over a full turn, doubled until two successive
/// levels agree.
pub fn integrate_periodic<F: FnMut(f64) -> f64>(mut f: F, tol: Tolerance) -> Result<f64> {
    let two_pi = 2.0 * core::f64::consts::PI;
    let mut n = 16usize;
    let mut sum: f64 = (0..n).map(|i| f(two_pi * i as f64 / n as f64)).sum();
    let mut prev = sum * two_pi / n as f64;
    while n < 1 << 16 {
        let added: f64 = (0..n).map(|i| f(two_pi * (i as f64 + 0.5) / n as f64)).sum();
        sum += added;
        n *= 2;
        let value = sum * two_pi / n as f64;
        if (value - prev).abs() <= tol.abs.max(tol.rel * value.abs()) {
            return Ok(value);
        }
        prev = value;
    }
    Err(Error::QuadratureNotConverged { estimate: f64::NAN })
}

/// Integral of `g(r, θ)` over a disk in polar coordinates about its centre
/// (the `r` Jacobian is applied here).
pub fn integrate_disk_polar<F: FnMut(f64, f64) -> f64>(mut g: F, radius: f64, tol: Tolerance) -> Result<f64> {
    let inner = Tolerance { abs: tol.abs * 1e-2, rel: tol.rel * 1e-2, ..tol };
    let mut failure = None;
    let value = integrate(
        |r| match integrate_periodic(|theta| g(r, theta), inner) {
            Ok(v) => v * r,
            Err(e) => {
                failure = Some(e);
                0.0
            }
        },
        0.0,
        radius,
        tol,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(value),
    }
}
