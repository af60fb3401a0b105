//! Harmonic extension to the half-plane and the nonlocal Dirichlet-to-Neumann
//! operator, on a periodic FFT grid.
//!
//! For boundary data `f`, `û(ξ, y) = f̂(ξ) e^{−|ξ|y}`, and
//! `Kf = ∂_y u(·, 0) + ∫(u(·, z) − f) μ(dz)` has symbol `−Φ(|ξ|)`.

use std::f64::consts::PI;

use elastic_jump_core::measures::{LaplaceExponent, MeasureKind, RestartMeasure};
use elastic_jump_core::rng::{path_rng, uniform};
use elastic_jump_core::{Error, Result};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Relative amplitude allowed at the ends of the embedding.
pub const EDGE_DECAY: f64 = 1e-8;
/// Spectral energy fraction allowed above `0.9` of Nyquist.
pub const ALIASING_LIMIT: f64 = 1e-6;

/// One-sided fourth-order first derivative weights on `0, δ, …, 4δ`.
const ONE_SIDED: [f64; 5] = [-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25];

/// Samples on `x_i = −R/2 + iR/N`, `i < N`, periodically extended.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    length: f64,
    values: Vec<f64>,
    windowed: bool,
}

fn check_grid(length: f64, n: usize) -> Result<()> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::InvalidParameter { name: "length", reason: "must be positive".into() });
    }
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::InvalidParameter { name: "n", reason: format!("{n} is not a power of two ≥ 8") });
    }
    Ok(())
}

/// `x_i = −R/2 + iR/N` for `i < N`.
pub fn grid_points(length: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| -0.5 * length + length * i as f64 / n as f64).collect()
}

/// `1` on the middle 80% of the embedding, tapering smoothly to `0` at the ends.
fn taper(x: f64, length: f64) -> f64 {
    let s = (x.abs() / (0.5 * length) - 0.8) / 0.2;
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let bump = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
        bump(1.0 - s) / (bump(1.0 - s) + bump(s))
    }
}

impl GridField {
    /// Data that is already periodic on the embedding.
    pub fn periodic(values: Vec<f64>, length: f64) -> Result<Self> {
        check_grid(length, values.len())?;
        Ok(GridField { length, values, windowed: false })
    }

    /// Samples `f`; a smooth taper is applied if `f` has not decayed at the
    /// ends of the embedding.
    pub fn windowed<F: Fn(f64) -> f64>(f: F, length: f64, n: usize) -> Result<Self> {
        check_grid(length, n)?;
        let xs = grid_points(length, n);
        let mut values: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let edge = values[0].abs().max(values[n - 1].abs());
        let windowed = edge > EDGE_DECAY * sup;
        if windowed {
            for (v, &x) in values.iter_mut().zip(&xs) {
                *v *= taper(x, length);
            }
        }
        Ok(GridField { length, values, windowed })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.len() as f64
    }

    pub fn was_windowed(&self) -> bool {
        self.windowed
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn points(&self) -> Vec<f64> {
        grid_points(self.length, self.len())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        l2(&self.values, self.spacing())
    }

    /// Angular frequencies in FFT order.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|k| {
                let m = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
                2.0 * PI * m / self.length
            })
            .collect()
    }

    fn spectrum(&self) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        buf
    }

    /// Energy fraction above `0.9` of Nyquist.
    pub fn high_frequency_fraction(&self) -> f64 {
        let spec = self.spectrum();
        let nyquist = PI / self.spacing();
        let mut high = 0.0;
        let mut total = 0.0;
        for (c, xi) in spec.iter().zip(self.frequencies()) {
            let e = c.norm_sqr();
            total += e;
            if xi.abs() > 0.9 * nyquist {
                high += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            high / total
        }
    }

    fn checked_spectrum(&self) -> Result<Vec<Complex64>> {
        let fraction = self.high_frequency_fraction();
        if fraction > ALIASING_LIMIT {
            return Err(Error::AliasingDetected { fraction });
        }
        Ok(self.spectrum())
    }
}

fn l2(v: &[f64], dx: f64) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() * dx).sqrt()
}

fn inverse(mut spec: Vec<Complex64>) -> Vec<f64> {
    let n = spec.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
    spec.iter().map(|c| c.re / n as f64).collect()
}

fn slice(spec: &[Complex64], xi: &[f64], y: f64) -> Vec<f64> {
    inverse(spec.iter().zip(xi).map(|(c, k)| c * (-k.abs() * y).exp()).collect())
}

/// `u(·, y)` for each `y` in `ys`.
pub fn poisson_extension(f: &GridField, ys: &[f64]) -> Result<Vec<Vec<f64>>> {
    if let Some(&y) = ys.iter().find(|y| !(**y >= 0.0)) {
        return Err(Error::InvalidParameter { name: "y", reason: format!("{y} is negative") });
    }
    let spec = f.checked_spectrum()?;
    let xi = f.frequencies();
    Ok(ys.iter().map(|&y| slice(&spec, &xi, y)).collect())
}

const GAUSS8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

fn gauss_panels(a: f64, b: f64, density: f64, panels: usize, out: &mut Vec<(f64, f64)>) {
    let w = (b - a) / panels as f64;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * w;
        for &(x, g) in &GAUSS8 {
            for s in [-1.0, 1.0] {
                out.push((mid + s * 0.5 * w * x, 0.5 * w * g * density));
            }
        }
    }
}

/// Quadrature nodes `(z, weight)` for `μ` on `(0, ∞)`.
fn measure_nodes(measure: &RestartMeasure, panels: usize) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    match measure.kind() {
        MeasureKind::Zero => {}
        MeasureKind::PointMass { at, weight } => out.push((at.x, *weight)),
        MeasureKind::Atoms(atoms) => out.extend(atoms.iter().map(|(p, w)| (p.x, *w))),
        MeasureKind::UniformOnBall { center, radius, weight, dimension: 1 } => {
            gauss_panels(center.x - radius, center.x + radius, weight / (2.0 * radius), panels, &mut out)
        }
        MeasureKind::DensityOnGrid { edges, masses } => {
            for (i, m) in masses.iter().enumerate() {
                let (a, b) = (edges[i], edges[i + 1]);
                gauss_panels(a, b, m / (b - a), panels.div_ceil(masses.len()).max(1), &mut out);
            }
        }
        _ => {
            return Err(Error::UnsupportedDomain(
                "the half-plane operator needs atoms, a uniform segment or a grid density".into(),
            ))
        }
    }
    Ok(out)
}

/// Both evaluations of `Kf` and their discrepancy.
#[derive(Clone, Debug, PartialEq)]
pub struct DtnReport {
    /// Finite-difference normal derivative plus the `μ` average of slices.
    pub direct: Vec<f64>,
    /// Inverse transform of `−Φ(|ξ|) f̂`.
    pub symbol: Vec<f64>,
    /// `max |direct − symbol| / ‖f‖∞`.
    pub max_residual: f64,
    /// `(ξ, |K̂_direct − K̂_symbol| / max |f̂|)` for `ξ ≥ 0`.
    pub symbol_residuals: Vec<(f64, f64)>,
    /// `⟨Kf, f⟩` from the direct evaluation.
    pub pairing: f64,
}

fn jump_term(spec: &[Complex64], xi: &[f64], nodes: &[(f64, f64)], f: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; f.len()];
    for &(z, w) in nodes {
        for ((a, u), f0) in acc.iter_mut().zip(slice(spec, xi, z)).zip(f) {
            *a += w * (u - f0);
        }
    }
    acc
}

pub fn dtn_compare(f: &GridField, measure: &RestartMeasure) -> Result<DtnReport> {
    let phi = if measure.total_mass() > 0.0 { Some(LaplaceExponent::new(measure.clone())?) } else { None };
    let spec = f.checked_spectrum()?;
    let xi = f.frequencies();
    let delta = f.spacing();
    let mut direct = vec![0.0; f.len()];
    for (k, c) in ONE_SIDED.iter().enumerate() {
        let u = if k == 0 { f.values.clone() } else { slice(&spec, &xi, k as f64 * delta) };
        for (d, v) in direct.iter_mut().zip(u) {
            *d += c * v / delta;
        }
    }
    let continuous = !matches!(measure.kind(), MeasureKind::Zero | MeasureKind::PointMass { .. } | MeasureKind::Atoms(_));
    let nodes = measure_nodes(measure, 16)?;
    let jumps = jump_term(&spec, &xi, &nodes, &f.values);
    if continuous {
        let finer = jump_term(&spec, &xi, &measure_nodes(measure, 32)?, &f.values);
        let estimate = jumps.iter().zip(&finer).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if estimate > 1e-10 * f.sup_norm().max(1e-300) {
            return Err(Error::QuadratureNotConverged { estimate });
        }
    }
    for (d, j) in direct.iter_mut().zip(&jumps) {
        *d += j;
    }
    let mut exponent = Vec::with_capacity(xi.len());
    for k in &xi {
        exponent.push(match &phi {
            Some(p) => p.eval(k.abs())?,
            None => k.abs(),
        });
    }
    let symbol = inverse(spec.iter().zip(&exponent).map(|(c, p)| -c * p).collect());
    let sup = f.sup_norm();
    let max_residual = direct.iter().zip(&symbol).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / sup;
    let direct_spec = GridField { length: f.length, values: direct.clone(), windowed: false }.spectrum();
    let peak = spec.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let symbol_residuals = xi
        .iter()
        .zip(direct_spec.iter().zip(spec.iter().zip(&exponent)))
        .filter(|(k, _)| **k >= 0.0)
        .map(|(k, (d, (c, p)))| (*k, (d + c * p).norm() / peak))
        .collect();
    let pairing = direct.iter().zip(&f.values).map(|(a, b)| a * b).sum::<f64>() * delta;
    Ok(DtnReport { direct, symbol, max_residual, symbol_residuals, pairing })
}

/// A sum of three random Gaussian bumps centred in the middle quarter of the
/// embedding.
pub fn random_smooth_field(seed: u64, index: u64, length: f64, n: usize) -> Result<GridField> {
    let mut rng = path_rng(seed, index);
    let bumps: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            let c = (uniform(&mut rng) - 0.5) * 0.25 * length;
            let w = 0.5 + 1.5 * uniform(&mut rng);
            let a = 2.0 * uniform(&mut rng) - 1.0;
            (c, w, a)
        })
        .collect();
    GridField::windowed(|x| bumps.iter().map(|(c, w, a)| a * (-0.5 * ((x - c) / w).powi(2)).exp()).sum(), length, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use elastic_jump_core::Point;

    fn gaussian(n: usize) -> GridField {
        GridField::windowed(|x| (-0.5 * x * x).exp(), 40.0, n).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridField::periodic(vec![0.0; 100], 1.0).is_err());
        assert!(GridField::periodic(vec![0.0; 64], -1.0).is_err());
        assert!(!gaussian(256).was_windowed());
        assert!(GridField::windowed(|x| x.cos(), 10.0, 256).unwrap().was_windowed());
    }

    #[test]
    fn zero_height_slice_is_the_data() {
        let f = gaussian(1024);
        let u = poisson_extension(&f, &[0.0]).unwrap();
        let err = u[0].iter().zip(f.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-12);
    }

    #[test]
    fn slices_shrink_in_sup_and_l2() {
        let f = gaussian(1024);
        let ys = [0.0, 0.1, 0.5, 1.0, 3.0];
        let u = poisson_extension(&f, &ys).unwrap();
        for w in u.windows(2) {
            let s0 = w[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let s1 = w[1].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(s1 <= s0 + 1e-14);
            assert!(l2(&w[1], f.spacing()) <= l2(&w[0], f.spacing()) + 1e-14);
        }
    }

    #[test]
    fn extension_is_harmonic() {
        let f = gaussian(4096);
        let d = f.spacing();
        let ys: Vec<f64> = (0..6).map(|k| 0.5 + k as f64 * d).collect();
        let u = poisson_extension(&f, &ys).unwrap();
        let n = f.len();
        let mut worst = 0.0f64;
        for j in 1..5 {
            for i in 1..n - 1 {
                let lap = (u[j][i + 1] + u[j][i - 1] + u[j + 1][i] + u[j - 1][i] - 4.0 * u[j][i]) / (d * d);
                worst = worst.max(lap.abs());
            }
        }
        assert!(worst < 1e-4 * f.sup_norm(), "{worst}");
    }

    #[test]
    fn aliasing_is_detected() {
        let n = 256;
        let rough: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let f = GridField::periodic(rough, 10.0).unwrap();
        assert!(matches!(poisson_extension(&f, &[0.1]), Err(Error::AliasingDetected { .. })));
    }

    #[test]
    fn classical_operator_without_restarts() {
        let r = dtn_compare(&gaussian(4096), &RestartMeasure::zero()).unwrap();
        assert!(r.max_residual < 1e-3, "{}", r.max_residual);
        assert!(r.pairing <= 0.0);
    }

    #[test]
    fn single_mode_is_diagonal() {
        let n = 1024;
        let length = 2.0 * PI * 8.0;
        let k0 = 8;
        let xi0 = 2.0 * PI * k0 as f64 / length;
        let values = grid_points(length, n).iter().map(|x| (xi0 * x).cos()).collect();
        let f = GridField::periodic(values, length).unwrap();
        let mu = RestartMeasure::point_mass(Point::on_line(1.0), 1.0).unwrap();
        let r = dtn_compare(&f, &mu).unwrap();
        let p = LaplaceExponent::new(mu).unwrap().eval(xi0).unwrap();
        for (s, v) in r.symbol.iter().zip(f.values()) {
            assert!((s + p * v).abs() < 1e-12);
        }
        assert!(r.max_residual < 1e-3);
    }

    #[test]
    fn restart_operators_match_their_symbols() {
        let f = gaussian(4096);
        for mu in [
            RestartMeasure::point_mass(Point::on_line(1.0), 1.0).unwrap(),
            RestartMeasure::point_mass(Point::on_line(0.5), 2.0).unwrap(),
            RestartMeasure::uniform_interval(0.5, 1.5, 1.0).unwrap(),
        ] {
            let r = dtn_compare(&f, &mu).unwrap();
            assert!(r.max_residual < 5e-3, "{}", r.max_residual);
            assert!(r.pairing < 0.0);
        }
    }

    #[test]
    fn random_fields_pair_negatively() {
        let mu = RestartMeasure::point_mass(Point::on_line(1.0), 1.0).unwrap();
        for i in 0..5 {
            let f = random_smooth_field(3, i, 40.0, 1024).unwrap();
            assert!(dtn_compare(&f, &mu).unwrap().pairing <= 0.0);
        }
    }
}
