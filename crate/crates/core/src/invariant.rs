//! Invariant law of the restarted process on `[0, 1]`.
//!
//! The Robin Green function is `G(x, y) = C u_L(x ∧ y) u_R(x ∨ y)` with
//! `u_L(y) = 1 + κy`, `u_R(y) = 1 + κ(1 − y)` and `C = 2 / (κ(2 + κ))`, so
//! `φ(y) = ∫G(x, y) μ(dx)` is a combination of partial moments of `μ`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::DomainSpec;
use crate::measures::RestartMeasure;
use crate::quad::{self, Tolerance};
use crate::sde::Histogram;
use crate::{Error, Result};

/// Gate on the boundary residuals of a suite member.
pub const DOMAIN_GATE: f64 = 1e-8;

fn check_unit(x: f64, y: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y) {
        Ok(())
    } else {
        Err(Error::OutOfDomain { x, y })
    }
}

/// Robin Green function of `−½ d²/dy²` on `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenFunction {
    kappa: f64,
}

impl GreenFunction {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::invalid("kappa", "must be positive"));
        }
        Ok(GreenFunction { kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    fn scale(&self) -> f64 {
        2.0 / (self.kappa * (2.0 + self.kappa))
    }

    fn left(&self, y: f64) -> f64 {
        1.0 + self.kappa * y
    }

    fn right(&self, y: f64) -> f64 {
        1.0 + self.kappa * (1.0 - y)
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        check_unit(x, y)?;
        Ok(self.scale() * self.left(x.min(y)) * self.right(x.max(y)))
    }

    /// `∂_y G(x, y)`, taken from the right at `y = x`.
    pub fn dy(&self, x: f64, y: f64) -> Result<f64> {
        check_unit(x, y)?;
        let c = self.scale();
        Ok(if y < x { c * self.kappa * self.right(x) } else { -c * self.kappa * self.left(x) })
    }

    /// `∂_y G(x, y)` from the left.
    pub fn dy_left(&self, x: f64, y: f64) -> Result<f64> {
        check_unit(x, y)?;
        let c = self.scale();
        Ok(if y <= x { c * self.kappa * self.right(x) } else { -c * self.kappa * self.left(x) })
    }

    /// `∫₀¹ G(x, y) dy`.
    pub fn row_integral(&self, x: f64) -> f64 {
        let k = self.kappa;
        let (xl, xr) = (x, 1.0 - x);
        self.scale() * (self.right(x) * (xl + 0.5 * k * xl * xl) + self.left(x) * (xr + 0.5 * k * xr * xr))
    }

    /// `∫₀ʸ G(x, s) ds`.
    pub fn partial_integral(&self, x: f64, y: f64) -> f64 {
        let k = self.kappa;
        let c = self.scale();
        if y <= x {
            c * self.right(x) * (y + 0.5 * k * y * y)
        } else {
            let through_x = self.right(x) * (x + 0.5 * k * x * x);
            let beyond = (y - x) * (1.0 + k) - 0.5 * k * (y * y - x * x);
            c * (through_x + self.left(x) * beyond)
        }
    }
}

/// `G(x, y)` for the Robin problem with rate `κ`.
pub fn green_interval(kappa: f64, x: f64, y: f64) -> Result<f64> {
    GreenFunction::new(kappa)?.eval(x, y)
}

/// `φ = ∫G(x, ·) μ(dx)` and `π = φ / Z` on a grid.
#[derive(Clone, Debug)]
pub struct InvariantDensity {
    green: GreenFunction,
    measure: RestartMeasure,
    grid: Vec<f64>,
    phi: Vec<f64>,
    normalization: f64,
}

impl InvariantDensity {
    pub fn kappa(&self) -> f64 {
        self.green.kappa
    }

    pub fn measure(&self) -> &RestartMeasure {
        &self.measure
    }

    pub fn green(&self) -> &GreenFunction {
        &self.green
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// `π` on the grid.
    pub fn pi(&self) -> Vec<f64> {
        self.phi.iter().map(|p| p / self.normalization).collect()
    }

    /// `Z = ∫φ`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    fn moment<G: FnMut(f64) -> f64>(&self, mut g: G, y: f64) -> Result<f64> {
        self.measure.integrate_with_breaks(|p| g(p.x), &[y])
    }

    pub fn phi_at(&self, y: f64) -> Result<f64> {
        check_unit(0.0, y)?;
        let g = self.green;
        let below = self.moment(|x| if x <= y { g.left(x) } else { 0.0 }, y)?;
        let above = self.moment(|x| if x > y { g.right(x) } else { 0.0 }, y)?;
        Ok(g.scale() * (g.right(y) * below + g.left(y) * above))
    }

    pub fn density_at(&self, y: f64) -> Result<f64> {
        Ok(self.phi_at(y)? / self.normalization)
    }

    pub fn cdf(&self, y: f64) -> Result<f64> {
        if y <= 0.0 {
            return Ok(0.0);
        }
        if y >= 1.0 {
            return Ok(1.0);
        }
        let g = self.green;
        Ok(self.moment(|x| g.partial_integral(x, y), y)? / self.normalization)
    }

    pub fn inverse_cdf(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid("p", "must lie in [0, 1]"));
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid)? < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `∫g π` split at the kinks of `φ`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut g: F) -> Result<f64> {
        let breaks = self.measure.breakpoints_1d();
        let mut failure = None;
        let v = quad::integrate_with_breaks(
            |y| match self.phi_at(y) {
                Ok(p) => g(y) * p,
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            },
            0.0,
            1.0,
            &breaks,
            Tolerance::new(1e-14, 1e-12),
        )?;
        match failure {
            Some(e) => Err(e),
            None => Ok(v / self.normalization),
        }
    }
}

/// Invariant density of the restarted process on `[0, 1]` with `κ = μ([0, 1])`.
pub fn invariant_density(measure: &RestartMeasure, kappa: f64, grid: &[f64]) -> Result<InvariantDensity> {
    let mass = measure.total_mass();
    if (kappa - mass).abs() > 1e-12 * mass.max(1.0) {
        return Err(Error::invalid("kappa", alloc::format!("{kappa} differs from the restart mass {mass}")));
    }
    measure.check_support(&DomainSpec::unit_interval())?;
    let green = GreenFunction::new(kappa)?;
    let normalization = measure.integrate(|p| green.row_integral(p.x))?;
    let mut density = InvariantDensity { green, measure: measure.clone(), grid: Vec::new(), phi: Vec::new(), normalization };
    let mut phi = Vec::with_capacity(grid.len());
    for &y in grid {
        phi.push(density.phi_at(y)?);
    }
    density.grid = grid.to_vec();
    density.phi = phi;
    Ok(density)
}

/// `n` equally spaced points covering `[0, 1]`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    let last = (n.max(2) - 1) as f64;
    (0..n.max(2)).map(|i| i as f64 / last).collect()
}

/// `φ(0) + φ(1)`.
pub fn boundary_mass(density: &InvariantDensity) -> Result<f64> {
    Ok(density.phi_at(0.0)? + density.phi_at(1.0)?)
}

/// A polynomial `Σ c_k y^k` on `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Polynomial { coeffs }
    }

    pub fn monomial(degree: usize) -> Self {
        let mut coeffs = alloc::vec![0.0; degree + 1];
        coeffs[degree] = 1.0;
        Polynomial { coeffs }
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c)
    }

    pub fn derivative(&self) -> Polynomial {
        let coeffs = self.coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
        Polynomial { coeffs }
    }

    fn add_scaled(&mut self, other: &Polynomial, s: f64) {
        if self.coeffs.len() < other.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), 0.0);
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    /// `f'(0) + ∫(f − f(0)) dμ` and `−f'(1) + ∫(f − f(1)) dμ`.
    pub fn boundary_residuals(&self, measure: &RestartMeasure) -> Result<[f64; 2]> {
        let d = self.derivative();
        let m = measure.integrate(|p| self.eval(p.x))?;
        let k = measure.total_mass();
        Ok([d.eval(0.0) + m - k * self.eval(0.0), -d.eval(1.0) + m - k * self.eval(1.0)])
    }
}

/// Corrects `g` by `a y³ + b (1 − y)³` so that both boundary residuals vanish.
pub fn into_domain(g: &Polynomial, measure: &RestartMeasure) -> Result<Polynomial> {
    let p1 = Polynomial::monomial(3);
    let p2 = Polynomial::new(alloc::vec![1.0, -3.0, 3.0, -1.0]);
    let [r0, r1] = g.boundary_residuals(measure)?;
    let [a00, a10] = p1.boundary_residuals(measure)?;
    let [a01, a11] = p2.boundary_residuals(measure)?;
    let det = a00 * a11 - a01 * a10;
    if det.abs() < 1e-12 {
        return Err(Error::invalid("suite", "boundary correction is singular for this measure"));
    }
    let a = (-r0 * a11 + r1 * a01) / det;
    let b = (-r1 * a00 + r0 * a10) / det;
    let mut f = g.clone();
    f.add_scaled(&p1, a);
    f.add_scaled(&p2, b);
    Ok(f)
}

/// The corrected monomials of degree 2 through 6.
pub fn domain_suite(measure: &RestartMeasure) -> Result<Vec<Polynomial>> {
    (2..=6).map(|k| into_domain(&Polynomial::monomial(k), measure)).collect()
}

/// `∫½f'' dπ` with no domain check.
pub fn stationarity_integral(f: &Polynomial, density: &InvariantDensity) -> Result<f64> {
    let f2 = f.derivative().derivative();
    density.integrate(|y| 0.5 * f2.eval(y))
}

/// `max |∫½f'' dπ|` over a suite whose members must satisfy the boundary
/// condition of `measure`.
pub fn stationarity_residual(suite: &[Polynomial], measure: &RestartMeasure, density: &InvariantDensity) -> Result<f64> {
    let mut worst = 0.0f64;
    for (index, f) in suite.iter().enumerate() {
        let [r0, r1] = f.boundary_residuals(measure)?;
        let residual = r0.abs().max(r1.abs());
        if residual > DOMAIN_GATE {
            return Err(Error::SuiteMemberNotInDomain { index, residual });
        }
        worst = worst.max(stationarity_integral(f, density)?.abs());
    }
    Ok(worst)
}

/// Kolmogorov–Smirnov distance between a histogram and `π`, read at the bin
/// edges.
pub fn long_run_distance(hist: &Histogram, density: &InvariantDensity) -> Result<f64> {
    let total = hist.total() as f64;
    if total == 0.0 {
        return Err(Error::invalid("histogram", "is empty"));
    }
    let edges = hist.edges();
    let mut acc = 0u64;
    let mut worst = (density.cdf(edges[0])?).abs();
    for (i, &c) in hist.counts.iter().enumerate() {
        acc += c;
        let d = (acc as f64 / total - density.cdf(edges[i + 1])?).abs();
        worst = worst.max(d);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::rng::{path_rng, uniform};
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn pairs() -> Vec<(f64, RestartMeasure)> {
        alloc::vec![
            (1.0, RestartMeasure::point_mass(Point::on_line(0.5), 1.0).unwrap()),
            (2.0, RestartMeasure::atoms(alloc::vec![(Point::on_line(0.3), 1.0), (Point::on_line(0.7), 1.0)]).unwrap()),
            (0.5, RestartMeasure::uniform_interval(0.2, 0.8, 0.5).unwrap()),
        ]
    }

    #[test]
    fn green_symmetry_jump_and_robin() {
        let g = GreenFunction::new(1.3).unwrap();
        for &(x, y) in &[(0.3, 0.7), (0.1, 0.95), (0.5, 0.5)] {
            assert!((g.eval(x, y).unwrap() - g.eval(y, x).unwrap()).abs() < 1e-10);
        }
        for &x in &[0.2, 0.5, 0.9] {
            let jump = g.dy(x, x).unwrap() - g.dy_left(x, x).unwrap();
            assert!((jump + 2.0).abs() < 1e-12);
            let left = g.dy(x, 0.0).unwrap() - g.kappa() * g.eval(x, 0.0).unwrap();
            let right = -g.dy(x, 1.0).unwrap() - g.kappa() * g.eval(x, 1.0).unwrap();
            assert!(left.abs() < 1e-10 && right.abs() < 1e-10);
        }
        assert!(matches!(g.eval(1.2, 0.5), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn green_matches_finite_differences() {
        // Nodes y_i = i/(n−1); ghost-point Robin closures at both ends.
        let kappa = 1.0;
        let n = 1000;
        let dy = 1.0 / (n - 1) as f64;
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 1.0 / (dy * dy);
            if i > 0 {
                a[(i, i - 1)] = -0.5 / (dy * dy);
            }
            if i + 1 < n {
                a[(i, i + 1)] = -0.5 / (dy * dy);
            }
        }
        // u_{−1} = u_1 − 2Δy κ u_0 folds into the first and last rows.
        a[(0, 1)] = -1.0 / (dy * dy);
        a[(0, 0)] += kappa / dy;
        a[(n - 1, n - 2)] = -1.0 / (dy * dy);
        a[(n - 1, n - 1)] += kappa / dy;
        let mid = (n - 1) / 2;
        let mut rhs = DVector::<f64>::zeros(n);
        let x = mid as f64 * dy;
        rhs[mid] = 1.0 / dy;
        let u = a.lu().solve(&rhs).unwrap();
        let exact = green_interval(kappa, x, x).unwrap();
        assert!((u[mid] - exact).abs() / exact < 2e-3, "{} vs {exact}", u[mid]);
    }

    #[test]
    fn s_identity_and_normalization() {
        for (kappa, mu) in pairs() {
            let d = invariant_density(&mu, kappa, &uniform_grid(201)).unwrap();
            assert!((boundary_mass(&d).unwrap() - 2.0).abs() < 1e-9);
            assert!((d.integrate(|_| 1.0).unwrap() - 1.0).abs() < 1e-10);
            assert!((d.cdf(1.0 - 1e-15).unwrap() - 1.0).abs() < 1e-10);
            assert!(d.phi()[1..200].iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn atom_gives_green_row() {
        let mu = RestartMeasure::point_mass(Point::on_line(0.5), 1.0).unwrap();
        let d = invariant_density(&mu, 1.0, &uniform_grid(11)).unwrap();
        for (&y, &p) in d.grid().iter().zip(d.phi()) {
            assert!((p - green_interval(1.0, 0.5, y).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn cdf_matches_quadrature_of_density() {
        for (kappa, mu) in pairs() {
            let d = invariant_density(&mu, kappa, &[]).unwrap();
            for &y in &[0.15, 0.4, 0.77] {
                let q = quad::integrate_with_breaks(|s| d.density_at(s).unwrap(), 0.0, y, &mu.breakpoints_1d(), Tolerance::new(1e-13, 1e-11)).unwrap();
                assert!((d.cdf(y).unwrap() - q).abs() < 1e-9);
                assert!((d.inverse_cdf(d.cdf(y).unwrap()).unwrap() - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn suite_is_in_domain_and_stationary() {
        for (kappa, mu) in pairs() {
            let d = invariant_density(&mu, kappa, &[]).unwrap();
            let suite = domain_suite(&mu).unwrap();
            for f in &suite {
                let [r0, r1] = f.boundary_residuals(&mu).unwrap();
                assert!(r0.abs() < 1e-12 && r1.abs() < 1e-12);
            }
            assert!(stationarity_residual(&suite, &mu, &d).unwrap() < 1e-6);
            let one = Polynomial::new(alloc::vec![1.0]);
            assert_eq!(stationarity_residual(&[one], &mu, &d).unwrap(), 0.0);
        }
    }

    #[test]
    fn broken_member_is_detected() {
        let mu = RestartMeasure::point_mass(Point::on_line(0.5), 1.0).unwrap();
        let d = invariant_density(&mu, 1.0, &[]).unwrap();
        let mut f = into_domain(&Polynomial::monomial(4), &mu).unwrap();
        // y² has residuals (0.25, −2.75) for this measure.
        f.add_scaled(&Polynomial::monomial(2), 0.1 / 2.75);
        let [r0, r1] = f.boundary_residuals(&mu).unwrap();
        let residual = r0.abs().max(r1.abs());
        assert!(residual > 0.05);
        assert!(stationarity_integral(&f, &d).unwrap().abs() > 1e-3);
        assert!(matches!(stationarity_residual(&[f], &mu, &d), Err(Error::SuiteMemberNotInDomain { index: 0, .. })));
    }

    #[test]
    fn exact_samples_are_close_and_wrong_kappa_is_not() {
        let mu = RestartMeasure::point_mass(Point::on_line(0.5), 1.0).unwrap();
        let d = invariant_density(&mu, 1.0, &[]).unwrap();
        let wrong = invariant_density(&mu.scaled(0.5).unwrap(), 0.5, &[]).unwrap();
        let mut hist = Histogram { lo: 0.0, hi: 1.0, counts: alloc::vec![0; 200] };
        let mut rng = path_rng(99, 0);
        // Inverse-CDF draws through a fine table of the exact CDF.
        let table: Vec<f64> = (0..=4096).map(|i| d.inverse_cdf(i as f64 / 4096.0).unwrap()).collect();
        for _ in 0..1_000_000 {
            let u = uniform(&mut rng) * 4096.0;
            let i = (u as usize).min(4095);
            let y = table[i] + (u - i as f64) * (table[i + 1] - table[i]);
            hist.counts[((y * 200.0) as usize).min(199)] += 1;
        }
        let ks = long_run_distance(&hist, &d).unwrap();
        let ks_wrong = long_run_distance(&hist, &wrong).unwrap();
        assert!(ks < 2e-3, "{ks}");
        assert!(ks_wrong > 5.0 * ks, "{ks_wrong} vs {ks}");
    }

    #[test]
    fn rejects_mismatched_kappa_and_boundary_support() {
        let mu = RestartMeasure::point_mass(Point::on_line(0.5), 1.0).unwrap();
        assert!(invariant_density(&mu, 2.0, &[]).is_err());
        let edge = RestartMeasure::point_mass(Point::on_line(0.0), 1.0).unwrap();
        assert!(invariant_density(&edge, 1.0, &[]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn scale_coherence(rho in 0.2f64..5.0, at in 0.05f64..0.95) {
            let mu = RestartMeasure::atoms(alloc::vec![(Point::on_line(at), 0.7), (Point::on_line(0.5), 0.3)]).unwrap();
            let scaled = mu.scaled(rho).unwrap();
            let d = invariant_density(&scaled, rho, &[]).unwrap();
            prop_assert!((boundary_mass(&d).unwrap() - 2.0).abs() < 1e-9);
            prop_assert!((d.integrate(|_| 1.0).unwrap() - 1.0).abs() < 1e-10);
        }
    }
}
