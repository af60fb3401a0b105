//! The renewal equation for `c(t)` and the spectral series built on it.
//!
//! The kernel `Σ_j (γ_jα_jλ_j/κ) e^{−λ_j t}` is integrated exactly against
//! the piecewise-linear interpolant of `c` (product trapezoid rule). Modes
//! with `λ_j δt ≫ 1` make `c` vary on scales far below `δt` near `t = 0`, so
//! the march starts on a geometrically graded mesh that resolves the fastest
//! retained mode and switches to the uniform grid at a fixed time. The graded
//! part is the same for every `δt` dividing that time, so refining `δt` only
//! changes the uniform part.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{CoefficientSet, SpectralBasis};
use crate::geometry::Point;
use crate::{Error, Result};

/// Where the graded start hands over to the uniform grid.
const GRADED_UNTIL: f64 = 0.04;
/// Ratio of successive steps on the graded start.
const GRADING: f64 = 1.01;

/// The forcing series is not yet negligible at the last retained mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationWarning {
    pub last_term: f64,
    pub partial_sum: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Exact kernel against the linear interpolant of `c`; second order.
    ProductTrapezoid,
    /// Exact kernel against the left-endpoint value of `c`; first order.
    Rectangle,
}

/// `c(t)` on a uniform grid of step `δt`.
///
/// The solver's internal mesh is kept so that convolutions and transforms
/// can reuse exactly the values it marched on.
#[derive(Clone, Debug, PartialEq)]
pub struct CtSolution {
    dt: f64,
    horizon: f64,
    mesh: Vec<f64>,
    mesh_values: Vec<f64>,
    pub warning: Option<TruncationWarning>,
}

impl CtSolution {
    /// `c ≡ value` on `[0, horizon]`.
    pub fn constant(value: f64, horizon: f64, dt: f64) -> Self {
        let n = (horizon / dt).round().max(1.0) as usize;
        let mesh: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
        CtSolution { dt, horizon: mesh[n], mesh_values: vec![value; n + 1], mesh, warning: None }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of uniform grid points, `t = 0` included.
    pub fn len(&self) -> usize {
        (self.horizon / self.dt).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| i as f64 * self.dt).collect()
    }

    /// Values on the uniform grid.
    pub fn values(&self) -> Vec<f64> {
        self.times().into_iter().map(|t| self.value_at(t)).collect()
    }

    /// Linear interpolation of the solver's values; clamps outside `[0, T]`.
    pub fn value_at(&self, t: f64) -> f64 {
        let m = &self.mesh;
        if t <= 0.0 {
            return self.mesh_values[0];
        }
        let i = m.partition_point(|&s| s <= t);
        if i >= m.len() {
            return *self.mesh_values.last().unwrap_or(&0.0);
        }
        let (a, b) = (m[i - 1], m[i]);
        let w = (t - a) / (b - a);
        self.mesh_values[i - 1] * (1.0 - w) + self.mesh_values[i] * w
    }

    pub fn sup_abs(&self) -> f64 {
        self.mesh_values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// `(∫₀^δ e^{−λu}(1 − u/δ) du, ∫₀^δ e^{−λu} u/δ du)`.
pub(crate) fn linear_exp_weights(lambda: f64, delta: f64) -> (f64, f64) {
    let a = lambda * delta;
    if a.abs() < 1e-3 {
        let near = delta * (0.5 - a / 6.0 + a * a / 24.0 - a * a * a / 120.0);
        let far = delta * (0.5 - a / 3.0 + a * a / 8.0 - a * a * a / 30.0);
        return (near, far);
    }
    let one_minus_e = -(-a).exp_m1();
    let near = 1.0 / lambda - one_minus_e / (lambda * a);
    let far = one_minus_e / lambda - near;
    (near, far)
}

/// `∫₀^δ e^{−λu} du`.
fn exp_integral(lambda: f64, delta: f64) -> f64 {
    let a = lambda * delta;
    if a.abs() < 1e-8 {
        delta * (1.0 - 0.5 * a)
    } else {
        -(-a).exp_m1() / lambda
    }
}

fn build_mesh(horizon: f64, dt: f64, fastest: f64) -> Vec<f64> {
    let k = (GRADED_UNTIL / dt - 1e-6).ceil().max(0.0) as usize;
    let switch = (k as f64 * dt).min(horizon);
    let mut mesh = vec![0.0];
    let mut step = (1e-3 / fastest.max(1.0)).min(dt);
    let mut t = step;
    while t < switch * (1.0 - 1e-9) {
        mesh.push(t);
        step = (step * GRADING).min(dt);
        t += step;
    }
    if switch > 0.0 {
        mesh.push(switch);
    }
    let n = (horizon / dt).round() as usize;
    for i in (k + 1)..=n {
        mesh.push(i as f64 * dt);
    }
    mesh
}

/// Solves for `c` on `[0, horizon]` with the product trapezoid rule.
pub fn solve_volterra(basis: &SpectralBasis, coeffs: &CoefficientSet, horizon: f64, dt: f64) -> Result<CtSolution> {
    solve_volterra_with(basis, coeffs, horizon, dt, Scheme::ProductTrapezoid)
}

pub fn solve_volterra_with(
    basis: &SpectralBasis,
    coeffs: &CoefficientSet,
    horizon: f64,
    dt: f64,
    scheme: Scheme,
) -> Result<CtSolution> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("T", "must be positive"));
    }
    if !(dt > 0.0 && dt <= horizon / 100.0 * (1.0 + 1e-12)) {
        return Err(Error::invalid("dt", "need 0 < δt ≤ T/100"));
    }
    if coeffs.len() != basis.len() {
        return Err(Error::invalid("coefficients", "length differs from the basis"));
    }
    let kappa = basis.kappa();
    let lambda = basis.eigenvalues();
    let forcing_coef: Vec<f64> = coeffs.f.iter().zip(&coeffs.alpha).map(|(f, a)| f * a).collect();
    let beta: Vec<f64> =
        basis.pairs().iter().zip(&coeffs.alpha).map(|(p, a)| p.gamma * a * p.lambda / kappa).collect();
    let forcing = |t: f64| -> f64 { forcing_coef.iter().zip(&lambda).map(|(c, l)| c * (-l * t).exp()).sum() };

    let partial_sum: f64 = forcing_coef.iter().sum();
    let last_term = *forcing_coef.last().unwrap_or(&0.0);
    let warning = (last_term.abs() > 1e-6 * partial_sum.abs()).then_some(TruncationWarning { last_term, partial_sum });

    let fastest = lambda.iter().copied().fold(0.0, f64::max);
    let mesh = match scheme {
        Scheme::ProductTrapezoid => build_mesh(horizon, dt, fastest),
        Scheme::Rectangle => {
            let n = (horizon / dt).round() as usize;
            (0..=n).map(|i| i as f64 * dt).collect()
        }
    };
    let mut values = Vec::with_capacity(mesh.len());
    values.push(forcing(0.0));
    let mut conv = vec![0.0; lambda.len()];
    for w in mesh.windows(2) {
        let delta = w[1] - w[0];
        let c_prev = *values.last().unwrap_or(&0.0);
        let mut known = forcing(w[1]);
        let mut implicit = 0.0;
        let mut weights = Vec::with_capacity(lambda.len());
        for j in 0..lambda.len() {
            let e = (-lambda[j] * delta).exp();
            let (near, far) = match scheme {
                Scheme::ProductTrapezoid => linear_exp_weights(lambda[j], delta),
                Scheme::Rectangle => (0.0, exp_integral(lambda[j], delta)),
            };
            known += beta[j] * (e * conv[j] + far * c_prev);
            implicit += beta[j] * near;
            weights.push((e, near, far));
        }
        let c_next = known / (1.0 - implicit);
        for (j, (e, near, far)) in weights.into_iter().enumerate() {
            conv[j] = e * conv[j] + far * c_prev + near * c_next;
        }
        values.push(c_next);
    }
    let horizon = *mesh.last().unwrap_or(&horizon);
    Ok(CtSolution { dt, horizon, mesh, mesh_values: values, warning })
}

/// Per-mode amplitudes `u_j(t)` of the series at time `t`.
pub fn mode_amplitudes(basis: &SpectralBasis, coeffs: &CoefficientSet, c: &CtSolution, t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::invalid("t", "must be nonnegative"));
    }
    if t > c.horizon * (1.0 + 1e-12) {
        return Err(Error::HorizonExceeded { t, horizon: c.horizon });
    }
    let kappa = basis.kappa();
    let mut out = Vec::with_capacity(basis.len());
    for (j, p) in basis.pairs().iter().enumerate() {
        let lam = p.lambda;
        let mut conv = 0.0;
        let mut s = 0.0;
        let mut c_prev = c.mesh_values[0];
        for (i, w) in c.mesh.windows(2).enumerate() {
            if w[0] >= t {
                break;
            }
            let end = w[1].min(t);
            let delta = end - w[0];
            let c_end = if end < w[1] { c.value_at(end) } else { c.mesh_values[i + 1] };
            let (near, far) = linear_exp_weights(lam, delta);
            conv = (-lam * delta).exp() * conv + far * c_prev + near * c_end;
            c_prev = c_end;
            s = end;
        }
        debug_assert!((s - t).abs() <= 1e-9 * (1.0 + t) || t == 0.0);
        out.push((-lam * t).exp() * coeffs.f[j] + p.gamma / kappa * lam * conv);
    }
    Ok(out)
}

/// The truncated series `u(t, x)`.
pub fn evaluate_solution(
    basis: &SpectralBasis,
    coeffs: &CoefficientSet,
    c: &CtSolution,
    t: f64,
    x: Point,
) -> Result<f64> {
    let amps = mode_amplitudes(basis, coeffs, c, t)?;
    Ok(basis.synthesize(&amps, x))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplacePoint {
    pub z: f64,
    pub numeric: f64,
    pub closed_form: f64,
    pub relative_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LaplaceReport {
    pub points: Vec<LaplacePoint>,
    pub max_residual: f64,
}

/// Compares the numerical Laplace transform of `c` with
///
/// ```text
/// c̃(z) = Σ α_j f_j/(z + λ_j) / (1 − Σ (γ_jα_j/κ) λ_j/(z + λ_j)).
/// ```
///
/// The transform integrates the piecewise-linear interpolant exactly and
/// continues `c` past the horizon by its final value (the stationary mode),
/// adding `c(T)e^{−zT}/z`.
pub fn laplace_check(c: &CtSolution, basis: &SpectralBasis, coeffs: &CoefficientSet, z_list: &[f64]) -> Result<LaplaceReport> {
    let kappa = basis.kappa();
    let mut points = Vec::with_capacity(z_list.len());
    let mut max_residual: f64 = 0.0;
    for &z in z_list {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::invalid("z", "must be positive"));
        }
        let mut body = 0.0;
        for (i, w) in c.mesh.windows(2).enumerate() {
            let (near, far) = linear_exp_weights(z, w[1] - w[0]);
            body += (-z * w[0]).exp() * (near * c.mesh_values[i] + far * c.mesh_values[i + 1]);
        }
        let last = *c.mesh_values.last().unwrap_or(&0.0);
        let tail = last * (-z * c.horizon).exp() / z;
        let numeric = body + tail;
        if tail.abs() > 1e-6 * numeric.abs() {
            return Err(Error::TailNotResolved { z, ratio: (tail / numeric).abs() });
        }
        let mut num = 0.0;
        let mut den = 1.0;
        for (j, p) in basis.pairs().iter().enumerate() {
            num += coeffs.alpha[j] * coeffs.f[j] / (z + p.lambda);
            den -= p.gamma * coeffs.alpha[j] / kappa * p.lambda / (z + p.lambda);
        }
        let closed_form = num / den;
        let relative_residual = if closed_form == 0.0 { numeric.abs() } else { ((numeric - closed_form) / closed_form).abs() };
        max_residual = max_residual.max(relative_residual);
        points.push(LaplacePoint { z, numeric, closed_form, relative_residual });
    }
    Ok(LaplaceReport { points, max_residual })
}
