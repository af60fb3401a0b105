//! Reflecting domains.
//!
//! Every domain answers three queries: a signed distance (negative strictly
//! inside, zero on the boundary, positive outside), the nearest point of the
//! closure, and the inward unit normal at a boundary point. One-dimensional
//! domains use only the `x` coordinate of [`Point`].

use core::ops::{Add, AddAssign, Mul, Neg, Sub};

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Points farther than this from the boundary are not boundary points.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

/// Two candidate projections closer than this in distance count as a tie.
pub const AMBIGUITY_TOLERANCE: f64 = 1e-12;

/// A point (or vector) in the plane. One-dimensional domains keep `y = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// A point on the real line.
    pub const fn on_line(x: f64) -> Self {
        Point { x, y: 0.0 }
    }

    #[inline]
    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Unit vector in the same direction; the zero vector maps to itself.
    pub fn unit(self) -> Point {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            self
        }
    }

    /// Rotation by +90 degrees.
    #[inline]
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Point {
    #[inline]
    fn add_assign(&mut self, rhs: Point) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point {
    type Output = Point;
    #[inline]
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Two disks joined by a straight neck whose corners are rounded by fillets.
///
/// The boundary is built from circular arcs and segments that meet
/// tangentially, so it is `C¹` with piecewise-constant curvature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DumbbellParams {
    pub chamber_radius: f64,
    pub chamber_centers: [Point; 2],
    /// Half the width `ε` of the neck.
    pub neck_halfwidth: f64,
    pub fillet_radius: f64,
}

impl DumbbellParams {
    /// Unit chambers centred at `(±2, 0)` with fillet radius 0.1.
    pub fn standard(neck_halfwidth: f64) -> Self {
        DumbbellParams {
            chamber_radius: 1.0,
            chamber_centers: [Point::new(-2.0, 0.0), Point::new(2.0, 0.0)],
            neck_halfwidth,
            fillet_radius: 0.1,
        }
    }

    pub fn with_neck_halfwidth(self, neck_halfwidth: f64) -> Self {
        DumbbellParams { neck_halfwidth, ..self }
    }
}

/// A dumbbell with its boundary pieces precomputed in a local frame where the
/// chambers sit at `(±c, 0)`. Queries fold a point into the first quadrant of
/// that frame, which is exact because the shape is symmetric in both axes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dumbbell {
    params: DumbbellParams,
    origin: Point,
    axis: Point,
    half_gap: f64,
    /// x-coordinate where the straight neck ends and the fillet starts.
    neck_end: f64,
    fillet_center: Point,
    /// Tangency point of the fillet with the right chamber.
    junction: Point,
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    point: Point,
    outward: Point,
    distance: f64,
}

impl Dumbbell {
    pub fn new(params: DumbbellParams) -> Result<Self> {
        let r = params.chamber_radius;
        let eps = params.neck_halfwidth;
        let rho = params.fillet_radius;
        let [c1, c2] = params.chamber_centers;
        let half_gap = 0.5 * c1.distance(c2);
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid("chamber_radius", "must be positive"));
        }
        if !(eps > 0.0 && eps < r) {
            return Err(Error::invalid("neck_halfwidth", "must lie in (0, chamber_radius)"));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid("fillet_radius", "must be positive"));
        }
        if half_gap <= r {
            return Err(Error::invalid("chamber_centers", "chambers must be disjoint"));
        }
        let s = ((r + rho).powi(2) - (eps + rho).powi(2)).sqrt();
        let neck_end = half_gap - s;
        if neck_end <= 0.0 {
            return Err(Error::invalid(
                "fillet_radius",
                "fillets from the two chambers overlap; shorten them or separate the chambers",
            ));
        }
        let chamber = Point::new(half_gap, 0.0);
        let fillet_center = Point::new(neck_end, eps + rho);
        let junction = chamber + (fillet_center - chamber) * (r / (r + rho));
        Ok(Dumbbell {
            params,
            origin: (c1 + c2) * 0.5,
            axis: (c2 - c1).unit(),
            half_gap,
            neck_end,
            fillet_center,
            junction,
        })
    }

    pub fn params(&self) -> &DumbbellParams {
        &self.params
    }

    /// Half-length of the straight part of the neck.
    pub fn neck_end(&self) -> f64 {
        self.neck_end
    }

    fn to_local(&self, p: Point) -> Point {
        let d = p - self.origin;
        Point::new(d.dot(self.axis), d.dot(self.axis.perp()))
    }

    fn to_global(&self, q: Point) -> Point {
        self.origin + self.axis * q.x + self.axis.perp() * q.y
    }

    fn vector_to_global(&self, v: Point) -> Point {
        self.axis * v.x + self.axis.perp() * v.y
    }

    /// Cheap sufficient test for strict interiority.
    #[inline]
    fn inside_fast(&self, local: Point) -> bool {
        let ax = local.x.abs();
        let ay = local.y.abs();
        let r = self.params.chamber_radius;
        let dx = ax - self.half_gap;
        dx * dx + ay * ay < r * r || (ax < self.neck_end && ay < self.params.neck_halfwidth)
    }

    /// Nearest points on each boundary piece of the first quadrant, sorted by
    /// distance.
    fn candidates(&self, p: Point) -> [Candidate; 3] {
        let r = self.params.chamber_radius;
        let rho = self.params.fillet_radius;
        let eps = self.params.neck_halfwidth;
        let chamber = Point::new(self.half_gap, 0.0);

        // Chamber arc from angle 0 counter-clockwise to the junction.
        let to_junction = (self.junction - chamber) * (1.0 / r);
        let d = p - chamber;
        let arc = if d.y >= 0.0 && d.cross(to_junction) >= 0.0 && d.norm() > 0.0 {
            let u = d.unit();
            Candidate { point: chamber + u * r, outward: u, distance: (d.norm() - r).abs() }
        } else if d.norm() == 0.0 {
            Candidate { point: chamber + Point::new(r, 0.0), outward: Point::new(1.0, 0.0), distance: r }
        } else {
            Candidate { point: self.junction, outward: to_junction, distance: p.distance(self.junction) }
        };

        // Fillet arc from straight down counter-clockwise to the chamber
        // direction. The domain lies outside this circle.
        let f = self.fillet_center;
        let to_chamber = (chamber - f).unit();
        let d = p - f;
        let fillet = if d.x >= 0.0 && d.cross(to_chamber) >= 0.0 && d.norm() > 0.0 {
            let u = d.unit();
            Candidate { point: f + u * rho, outward: -u, distance: (d.norm() - rho).abs() }
        } else {
            let start = Point::new(self.neck_end, eps);
            let (ds, dj) = (p.distance(start), p.distance(self.junction));
            if ds <= dj {
                Candidate { point: start, outward: Point::new(0.0, 1.0), distance: ds }
            } else {
                Candidate { point: self.junction, outward: to_junction, distance: dj }
            }
        };

        let segment = if p.x <= self.neck_end {
            Candidate {
                point: Point::new(p.x, eps),
                outward: Point::new(0.0, 1.0),
                distance: (p.y - eps).abs(),
            }
        } else {
            let end = Point::new(self.neck_end, eps);
            Candidate { point: end, outward: Point::new(0.0, 1.0), distance: p.distance(end) }
        };

        let mut all = [arc, fillet, segment];
        all.sort_by(|a, b| a.distance.total_cmp(&b.distance));
        all
    }

    /// Returns `(signed distance, nearest boundary point, outward normal, ambiguous)`
    /// in global coordinates.
    fn query(&self, p: Point) -> (f64, Point, Point, bool) {
        let local = self.to_local(p);
        let sx = if local.x < 0.0 { -1.0 } else { 1.0 };
        let sy = if local.y < 0.0 { -1.0 } else { 1.0 };
        let folded = Point::new(local.x.abs(), local.y.abs());
        let [best, second, _] = self.candidates(folded);
        let sign = if (folded - best.point).dot(best.outward) > 0.0 { 1.0 } else { -1.0 };
        let ambiguous = (second.distance - best.distance).abs() < AMBIGUITY_TOLERANCE
            && best.point.distance(second.point) > BOUNDARY_TOLERANCE;
        let unfold = |v: Point| Point::new(sx * v.x, sy * v.y);
        (
            sign * best.distance,
            self.to_global(unfold(best.point)),
            self.vector_to_global(unfold(best.outward)),
            ambiguous,
        )
    }
}

/// A reflecting domain.
#[derive(Clone, Debug, PartialEq)]
pub enum DomainSpec {
    /// The closed interval `[a, b]`.
    Interval { a: f64, b: f64 },
    Disk { center: Point, radius: f64 },
    /// `[0, ∞)`.
    HalfLine,
    /// The upper half-plane `{y ≥ 0}`.
    HalfSpace2D,
    Dumbbell(Dumbbell),
}

impl DomainSpec {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::invalid("interval", "need finite a < b"));
        }
        Ok(DomainSpec::Interval { a, b })
    }

    pub fn unit_interval() -> Self {
        DomainSpec::Interval { a: 0.0, b: 1.0 }
    }

    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid("radius", "must be positive"));
        }
        Ok(DomainSpec::Disk { center, radius })
    }

    pub fn unit_disk() -> Self {
        DomainSpec::Disk { center: Point::ORIGIN, radius: 1.0 }
    }

    pub fn dumbbell(params: DumbbellParams) -> Result<Self> {
        Dumbbell::new(params).map(DomainSpec::Dumbbell)
    }

    pub fn dimension(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } | DomainSpec::HalfLine => 1,
            _ => 2,
        }
    }

    /// Lebesgue measure `|D|` for bounded domains with a closed form.
    pub fn volume(&self) -> Option<f64> {
        match *self {
            DomainSpec::Interval { a, b } => Some(b - a),
            DomainSpec::Disk { radius, .. } => Some(core::f64::consts::PI * radius * radius),
            _ => None,
        }
    }

    /// Surface measure of `∂D` (the counting measure in one dimension).
    pub fn boundary_measure(&self) -> Option<f64> {
        match *self {
            DomainSpec::Interval { .. } => Some(2.0),
            DomainSpec::Disk { radius, .. } => Some(2.0 * core::f64::consts::PI * radius),
            _ => None,
        }
    }

    /// Axis-aligned box containing the closure, for bounded domains.
    pub fn bounding_box(&self) -> Option<(Point, Point)> {
        match self {
            DomainSpec::Interval { a, b } => Some((Point::on_line(*a), Point::on_line(*b))),
            DomainSpec::Disk { center, radius } => Some((
                *center - Point::new(*radius, *radius),
                *center + Point::new(*radius, *radius),
            )),
            DomainSpec::Dumbbell(db) => {
                let [c1, c2] = db.params.chamber_centers;
                let r = db.params.chamber_radius;
                Some((
                    Point::new(c1.x.min(c2.x) - r, c1.y.min(c2.y) - r),
                    Point::new(c1.x.max(c2.x) + r, c1.y.max(c2.y) + r),
                ))
            }
            DomainSpec::HalfLine | DomainSpec::HalfSpace2D => None,
        }
    }

    pub fn signed_distance(&self, p: Point) -> f64 {
        match self {
            DomainSpec::Interval { a, b } => (a - p.x).max(p.x - b),
            DomainSpec::Disk { center, radius } => p.distance(*center) - radius,
            DomainSpec::HalfLine => -p.x,
            DomainSpec::HalfSpace2D => -p.y,
            DomainSpec::Dumbbell(db) => db.query(p).0,
        }
    }

    /// Signed distance to the boundary and the outward unit normal at the
    /// nearest boundary point (an arbitrary choice on the medial axis).
    pub fn boundary_frame(&self, p: Point) -> (f64, Point) {
        match self {
            DomainSpec::Interval { a, b } => {
                if p.x - a <= b - p.x {
                    (a - p.x, Point::on_line(-1.0))
                } else {
                    (p.x - b, Point::on_line(1.0))
                }
            }
            DomainSpec::Disk { center, radius } => {
                let d = p - *center;
                let n = d.norm();
                if n < 1e-300 {
                    (-radius, Point::new(1.0, 0.0))
                } else {
                    (n - radius, d * (1.0 / n))
                }
            }
            DomainSpec::HalfLine => (-p.x, Point::on_line(-1.0)),
            DomainSpec::HalfSpace2D => (-p.y, Point::new(0.0, -1.0)),
            DomainSpec::Dumbbell(db) => {
                let (sd, _, outward, _) = db.query(p);
                (sd, outward)
            }
        }
    }

    /// True when `p` lies in the closed domain.
    pub fn contains(&self, p: Point) -> bool {
        self.signed_distance(p) <= BOUNDARY_TOLERANCE
    }

    /// Nearest point of the closure and the distance moved to reach it.
    ///
    /// Points already in the closure are returned unchanged with zero
    /// displacement.
    pub fn project_to_closure(&self, p: Point) -> Result<(Point, f64)> {
        match self {
            DomainSpec::Interval { a, b } => {
                let x = p.x.clamp(*a, *b);
                Ok((Point::on_line(x), (p.x - x).abs()))
            }
            DomainSpec::Disk { center, radius } => {
                let d = p - *center;
                let n = d.norm();
                if n <= *radius {
                    Ok((p, 0.0))
                } else {
                    Ok((*center + d * (radius / n), n - radius))
                }
            }
            DomainSpec::HalfLine => {
                if p.x >= 0.0 {
                    Ok((p, 0.0))
                } else {
                    Ok((Point::new(0.0, p.y), -p.x))
                }
            }
            DomainSpec::HalfSpace2D => {
                if p.y >= 0.0 {
                    Ok((p, 0.0))
                } else {
                    Ok((Point::new(p.x, 0.0), -p.y))
                }
            }
            DomainSpec::Dumbbell(db) => {
                if db.inside_fast(db.to_local(p)) {
                    return Ok((p, 0.0));
                }
                let (sd, q, _, ambiguous) = db.query(p);
                if sd <= 0.0 {
                    Ok((p, 0.0))
                } else if ambiguous {
                    Err(Error::AmbiguousProjection { x: p.x, y: p.y })
                } else {
                    Ok((q, sd))
                }
            }
        }
    }

    /// Inward unit normal at a boundary point.
    pub fn inward_normal(&self, q: Point) -> Result<Point> {
        let distance = self.signed_distance(q);
        if distance.abs() > BOUNDARY_TOLERANCE {
            return Err(Error::NotOnBoundary { x: q.x, y: q.y, distance });
        }
        Ok(match self {
            DomainSpec::Interval { a, b } => {
                if (q.x - a).abs() <= (q.x - b).abs() {
                    Point::on_line(1.0)
                } else {
                    Point::on_line(-1.0)
                }
            }
            DomainSpec::Disk { center, .. } => (*center - q).unit(),
            DomainSpec::HalfLine => Point::on_line(1.0),
            DomainSpec::HalfSpace2D => Point::new(0.0, 1.0),
            DomainSpec::Dumbbell(db) => -db.query(q).2,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dumbbell(eps: f64) -> DomainSpec {
        DomainSpec::dumbbell(DumbbellParams::standard(eps)).unwrap()
    }

    #[test]
    fn interval_queries() {
        let d = DomainSpec::unit_interval();
        assert!((d.signed_distance(Point::on_line(0.3)) + 0.3).abs() < 1e-15);
        assert_eq!(d.project_to_closure(Point::on_line(-0.2)).unwrap(), (Point::on_line(0.0), 0.2));
        assert_eq!(d.inward_normal(Point::on_line(0.0)).unwrap(), Point::on_line(1.0));
        assert_eq!(d.inward_normal(Point::on_line(1.0)).unwrap(), Point::on_line(-1.0));
        assert!(matches!(
            d.inward_normal(Point::on_line(0.5)),
            Err(Error::NotOnBoundary { .. })
        ));
    }

    #[test]
    fn disk_queries() {
        let d = DomainSpec::unit_disk();
        assert_eq!(d.signed_distance(Point::ORIGIN), -1.0);
        let (q, moved) = d.project_to_closure(Point::new(2.0, 0.0)).unwrap();
        assert_eq!((q, moved), (Point::new(1.0, 0.0), 1.0));
        let n = d.inward_normal(Point::new(0.0, 1.0)).unwrap();
        assert!((n - Point::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn half_line_reflects_at_origin() {
        let d = DomainSpec::HalfLine;
        let (q, moved) = d.project_to_closure(Point::on_line(-0.05)).unwrap();
        assert_eq!(q, Point::on_line(0.0));
        assert!((moved - 0.05).abs() < 1e-17);
    }

    #[test]
    fn dumbbell_neck_center() {
        let d = dumbbell(0.1);
        assert!((d.signed_distance(Point::ORIGIN) + 0.1).abs() < 1e-12);
        assert!((d.signed_distance(Point::new(-2.0, 0.0)) + 1.0).abs() < 1e-12);
        assert!(d.signed_distance(Point::new(0.0, 0.5)) > 0.0);
    }

    #[test]
    fn dumbbell_rejects_bad_params() {
        let p = DumbbellParams::standard(1.2);
        assert!(DomainSpec::dumbbell(p).is_err());
        let p = DumbbellParams { fillet_radius: 0.0, ..DumbbellParams::standard(0.1) };
        assert!(DomainSpec::dumbbell(p).is_err());
    }

    #[test]
    fn dumbbell_fillet_center_is_ambiguous() {
        let d = dumbbell(0.1);
        let DomainSpec::Dumbbell(db) = &d else { unreachable!() };
        let f = db.to_global(db.fillet_center);
        assert!(matches!(d.project_to_closure(f), Err(Error::AmbiguousProjection { .. })));
    }

    #[test]
    fn rotated_dumbbell_matches_axis_aligned() {
        let base = dumbbell(0.2);
        let rot = DomainSpec::dumbbell(DumbbellParams {
            chamber_centers: [Point::new(0.0, -2.0), Point::new(0.0, 2.0)],
            ..DumbbellParams::standard(0.2)
        })
        .unwrap();
        for &(x, y) in &[(0.3, 0.1), (-1.1, 0.25), (2.5, -0.7), (0.0, 0.0), (-2.0, 1.3)] {
            let a = base.signed_distance(Point::new(x, y));
            let b = rot.signed_distance(Point::new(-y, x));
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}
