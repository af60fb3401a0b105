//! Experiment configuration files.
//!
//! A config is a TOML document with top-level `experiment`, `seed` and an
//! optional `output` directory, a `[domain]` table, a `[measure]` table and a
//! `[params]` table whose keys depend on the experiment. Missing parameters
//! take defaults, unknown keys are rejected, and every problem found is
//! reported with its key path rather than stopping at the first one.
//!
//! Points are plain numbers on one-dimensional domains and `[x, y]` pairs on
//! two-dimensional ones.
//!
//! ```toml
//! experiment = "compare"
//! seed = 7
//!
//! [domain]
//! kind = "interval"
//! a = 0.0
//! b = 1.0
//!
//! [measure]
//! kind = "point_mass"
//! at = 0.5
//! weight = 1.0
//!
//! [params]
//! function = "sin_pi_plus_one"
//! n_paths = 4000
//! ```

use std::fmt;

use elastic_jump_core::measures::MeasureKind;
use elastic_jump_core::{DomainSpec, DumbbellParams, Point, RestartMeasure};
use toml::{Table, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    Simulate,
    Spectral,
    Invariant,
    Trace,
    Escape,
    Compare,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Simulate,
        Experiment::Spectral,
        Experiment::Invariant,
        Experiment::Trace,
        Experiment::Escape,
        Experiment::Compare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Spectral => "spectral",
            Experiment::Invariant => "invariant",
            Experiment::Trace => "trace",
            Experiment::Escape => "escape",
            Experiment::Compare => "compare",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

/// Initial data `f` for the heat problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestFunction {
    One,
    /// `sin(πx) + 1`.
    SinPiPlusOne,
    /// `cos(πx)`.
    CosPi,
    /// `x² + y²`.
    Quadratic,
}

impl TestFunction {
    pub const ALL: [TestFunction; 4] =
        [TestFunction::One, TestFunction::SinPiPlusOne, TestFunction::CosPi, TestFunction::Quadratic];

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::One => "one",
            TestFunction::SinPiPlusOne => "sin_pi_plus_one",
            TestFunction::CosPi => "cos_pi",
            TestFunction::Quadratic => "quadratic",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }

    pub fn eval(self, p: Point) -> f64 {
        use std::f64::consts::PI;
        match self {
            TestFunction::One => 1.0,
            TestFunction::SinPiPlusOne => (PI * p.x).sin() + 1.0,
            TestFunction::CosPi => (PI * p.x).cos(),
            TestFunction::Quadratic => p.norm_sq(),
        }
    }

    /// An upper bound for `sup |f|` over a bounded domain.
    pub fn sup_bound(self, domain: &DomainSpec) -> f64 {
        match self {
            TestFunction::One | TestFunction::CosPi => 1.0,
            TestFunction::SinPiPlusOne => 2.0,
            TestFunction::Quadratic => match domain.bounding_box() {
                Some((lo, hi)) => [lo, hi, Point::new(lo.x, hi.y), Point::new(hi.x, lo.y)]
                    .iter()
                    .fold(0.0, |m, p| m.max(p.norm_sq())),
                None => f64::INFINITY,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulateParams {
    pub x0: Point,
    pub t_end: f64,
    pub h: f64,
    pub n_paths: usize,
    /// Increments per path for the `Exp(κ)` test. Paths keep running past
    /// `t_end` until they have this many, so the sample is not length-biased.
    pub ks_jumps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralParams {
    pub function: TestFunction,
    pub modes: usize,
    pub dt: f64,
    pub horizon: f64,
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    pub laplace_z: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvariantParams {
    pub grid: usize,
    /// Occupation paths; `0` skips the simulation.
    pub n_paths: usize,
    pub x0: Point,
    pub t_end: f64,
    pub burn_in: f64,
    pub h: f64,
    pub bins: usize,
    pub stride: usize,
    pub ks_gate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceParams {
    pub level: f64,
    pub horizon: f64,
    pub h: f64,
    pub n_paths: usize,
    pub lambdas: Vec<f64>,
    pub resamples: usize,
    /// Measure the `κ = 0` constant instead of assuming it is 1.
    pub calibrate: bool,
    /// Grid size for the half-plane operator; `0` skips it.
    pub dtn_points: usize,
    pub dtn_length: f64,
    pub dtn_fields: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EscapeParams {
    pub target_center: Point,
    pub target_radius: f64,
    pub core_center: Point,
    pub core_radius: f64,
    pub eps_grid: Vec<f64>,
    pub n_paths: usize,
    pub h: f64,
    pub horizon: f64,
    /// Start of the reflected sweep.
    pub x0: Point,
    pub reflected: bool,
    pub jump: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareParams {
    pub function: TestFunction,
    pub modes: usize,
    pub dt: f64,
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    pub n_paths: usize,
    pub h: f64,
    /// Largest tolerated `|u_spectral − u_MC| / σ`.
    pub z_gate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Params {
    Simulate(SimulateParams),
    Spectral(SpectralParams),
    Invariant(InvariantParams),
    Trace(TraceParams),
    Escape(EscapeParams),
    Compare(CompareParams),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output: Option<String>,
    pub domain: DomainSpec,
    pub measure: RestartMeasure,
    pub params: Params,
}

impl ExperimentConfig {
    /// `κ = μ(D)`.
    pub fn kappa(&self) -> f64 {
        self.measure.total_mass()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.key, self.message)
        }
    }
}

/// Everything wrong with a config, in document order.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ValidationErrors(pub Vec<ValidationError>);

impl ValidationErrors {
    pub fn single(key: &str, message: impl Into<String>) -> Self {
        ValidationErrors(vec![ValidationError { key: key.into(), message: message.into() }])
    }

    pub fn mentions(&self, key: &str) -> bool {
        self.0.iter().any(|e| e.key == key)
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Typed access to one table, remembering which keys were read.
struct Fields<'a> {
    prefix: &'static str,
    table: Option<&'a Table>,
    used: Vec<&'static str>,
    errors: Vec<ValidationError>,
}

impl<'a> Fields<'a> {
    fn new(prefix: &'static str, table: Option<&'a Table>) -> Self {
        Fields { prefix, table, used: Vec::new(), errors: Vec::new() }
    }

    fn path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    fn error(&mut self, key: &str, message: impl Into<String>) {
        let key = self.path(key);
        self.errors.push(ValidationError { key, message: message.into() });
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.push(key);
        self.table.and_then(|t| t.get(key))
    }

    fn required<T>(&mut self, key: &'static str, default: Option<T>) -> Option<T> {
        if default.is_none() {
            self.error(key, "is required");
        }
        default
    }

    fn float(&mut self, key: &'static str, default: Option<f64>) -> Option<f64> {
        match self.raw(key) {
            None => self.required(key, default),
            Some(v) => match as_float(v) {
                Some(x) if x.is_finite() => Some(x),
                _ => {
                    self.error(key, "must be a finite number");
                    None
                }
            },
        }
    }

    fn positive(&mut self, key: &'static str, default: Option<f64>) -> Option<f64> {
        let x = self.float(key, default)?;
        if x > 0.0 {
            Some(x)
        } else {
            self.error(key, format!("must be positive, got {x}"));
            None
        }
    }

    fn count(&mut self, key: &'static str, default: Option<usize>) -> Option<usize> {
        match self.raw(key) {
            None => self.required(key, default),
            Some(Value::Integer(n)) if *n >= 0 => Some(*n as usize),
            Some(_) => {
                self.error(key, "must be a nonnegative integer");
                None
            }
        }
    }

    fn positive_count(&mut self, key: &'static str, default: Option<usize>) -> Option<usize> {
        let n = self.count(key, default)?;
        if n > 0 {
            Some(n)
        } else {
            self.error(key, "must be at least 1");
            None
        }
    }

    fn text(&mut self, key: &'static str, default: Option<&str>) -> Option<String> {
        match self.raw(key) {
            None => self.required(key, default.map(str::to_string)),
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                self.error(key, "must be a string");
                None
            }
        }
    }

    fn flag(&mut self, key: &'static str, default: bool) -> Option<bool> {
        match self.raw(key) {
            None => Some(default),
            Some(Value::Boolean(b)) => Some(*b),
            Some(_) => {
                self.error(key, "must be true or false");
                None
            }
        }
    }

    fn floats(&mut self, key: &'static str, default: Option<Vec<f64>>) -> Option<Vec<f64>> {
        match self.raw(key) {
            None => self.required(key, default),
            Some(Value::Array(items)) => {
                let xs: Option<Vec<f64>> = items.iter().map(|v| as_float(v).filter(|x| x.is_finite())).collect();
                if xs.is_none() {
                    self.error(key, "must be a list of finite numbers");
                }
                xs
            }
            Some(_) => {
                self.error(key, "must be a list of numbers");
                None
            }
        }
    }

    fn point(&mut self, key: &'static str, dim: usize, default: Option<Point>) -> Option<Point> {
        match self.raw(key) {
            None => self.required(key, default),
            Some(v) => {
                let p = as_point(v, dim);
                if p.is_none() {
                    self.error(key, point_shape(dim));
                }
                p
            }
        }
    }

    fn points(&mut self, key: &'static str, dim: usize, default: Option<Vec<Point>>) -> Option<Vec<Point>> {
        match self.raw(key) {
            None => self.required(key, default),
            Some(Value::Array(items)) => {
                let ps: Option<Vec<Point>> = items.iter().map(|v| as_point(v, dim)).collect();
                if ps.is_none() {
                    self.error(key, format!("must be a list where each entry {}", &point_shape(dim)[5..]));
                }
                ps
            }
            Some(_) => {
                self.error(key, "must be a list of points");
                None
            }
        }
    }

    fn table(&mut self, key: &'static str) -> Option<&'a Table> {
        match self.raw(key) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                self.error(key, "must be a table");
                None
            }
        }
    }

    fn finish(mut self, sink: &mut Vec<ValidationError>) {
        if let Some(t) = self.table {
            for k in t.keys() {
                if !self.used.contains(&k.as_str()) {
                    let key = self.path(k);
                    self.errors.push(ValidationError { key, message: "unknown key".into() });
                }
            }
        }
        sink.append(&mut self.errors);
    }
}

fn as_float(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(n) => Some(*n as f64),
        _ => None,
    }
}

fn as_point(v: &Value, dim: usize) -> Option<Point> {
    let p = match (v, dim) {
        (_, 1) => as_float(v).map(Point::on_line),
        (Value::Array(xy), 2) if xy.len() == 2 => Some(Point::new(as_float(&xy[0])?, as_float(&xy[1])?)),
        _ => None,
    }?;
    (p.x.is_finite() && p.y.is_finite()).then_some(p)
}

fn point_shape(dim: usize) -> &'static str {
    if dim == 1 {
        "must be a number on a one-dimensional domain"
    } else {
        "must be an [x, y] pair on a two-dimensional domain"
    }
}

const DOMAIN_KINDS: &str = "interval, disk, half_line, half_space, dumbbell";
const MEASURE_KINDS: &str = "zero, point_mass, atoms, uniform, uniform_interval, truncated_gaussian, density_grid";

fn parse_domain(table: Option<&Table>, errors: &mut Vec<ValidationError>) -> Option<DomainSpec> {
    if table.is_none() {
        errors.push(ValidationError { key: "domain".into(), message: "the [domain] table is required".into() });
        return None;
    }
    let mut f = Fields::new("domain", table);
    let kind = f.text("kind", None);
    let built = match kind.as_deref() {
        Some("interval") => {
            let (a, b) = (f.float("a", Some(0.0)), f.float("b", Some(1.0)));
            a.zip(b).map(|(a, b)| DomainSpec::interval(a, b))
        }
        Some("disk") => {
            let c = f.point("center", 2, Some(Point::ORIGIN));
            let r = f.positive("radius", Some(1.0));
            c.zip(r).map(|(c, r)| DomainSpec::disk(c, r))
        }
        Some("half_line") => Some(Ok(DomainSpec::HalfLine)),
        Some("half_space") => Some(Ok(DomainSpec::HalfSpace2D)),
        Some("dumbbell") => {
            let std = DumbbellParams::standard(0.4);
            let r = f.positive("chamber_radius", Some(std.chamber_radius));
            let c0 = f.point("left_center", 2, Some(std.chamber_centers[0]));
            let c1 = f.point("right_center", 2, Some(std.chamber_centers[1]));
            let eps = f.positive("neck_halfwidth", Some(std.neck_halfwidth));
            let fillet = f.positive("fillet_radius", Some(std.fillet_radius));
            match (r, c0, c1, eps, fillet) {
                (Some(chamber_radius), Some(a), Some(b), Some(neck_halfwidth), Some(fillet_radius)) => {
                    Some(DomainSpec::dumbbell(DumbbellParams {
                        chamber_radius,
                        chamber_centers: [a, b],
                        neck_halfwidth,
                        fillet_radius,
                    }))
                }
                _ => None,
            }
        }
        Some(other) => {
            f.error("kind", format!("unknown domain kind `{other}`; expected one of {DOMAIN_KINDS}"));
            None
        }
        None => None,
    };
    let domain = match built {
        Some(Ok(d)) => Some(d),
        Some(Err(e)) => {
            f.error("kind", e.to_string());
            None
        }
        None => None,
    };
    f.finish(errors);
    domain
}

fn weight_field(f: &mut Fields, key: &'static str) -> Option<f64> {
    let w = f.float(key, Some(1.0))?;
    if w > 0.0 {
        Some(w)
    } else {
        f.error(key, format!("weight must be positive, got {w}"));
        None
    }
}

fn parse_measure(
    table: Option<&Table>,
    domain: Option<&DomainSpec>,
    errors: &mut Vec<ValidationError>,
) -> Option<RestartMeasure> {
    if table.is_none() {
        errors.push(ValidationError { key: "measure".into(), message: "the [measure] table is required".into() });
        return None;
    }
    let mut f = Fields::new("measure", table);
    let dim = domain.map_or(1, DomainSpec::dimension);
    let kind = f.text("kind", None);
    let kind = match kind.as_deref() {
        Some("zero") => Some(MeasureKind::Zero),
        Some("point_mass") => {
            let at = f.point("at", dim, None);
            let weight = weight_field(&mut f, "weight");
            at.zip(weight).map(|(at, weight)| MeasureKind::PointMass { at, weight })
        }
        Some("atoms") => {
            let at = f.points("at", dim, None);
            let weights = f.floats("weights", None);
            match (at, weights) {
                (Some(at), Some(w)) if at.len() != w.len() => {
                    f.error("weights", format!("has {} entries for {} atoms", w.len(), at.len()));
                    None
                }
                (Some(at), Some(w)) => {
                    let mut ok = !at.is_empty();
                    if at.is_empty() {
                        f.error("at", "needs at least one atom");
                    }
                    for (i, x) in w.iter().enumerate() {
                        if !(*x > 0.0) {
                            f.error("weights", format!("weights[{i}] must be positive, got {x}"));
                            ok = false;
                        }
                    }
                    ok.then(|| MeasureKind::Atoms(at.into_iter().zip(w).collect()))
                }
                _ => None,
            }
        }
        Some("uniform") => {
            let center = f.point("center", dim, None);
            let radius = f.positive("radius", None);
            let weight = weight_field(&mut f, "weight");
            match (center, radius, weight) {
                (Some(center), Some(radius), Some(weight)) => {
                    Some(MeasureKind::UniformOnBall { center, radius, weight, dimension: dim })
                }
                _ => None,
            }
        }
        Some("uniform_interval") => {
            if dim != 1 {
                f.error("kind", "uniform_interval needs a one-dimensional domain; use `uniform`");
            }
            let a = f.float("a", None);
            let b = f.float("b", None);
            let weight = weight_field(&mut f, "weight");
            match (a, b, weight) {
                (Some(a), Some(b), Some(_)) if b <= a => {
                    f.error("b", format!("must exceed a = {a}"));
                    None
                }
                (Some(a), Some(b), Some(weight)) if dim == 1 => Some(MeasureKind::UniformOnBall {
                    center: Point::on_line(0.5 * (a + b)),
                    radius: 0.5 * (b - a),
                    weight,
                    dimension: 1,
                }),
                _ => None,
            }
        }
        Some("truncated_gaussian") => {
            let center = f.point("center", dim, None);
            let sigma = f.positive("sigma", None);
            let weight = weight_field(&mut f, "weight");
            match (center, sigma, weight, domain) {
                (Some(center), Some(sigma), Some(weight), Some(d)) => {
                    Some(MeasureKind::TruncatedGaussian { center, sigma, domain: d.clone(), weight })
                }
                _ => None,
            }
        }
        Some("density_grid") => {
            if dim != 1 {
                f.error("kind", "density_grid needs a one-dimensional domain");
            }
            let edges = f.floats("edges", None);
            let masses = f.floats("masses", None);
            if let Some(m) = &masses {
                for (i, x) in m.iter().enumerate() {
                    if *x < 0.0 {
                        f.error("masses", format!("masses[{i}] must be nonnegative, got {x}"));
                    }
                }
            }
            edges.zip(masses).map(|(edges, masses)| MeasureKind::DensityOnGrid { edges, masses })
        }
        Some(other) => {
            f.error("kind", format!("unknown measure kind `{other}`; expected one of {MEASURE_KINDS}"));
            None
        }
        None => None,
    };
    let mut measure = None;
    if f.errors.is_empty() {
        if let Some(kind) = kind {
            match RestartMeasure::new(kind) {
                Ok(m) => measure = Some(m),
                Err(e) => f.error("kind", e.to_string()),
            }
        }
    }
    if let (Some(m), Some(d)) = (&measure, domain) {
        if let Err(e) = m.check_support(d) {
            f.error("", e.to_string());
            if let Some(last) = f.errors.last_mut() {
                last.key = "measure".into();
            }
            measure = None;
        }
    }
    f.finish(errors);
    measure
}

fn unit_interval(d: &DomainSpec) -> bool {
    matches!(d, DomainSpec::Interval { a, b } if *a == 0.0 && *b == 1.0)
}

fn unit_disk(d: &DomainSpec) -> bool {
    matches!(d, DomainSpec::Disk { center, radius } if *center == Point::ORIGIN && *radius == 1.0)
}

/// Default interior points for solution slices.
fn slice_points(d: &DomainSpec) -> Vec<Point> {
    match d {
        DomainSpec::Disk { center, radius } => {
            vec![*center, *center + Point::new(0.5 * radius, 0.0), *center + Point::new(0.0, 0.75 * radius)]
        }
        DomainSpec::Interval { a, b } => [0.25, 0.5, 0.75].iter().map(|s| Point::on_line(a + s * (b - a))).collect(),
        _ => vec![Point::ORIGIN],
    }
}

fn default_start(d: &DomainSpec) -> Point {
    match d {
        DomainSpec::Interval { a, b } => Point::on_line(0.5 * (a + b)),
        DomainSpec::Disk { center, .. } => *center,
        DomainSpec::HalfLine => Point::ORIGIN,
        DomainSpec::HalfSpace2D => Point::ORIGIN,
        DomainSpec::Dumbbell(db) => db.params().chamber_centers[0],
    }
}

fn check_inside(f: &mut Fields, key: &'static str, domain: &DomainSpec, p: Option<Point>) {
    if let Some(p) = p {
        if !domain.contains(p) {
            f.error(key, format!("({}, {}) is outside the domain", p.x, p.y));
        }
    }
}

/// The `c(t)` grid needs at least 100 cells.
fn check_dt(f: &mut Fields, dt: Option<f64>, horizon: Option<f64>) {
    if let (Some(dt), Some(t)) = (dt, horizon) {
        if dt > t / 100.0 {
            f.error("dt", format!("must be at most horizon/100 = {}", t / 100.0));
        }
    }
}

fn check_step(f: &mut Fields, h: Option<f64>, horizon: Option<f64>, horizon_key: &str) {
    if let (Some(h), Some(t)) = (h, horizon) {
        if h > t {
            f.error("h", format!("step h = {h} exceeds {horizon_key} = {t}"));
        }
    }
}

fn check_times(f: &mut Fields, key: &'static str, times: &Option<Vec<f64>>) {
    if let Some(ts) = times {
        if ts.is_empty() {
            f.error(key, "must not be empty");
        } else if ts.iter().any(|t| !(*t > 0.0)) {
            f.error(key, "must be positive");
        }
    }
}

fn need_domain(errors: &mut Vec<ValidationError>, experiment: Experiment, ok: bool, what: &str) {
    if !ok {
        errors.push(ValidationError {
            key: "domain.kind".into(),
            message: format!("the {} experiment needs {what}", experiment.name()),
        });
    }
}

fn parse_params(
    experiment: Experiment,
    table: Option<&Table>,
    domain: &DomainSpec,
    measure: &RestartMeasure,
    errors: &mut Vec<ValidationError>,
) -> Option<Params> {
    let mut f = Fields::new("params", table);
    let dim = domain.dimension();
    let kappa = measure.total_mass();
    let need_kappa = |errors: &mut Vec<ValidationError>| {
        if kappa <= 0.0 {
            errors.push(ValidationError {
                key: "measure.kind".into(),
                message: format!("the {} experiment needs a measure with positive mass", experiment.name()),
            });
        }
    };
    let params = match experiment {
        Experiment::Simulate => {
            let x0 = f.point("x0", dim, Some(default_start(domain)));
            check_inside(&mut f, "x0", domain, x0);
            let t_end = f.positive("t_end", Some(1.0));
            let h = f.positive("h", Some(1e-4));
            check_step(&mut f, h, t_end, "t_end");
            let n_paths = f.positive_count("n_paths", Some(1000));
            let ks_jumps = f.count("ks_jumps", Some(5));
            match (x0, t_end, h, n_paths, ks_jumps) {
                (Some(x0), Some(t_end), Some(h), Some(n_paths), Some(ks_jumps)) => {
                    Some(Params::Simulate(SimulateParams { x0, t_end, h, n_paths, ks_jumps }))
                }
                _ => None,
            }
        }
        Experiment::Spectral | Experiment::Compare => {
            need_domain(
                errors,
                experiment,
                unit_interval(domain) || unit_disk(domain),
                "the unit interval [0, 1] or the unit disk centred at the origin",
            );
            need_kappa(errors);
            let function = f.text("function", Some("sin_pi_plus_one")).and_then(|s| {
                let parsed = TestFunction::from_name(&s);
                if parsed.is_none() {
                    f.error("function", format!("unknown function `{s}`; expected one, sin_pi_plus_one, cos_pi or quadratic"));
                }
                parsed
            });
            let default_modes = if dim == 2 {
                elastic_jump_core::spectral::DEFAULT_DISK_MODES
            } else {
                elastic_jump_core::spectral::DEFAULT_INTERVAL_MODES
            };
            let modes = f.positive_count("modes", Some(default_modes));
            let dt = f.positive("dt", Some(1e-3));
            let times = f.floats("times", Some(vec![0.1, 0.5, 1.0]));
            check_times(&mut f, "times", &times);
            let points = f.points("points", dim, Some(slice_points(domain)));
            if let Some(ps) = &points {
                for p in ps {
                    check_inside(&mut f, "points", domain, Some(*p));
                }
            }
            let t_max = times.as_ref().map(|ts| ts.iter().copied().fold(0.0, f64::max));
            if experiment == Experiment::Spectral {
                let laplace_z = f.floats("laplace_z", Some(vec![1.0, 2.0, 5.0]));
                if laplace_z.as_ref().is_some_and(|z| z.iter().any(|z| !(*z > 0.0))) {
                    f.error("laplace_z", "must be positive");
                }
                // Long enough that the transform tail past the horizon is negligible.
                let tail = laplace_z.as_ref().and_then(|z| z.iter().copied().reduce(f64::min)).map_or(0.0, |z| 20.0 / z);
                let horizon = f.positive("horizon", t_max.map(|t| t.max(tail)).filter(|t| *t > 0.0).or(Some(1.0)));
                if let (Some(ts), Some(hz)) = (&times, horizon) {
                    if ts.iter().any(|t| *t > hz) {
                        f.error("times", format!("must not exceed horizon = {hz}"));
                    }
                }
                check_dt(&mut f, dt, horizon);
                match (function, modes, dt, horizon, times, points, laplace_z) {
                    (Some(function), Some(modes), Some(dt), Some(horizon), Some(times), Some(points), Some(laplace_z)) => {
                        Some(Params::Spectral(SpectralParams { function, modes, dt, horizon, times, points, laplace_z }))
                    }
                    _ => None,
                }
            } else {
                let n_paths = f.positive_count("n_paths", Some(4000));
                let h = f.positive("h", Some(1e-4));
                check_step(&mut f, h, t_max, "the largest time");
                check_dt(&mut f, dt, t_max);
                if let (Some(dt), Some(h)) = (dt, h) {
                    if dt > 1e3 * h {
                        f.error("dt", format!("c(t) grid spacing {dt} is coarser than 1000 steps of h = {h}"));
                    }
                }
                let z_gate = f.positive("z_gate", Some(4.0));
                match (function, modes, dt, times, points, n_paths, h, z_gate) {
                    (Some(function), Some(modes), Some(dt), Some(times), Some(points), Some(n_paths), Some(h), Some(z_gate)) => {
                        Some(Params::Compare(CompareParams { function, modes, dt, times, points, n_paths, h, z_gate }))
                    }
                    _ => None,
                }
            }
        }
        Experiment::Invariant => {
            need_domain(errors, experiment, unit_interval(domain), "the unit interval [0, 1]");
            need_kappa(errors);
            let grid = f.positive_count("grid", Some(201));
            if grid.is_some_and(|n| n < 2) {
                f.error("grid", "needs at least 2 points");
            }
            let n_paths = f.count("n_paths", Some(200));
            let x0 = f.point("x0", dim, Some(default_start(domain)));
            check_inside(&mut f, "x0", domain, x0);
            let t_end = f.positive("t_end", Some(200.0));
            let burn_in = f.float("burn_in", Some(20.0));
            if let (Some(b), Some(t)) = (burn_in, t_end) {
                if !(b >= 0.0 && b < t) {
                    f.error("burn_in", format!("must lie in [0, t_end = {t})"));
                }
            }
            let h = f.positive("h", Some(1e-4));
            check_step(&mut f, h, t_end, "t_end");
            let bins = f.positive_count("bins", Some(50));
            let stride = f.positive_count("stride", Some(10));
            let ks_gate = f.positive("ks_gate", Some(0.02));
            match (grid, n_paths, x0, t_end, burn_in, h, bins, stride, ks_gate) {
                (Some(grid), Some(n_paths), Some(x0), Some(t_end), Some(burn_in), Some(h), Some(bins), Some(stride), Some(ks_gate)) => {
                    Some(Params::Invariant(InvariantParams { grid, n_paths, x0, t_end, burn_in, h, bins, stride, ks_gate }))
                }
                _ => None,
            }
        }
        Experiment::Trace => {
            need_domain(errors, experiment, *domain == DomainSpec::HalfLine, "kind = \"half_line\"");
            let level = f.positive("level", Some(0.5));
            let horizon = f.positive("horizon", Some(1024.0));
            let h = f.positive("h", Some(1e-3));
            check_step(&mut f, h, horizon, "horizon");
            let n_paths = f.positive_count("n_paths", Some(4000));
            let lambdas = f.floats("lambdas", Some(vec![0.5, 1.0, 2.0]));
            if lambdas.as_ref().is_some_and(|l| l.is_empty() || l.iter().any(|x| !(*x > 0.0))) {
                f.error("lambdas", "must be a nonempty list of positive numbers");
            }
            let resamples = f.positive_count("resamples", Some(200));
            let calibrate = f.flag("calibrate", true);
            let dtn_points = f.count("dtn_points", Some(4096));
            if dtn_points.is_some_and(|n| n != 0 && n < 16) {
                f.error("dtn_points", "must be 0 or at least 16");
            }
            let dtn_length = f.positive("dtn_length", Some(40.0));
            let dtn_fields = f.count("dtn_fields", Some(20));
            if dtn_points.is_some_and(|n| n > 0) && matches!(measure.kind(), MeasureKind::TruncatedGaussian { .. }) {
                errors.push(ValidationError {
                    key: "measure.kind".into(),
                    message: "the half-plane operator needs atoms, a uniform segment or a grid density".into(),
                });
            }
            match (level, horizon, h, n_paths, lambdas, resamples, calibrate, dtn_points, dtn_length, dtn_fields) {
                (
                    Some(level),
                    Some(horizon),
                    Some(h),
                    Some(n_paths),
                    Some(lambdas),
                    Some(resamples),
                    Some(calibrate),
                    Some(dtn_points),
                    Some(dtn_length),
                    Some(dtn_fields),
                ) => Some(Params::Trace(TraceParams {
                    level,
                    horizon,
                    h,
                    n_paths,
                    lambdas,
                    resamples,
                    calibrate,
                    dtn_points,
                    dtn_length,
                    dtn_fields,
                })),
                _ => None,
            }
        }
        Experiment::Escape => {
            let db = match domain {
                DomainSpec::Dumbbell(db) => Some(*db.params()),
                _ => None,
            };
            need_domain(errors, experiment, db.is_some(), "kind = \"dumbbell\"");
            let db = db.unwrap_or(DumbbellParams::standard(0.4));
            let far = db.chamber_centers[1];
            let target_center = f.point("target_center", 2, Some(far));
            let target_radius = f.positive("target_radius", Some(0.2 * db.chamber_radius));
            let core_center = f.point("core_center", 2, Some(far));
            let core_radius = f.float("core_radius", Some(0.5 * db.chamber_radius));
            let eps_grid = f.floats("eps_grid", Some(vec![0.4, 0.2, 0.1, 0.05]));
            if eps_grid.as_ref().is_some_and(|g| g.is_empty() || g.iter().any(|e| !(*e > 0.0))) {
                f.error("eps_grid", "must be a nonempty list of positive neck half-widths");
            }
            let n_paths = f.positive_count("n_paths", Some(4000));
            let h = f.positive("h", Some(2.5e-4));
            let horizon = f.positive("horizon", Some(500.0));
            check_step(&mut f, h, horizon, "horizon");
            let x0 = f.point("x0", 2, Some(db.chamber_centers[0]));
            let reflected = f.flag("reflected", true);
            let jump = f.flag("jump", true);
            if jump == Some(true) && kappa <= 0.0 {
                f.error("jump", "needs a measure with positive mass; set jump = false for the zero measure");
            }
            match (target_center, target_radius, core_center, core_radius, eps_grid, n_paths, h, horizon, x0, reflected, jump) {
                (
                    Some(target_center),
                    Some(target_radius),
                    Some(core_center),
                    Some(core_radius),
                    Some(eps_grid),
                    Some(n_paths),
                    Some(h),
                    Some(horizon),
                    Some(x0),
                    Some(reflected),
                    Some(jump),
                ) => Some(Params::Escape(EscapeParams {
                    target_center,
                    target_radius,
                    core_center,
                    core_radius,
                    eps_grid,
                    n_paths,
                    h,
                    horizon,
                    x0,
                    reflected,
                    jump,
                })),
                _ => None,
            }
        }
    };
    f.finish(errors);
    params
}

/// Checks that need the finished config, such as the escape geometry for
/// every neck width.
fn cross_check(cfg: &ExperimentConfig, errors: &mut Vec<ValidationError>) {
    if let Params::Escape(p) = &cfg.params {
        let esc = crate::experiments::escape_config(cfg, p);
        let base = match &cfg.domain {
            DomainSpec::Dumbbell(db) => *db.params(),
            _ => return,
        };
        for &eps in &p.eps_grid {
            match DomainSpec::dumbbell(base.with_neck_halfwidth(eps)) {
                Ok(d) => {
                    if !d.contains(p.x0) {
                        errors.push(ValidationError {
                            key: "params.x0".into(),
                            message: format!("is outside the domain at neck half-width {eps}"),
                        });
                    }
                }
                Err(e) => errors.push(ValidationError {
                    key: "params.eps_grid".into(),
                    message: format!("neck half-width {eps}: {e}"),
                }),
            }
        }
        if errors.is_empty() {
            let check = if p.jump { esc.validate().and_then(|_| esc.alpha0().map(|_| ())) } else { esc.validate() };
            if let Err(e) = check {
                errors.push(ValidationError { key: "params".into(), message: e.to_string() });
            } else if p.jump && esc.alpha0().is_ok_and(|a| !(a > 0.0)) {
                errors.push(ValidationError {
                    key: "measure".into(),
                    message: "the jump dynamics need mass inside the core set (α₀ = μ(K)/κ > 0)".into(),
                });
            }
        }
    }
}

/// Parses and validates a config, reporting every problem found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ValidationErrors> {
    let doc: Table = text.parse().map_err(|e: toml::de::Error| {
        ValidationErrors::single("", format!("not valid TOML: {}", e.message()))
    })?;
    let mut errors = Vec::new();
    let mut top = Fields::new("", Some(&doc));
    let experiment = top.text("experiment", None).and_then(|s| {
        let e = Experiment::from_name(&s);
        if e.is_none() {
            top.error(
                "experiment",
                format!("unknown experiment `{s}`; expected simulate, spectral, invariant, trace, escape or compare"),
            );
        }
        e
    });
    let seed = match top.raw("seed") {
        None => Some(0),
        Some(Value::Integer(n)) if *n >= 0 => Some(*n as u64),
        Some(_) => {
            top.error("seed", "must be a nonnegative integer");
            None
        }
    };
    let output = match top.raw("output") {
        None => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            top.error("output", "must be a string");
            None
        }
    };
    let domain_table = top.table("domain");
    let measure_table = top.table("measure");
    let params_table = top.table("params");
    top.finish(&mut errors);
    let domain = parse_domain(domain_table, &mut errors);
    let measure = parse_measure(measure_table, domain.as_ref(), &mut errors);
    let params = match (experiment, &domain, &measure) {
        (Some(e), Some(d), Some(m)) => parse_params(e, params_table, d, m, &mut errors),
        _ => None,
    };
    match (experiment, seed, domain, measure, params) {
        (Some(experiment), Some(seed), Some(domain), Some(measure), Some(params)) if errors.is_empty() => {
            let cfg = ExperimentConfig { experiment, seed, output, domain, measure, params };
            cross_check(&cfg, &mut errors);
            if errors.is_empty() {
                Ok(cfg)
            } else {
                Err(ValidationErrors(errors))
            }
        }
        _ => Err(ValidationErrors(errors)),
    }
}

fn float(x: f64) -> Value {
    Value::Float(x)
}

fn int(n: usize) -> Value {
    Value::Integer(n as i64)
}

fn point(p: Point, dim: usize) -> Value {
    if dim == 1 {
        float(p.x)
    } else {
        Value::Array(vec![float(p.x), float(p.y)])
    }
}

fn floats(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| float(*x)).collect())
}

fn points(ps: &[Point], dim: usize) -> Value {
    Value::Array(ps.iter().map(|p| point(*p, dim)).collect())
}

fn text(s: &str) -> Value {
    Value::String(s.into())
}

fn render_domain(d: &DomainSpec) -> Table {
    let mut t = Table::new();
    match d {
        DomainSpec::Interval { a, b } => {
            t.insert("kind".into(), text("interval"));
            t.insert("a".into(), float(*a));
            t.insert("b".into(), float(*b));
        }
        DomainSpec::Disk { center, radius } => {
            t.insert("kind".into(), text("disk"));
            t.insert("center".into(), point(*center, 2));
            t.insert("radius".into(), float(*radius));
        }
        DomainSpec::HalfLine => {
            t.insert("kind".into(), text("half_line"));
        }
        DomainSpec::HalfSpace2D => {
            t.insert("kind".into(), text("half_space"));
        }
        DomainSpec::Dumbbell(db) => {
            let p = db.params();
            t.insert("kind".into(), text("dumbbell"));
            t.insert("chamber_radius".into(), float(p.chamber_radius));
            t.insert("left_center".into(), point(p.chamber_centers[0], 2));
            t.insert("right_center".into(), point(p.chamber_centers[1], 2));
            t.insert("neck_halfwidth".into(), float(p.neck_halfwidth));
            t.insert("fillet_radius".into(), float(p.fillet_radius));
        }
    }
    t
}

fn render_measure(m: &RestartMeasure, dim: usize) -> Table {
    let mut t = Table::new();
    match m.kind() {
        MeasureKind::Zero => {
            t.insert("kind".into(), text("zero"));
        }
        MeasureKind::PointMass { at, weight } => {
            t.insert("kind".into(), text("point_mass"));
            t.insert("at".into(), point(*at, dim));
            t.insert("weight".into(), float(*weight));
        }
        MeasureKind::Atoms(atoms) => {
            let (at, w): (Vec<Point>, Vec<f64>) = atoms.iter().copied().unzip();
            t.insert("kind".into(), text("atoms"));
            t.insert("at".into(), points(&at, dim));
            t.insert("weights".into(), floats(&w));
        }
        MeasureKind::UniformOnBall { center, radius, weight, .. } => {
            t.insert("kind".into(), text("uniform"));
            t.insert("center".into(), point(*center, dim));
            t.insert("radius".into(), float(*radius));
            t.insert("weight".into(), float(*weight));
        }
        MeasureKind::TruncatedGaussian { center, sigma, weight, .. } => {
            t.insert("kind".into(), text("truncated_gaussian"));
            t.insert("center".into(), point(*center, dim));
            t.insert("sigma".into(), float(*sigma));
            t.insert("weight".into(), float(*weight));
        }
        MeasureKind::DensityOnGrid { edges, masses } => {
            t.insert("kind".into(), text("density_grid"));
            t.insert("edges".into(), floats(edges));
            t.insert("masses".into(), floats(masses));
        }
    }
    t
}

fn render_params(p: &Params, dim: usize) -> Table {
    let mut t = Table::new();
    let mut put = |k: &str, v: Value| {
        t.insert(k.into(), v);
    };
    match p {
        Params::Simulate(p) => {
            put("x0", point(p.x0, dim));
            put("t_end", float(p.t_end));
            put("h", float(p.h));
            put("n_paths", int(p.n_paths));
            put("ks_jumps", int(p.ks_jumps));
        }
        Params::Spectral(p) => {
            put("function", text(p.function.name()));
            put("modes", int(p.modes));
            put("dt", float(p.dt));
            put("horizon", float(p.horizon));
            put("times", floats(&p.times));
            put("points", points(&p.points, dim));
            put("laplace_z", floats(&p.laplace_z));
        }
        Params::Invariant(p) => {
            put("grid", int(p.grid));
            put("n_paths", int(p.n_paths));
            put("x0", point(p.x0, dim));
            put("t_end", float(p.t_end));
            put("burn_in", float(p.burn_in));
            put("h", float(p.h));
            put("bins", int(p.bins));
            put("stride", int(p.stride));
            put("ks_gate", float(p.ks_gate));
        }
        Params::Trace(p) => {
            put("level", float(p.level));
            put("horizon", float(p.horizon));
            put("h", float(p.h));
            put("n_paths", int(p.n_paths));
            put("lambdas", floats(&p.lambdas));
            put("resamples", int(p.resamples));
            put("calibrate", Value::Boolean(p.calibrate));
            put("dtn_points", int(p.dtn_points));
            put("dtn_length", float(p.dtn_length));
            put("dtn_fields", int(p.dtn_fields));
        }
        Params::Escape(p) => {
            put("target_center", point(p.target_center, 2));
            put("target_radius", float(p.target_radius));
            put("core_center", point(p.core_center, 2));
            put("core_radius", float(p.core_radius));
            put("eps_grid", floats(&p.eps_grid));
            put("n_paths", int(p.n_paths));
            put("h", float(p.h));
            put("horizon", float(p.horizon));
            put("x0", point(p.x0, 2));
            put("reflected", Value::Boolean(p.reflected));
            put("jump", Value::Boolean(p.jump));
        }
        Params::Compare(p) => {
            put("function", text(p.function.name()));
            put("modes", int(p.modes));
            put("dt", float(p.dt));
            put("times", floats(&p.times));
            put("points", points(&p.points, dim));
            put("n_paths", int(p.n_paths));
            put("h", float(p.h));
            put("z_gate", float(p.z_gate));
        }
    }
    t
}

/// The config with every default spelled out. Seeds above `i64::MAX` cannot
/// be written in TOML and are rejected by the CLI.
pub fn render(cfg: &ExperimentConfig) -> String {
    let dim = cfg.domain.dimension();
    let mut doc = Table::new();
    doc.insert("experiment".into(), text(cfg.experiment.name()));
    doc.insert("seed".into(), Value::Integer(cfg.seed as i64));
    if let Some(out) = &cfg.output {
        doc.insert("output".into(), text(out));
    }
    doc.insert("domain".into(), Value::Table(render_domain(&cfg.domain)));
    doc.insert("measure".into(), Value::Table(render_measure(&cfg.measure, dim)));
    doc.insert("params".into(), Value::Table(render_params(&cfg.params, dim)));
    toml::to_string(&doc).expect("a TOML table always serializes")
}
