//! The six experiments behind `elastic-jump run`.
//!
//! Each experiment turns a validated config into a [`Report`]: named tables
//! of formatted cells, a JSON summary, a list of pass/fail gates and plot
//! descriptions. Nothing here touches the filesystem. Every random stream is
//! derived from the config seed, so a report is a pure function of its config.

use elastic_jump_core::escape::{self, Ball, EscapeConfig, MfptRow, RowStatus};
use elastic_jump_core::invariant::{self, InvariantDensity};
use elastic_jump_core::measures::MeasureKind;
use elastic_jump_core::rng::{derive_seed, path_rng};
use elastic_jump_core::sde::{self, MonteCarlo, Occupation};
use elastic_jump_core::spectral::{self, CoefficientSet, CtSolution, SpectralBasis};
use elastic_jump_core::stats::{self, linear_fit};
use elastic_jump_core::trace::{self, Calibration, PassageConfig};
use elastic_jump_core::{DomainSpec, DumbbellParams, Point, RestartMeasure, Result};
use serde_json::{json, Value};

use crate::config::{
    CompareParams, EscapeParams, ExperimentConfig, InvariantParams, Params, SimulateParams, SpectralParams,
    TestFunction, TraceParams, ValidationErrors,
};
use crate::dtn::{self, GridField};
use crate::par::Parallel;

/// Rows of formatted cells written as `<name>.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self::with_header(name, header.iter().map(|s| s.to_string()).collect())
    }

    pub fn with_header(name: &str, header: Vec<String>) -> Self {
        Table { name: name.into(), header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// A named pass/fail check. A failed gate makes the run exit with status 3.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Gate {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Gate { name: name.into(), passed, detail }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    Lines,
    Histogram,
}

/// What a generated plotting script draws.
#[derive(Clone, Debug, PartialEq)]
pub struct Plot {
    pub name: String,
    pub table: String,
    pub kind: PlotKind,
    pub x: String,
    pub ys: Vec<String>,
    /// Draw one curve per distinct value of this column.
    pub group_by: Option<String>,
    pub log_y: bool,
}

impl Plot {
    fn lines(name: &str, table: &str, x: &str, ys: &[&str]) -> Self {
        Plot {
            name: name.into(),
            table: table.into(),
            kind: PlotKind::Lines,
            x: x.into(),
            ys: ys.iter().map(|s| s.to_string()).collect(),
            group_by: None,
            log_y: false,
        }
    }

    fn histogram(name: &str, table: &str, column: &str) -> Self {
        Plot { kind: PlotKind::Histogram, ..Plot::lines(name, table, column, &[]) }
    }

    fn grouped(self, column: &str) -> Self {
        Plot { group_by: Some(column.into()), ..self }
    }

    fn log_y(self) -> Self {
        Plot { log_y: true, ..self }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub tables: Vec<Table>,
    pub summary: Value,
    pub gates: Vec<Gate>,
    pub plots: Vec<Plot>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Number of trajectories to write to `paths.csv`.
    pub dump_paths: usize,
}

/// Shortest round-trip decimal, switching to exponent form for very small or
/// very large magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && (a < 1e-4 || a >= 1e15) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn point_cells(p: Point, dim: usize) -> Vec<String> {
    if dim == 1 {
        vec![num(p.x)]
    } else {
        vec![num(p.x), num(p.y)]
    }
}

fn coordinate_names(dim: usize) -> Vec<&'static str> {
    if dim == 1 {
        vec!["x"]
    } else {
        vec!["x", "y"]
    }
}

fn header(parts: &[&[&str]]) -> Vec<String> {
    parts.iter().flat_map(|p| p.iter()).map(|s| s.to_string()).collect()
}

/// Rejects options the experiment cannot honour.
pub fn check_options(cfg: &ExperimentConfig, opts: &RunOptions) -> std::result::Result<(), ValidationErrors> {
    use crate::config::Experiment::*;
    if opts.dump_paths > 0 && matches!(cfg.experiment, Spectral | Escape) {
        return Err(ValidationErrors::single(
            "--dump-paths",
            format!("the {} experiment does not simulate a single path ensemble", cfg.experiment.name()),
        ));
    }
    Ok(())
}

pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Report> {
    let mut report = match &cfg.params {
        Params::Simulate(p) => simulate(cfg, p)?,
        Params::Spectral(p) => spectral(cfg, p)?,
        Params::Invariant(p) => invariant(cfg, p)?,
        Params::Trace(p) => trace(cfg, p)?,
        Params::Escape(p) => escape(cfg, p)?,
        Params::Compare(p) => compare(cfg, p)?,
    };
    if opts.dump_paths > 0 {
        report.tables.push(dump_paths(cfg, opts.dump_paths)?);
    }
    Ok(report)
}

fn seed_for(cfg: &ExperimentConfig, label: u64) -> u64 {
    derive_seed(cfg.seed, &[label])
}

struct PathSummary {
    end: Point,
    local_time: f64,
    jump_times: Vec<f64>,
    increments: Vec<f64>,
    restarts: Vec<Point>,
}

fn simulate(cfg: &ExperimentConfig, p: &SimulateParams) -> Result<Report> {
    use elastic_jump_core::exec::{chunk_count, chunk_range, Executor};
    let dim = cfg.domain.dimension();
    let seed = seed_for(cfg, 1);
    let kappa = cfg.kappa();
    let steps = sde::steps_for(p.t_end, p.h);
    let wanted = if kappa > 0.0 { p.ks_jumps } else { 0 };
    let chunks = Parallel.map(chunk_count(p.n_paths), |c| -> Result<Vec<PathSummary>> {
        let mut out = Vec::new();
        for i in chunk_range(c, p.n_paths) {
            let mut rng = path_rng(seed, i as u64);
            let mut walker = sde::Walker::new(&cfg.domain, &cfg.measure, p.x0, p.h, &mut rng)?;
            let mut path = PathSummary {
                end: p.x0,
                local_time: 0.0,
                jump_times: Vec::new(),
                increments: Vec::new(),
                restarts: Vec::new(),
            };
            let mut last_level = 0.0;
            let mut step = 0;
            while step < steps || path.increments.len() < wanted {
                let level = walker.threshold();
                step += 1;
                if walker.step(&mut rng)?.jumped {
                    path.increments.push(level - last_level);
                    last_level = level;
                    if step <= steps {
                        path.jump_times.push(step as f64 * p.h);
                        path.restarts.push(walker.position);
                    }
                }
                if step == steps {
                    path.end = walker.position;
                    path.local_time = walker.local_time;
                }
            }
            out.push(path);
        }
        Ok(out)
    });
    let coords = coordinate_names(dim);
    let mut endpoints = Table::with_header("endpoints", header(&[&["path"], &coords, &["local_time", "jumps"]]));
    let restart_cols: Vec<String> = coords.iter().map(|c| format!("restart_{c}")).collect();
    let restart_refs: Vec<&str> = restart_cols.iter().map(String::as_str).collect();
    let mut jumps =
        Table::with_header("jumps", header(&[&["path", "k", "time", "local_time_increment"], &restart_refs]));
    let mut increments = Vec::new();
    let mut restarts = Vec::new();
    let mut jump_stats = stats::RunningStats::new();
    let mut lt_stats = stats::RunningStats::new();
    let mut i = 0usize;
    for chunk in chunks {
        for path in chunk? {
            let mut row = vec![i.to_string()];
            row.extend(point_cells(path.end, dim));
            row.push(num(path.local_time));
            row.push(path.jump_times.len().to_string());
            endpoints.push(row);
            jump_stats.push(path.jump_times.len() as f64);
            lt_stats.push(path.local_time);
            for (k, ((t, dl), z)) in path.jump_times.iter().zip(&path.increments).zip(&path.restarts).enumerate() {
                let mut row = vec![i.to_string(), k.to_string(), num(*t), num(*dl)];
                row.extend(point_cells(*z, dim));
                jumps.push(row);
                restarts.push(*z);
            }
            increments.extend(path.increments.iter().take(wanted));
            i += 1;
        }
    }
    let mut summary = json!({
        "kappa": kappa,
        "paths": p.n_paths,
        "mean_jumps": jump_stats.mean,
        "mean_final_local_time": lt_stats.mean,
        "mean_final_local_time_std_error": lt_stats.std_error(),
        "jumps_total": jumps.rows.len(),
    });
    if kappa > 0.0 && increments.len() >= 2 {
        let d = stats::ks_statistic(&mut increments, |x| 1.0 - (-kappa * x).exp());
        summary["increment_ks"] = json!({
            "statistic": d,
            "p_value": stats::ks_pvalue(d, increments.len()),
            "increments": increments.len(),
        });
    }
    if dim == 1 && restarts.len() >= 2 && !matches!(cfg.measure.kind(), MeasureKind::PointMass { .. }) {
        let mut xs: Vec<f64> = restarts.iter().map(|p| p.x).collect();
        let n = xs.len();
        let d = stats::ks_statistic(&mut xs, |x| cfg.measure.cdf_1d(x).unwrap_or(f64::NAN));
        summary["restart_ks"] = json!({ "statistic": d, "p_value": stats::ks_pvalue(d, n) });
    }
    let plots = vec![Plot::histogram("local_time_increments", "jumps", "local_time_increment")];
    Ok(Report { tables: vec![endpoints, jumps], summary, gates: Vec::new(), plots })
}

fn spectral_basis(cfg: &ExperimentConfig, modes: usize) -> Result<SpectralBasis> {
    match cfg.domain {
        DomainSpec::Disk { .. } => spectral::robin_eigenbasis_disk(cfg.kappa(), modes),
        _ => spectral::robin_eigenbasis_interval(cfg.kappa(), modes),
    }
}

struct Pipeline {
    basis: SpectralBasis,
    coeffs: CoefficientSet,
    c: CtSolution,
}

fn pipeline(cfg: &ExperimentConfig, f: TestFunction, modes: usize, horizon: f64, dt: f64) -> Result<Pipeline> {
    let basis = spectral_basis(cfg, modes)?;
    let coeffs = spectral::project_coefficients(|p| f.eval(p), &cfg.measure, &basis)?;
    let c = spectral::solve_volterra(&basis, &coeffs, horizon, dt)?;
    Ok(Pipeline { basis, coeffs, c })
}

fn truncation_summary(c: &CtSolution) -> Value {
    match &c.warning {
        Some(w) => json!({ "last_term": w.last_term, "partial_sum": w.partial_sum }),
        None => Value::Null,
    }
}

fn spectral(cfg: &ExperimentConfig, p: &SpectralParams) -> Result<Report> {
    let dim = cfg.domain.dimension();
    let kappa = cfg.kappa();
    let run = pipeline(cfg, p.function, p.modes, p.horizon, p.dt)?;
    let mut eig = Table::new("eigenvalues", &["j", "lambda", "gamma", "alpha", "f"]);
    for (j, pair) in run.basis.pairs().iter().enumerate() {
        eig.push(vec![j.to_string(), num(pair.lambda), num(pair.gamma), num(run.coeffs.alpha[j]), num(run.coeffs.f[j])]);
    }
    let mut ct = Table::new("ct", &["t", "c"]);
    for (t, c) in run.c.times().into_iter().zip(run.c.values()) {
        ct.push(vec![num(t), num(c)]);
    }
    let mut sol = Table::with_header("solution", header(&[&["t"], &coordinate_names(dim), &["u"]]));
    for &t in &p.times {
        let amps = spectral::mode_amplitudes(&run.basis, &run.coeffs, &run.c, t)?;
        for &x in &p.points {
            let mut row = vec![num(t)];
            row.extend(point_cells(x, dim));
            row.push(num(run.basis.synthesize(&amps, x)));
            sol.push(row);
        }
    }
    let bound = kappa * p.function.sup_bound(&cfg.domain);
    let sup_c = run.c.sup_abs();
    // Two truncation effects loosen the bound: the series misses c(0) = ∫f dμ,
    // and the truncated renewal kernel has mass m ≠ 1, so c can grow like e^{rt}
    // with r ≈ (m − 1)/(mean of the kernel). Allow twice that growth.
    let mut mass = 0.0;
    let mut mean = 0.0;
    for (pair, a) in run.basis.pairs().iter().zip(&run.coeffs.alpha) {
        let w = pair.gamma * a / kappa;
        mass += w;
        mean += w / pair.lambda;
    }
    let growth = if mass > 1.0 && mean > 0.0 { (mass - 1.0) / mean } else { 0.0 };
    let slack = (run.c.value_at(0.0) - cfg.measure.integrate(|x| p.function.eval(x))?).abs()
        + bound * (2.0 * growth * p.horizon).exp_m1();
    let mut gates = vec![Gate::new(
        "c_bounded",
        sup_c <= bound * (1.0 + 1e-9) + slack,
        format!("sup |c| = {sup_c:.6e}, κ sup |f| = {bound:.6e}, truncation slack {slack:.3e}"),
    )];
    let mut tables = vec![eig, ct, sol];
    let mut summary = json!({
        "kappa": kappa,
        "modes": run.basis.len(),
        "sup_c": sup_c,
        "c_bound": bound,
        "kernel_mass": mass,
        "c_bound_slack": slack,
        "truncation_warning": truncation_summary(&run.c),
    });
    if !p.laplace_z.is_empty() {
        let lap = spectral::laplace_check(&run.c, &run.basis, &run.coeffs, &p.laplace_z)?;
        let mut t = Table::new("laplace", &["z", "numeric", "closed_form", "relative_residual"]);
        for q in &lap.points {
            t.push(vec![num(q.z), num(q.numeric), num(q.closed_form), num(q.relative_residual)]);
        }
        tables.push(t);
        summary["laplace_max_residual"] = json!(lap.max_residual);
        gates.push(Gate::new(
            "laplace_identity",
            lap.max_residual < 1e-3,
            format!("max relative residual {:.3e} (limit 1e-3)", lap.max_residual),
        ));
    }
    let mut plots = vec![Plot::lines("ct", "ct", "t", &["c"]), Plot::lines("eigenvalues", "eigenvalues", "j", &["lambda"]).log_y()];
    if dim == 1 {
        plots.push(Plot::lines("solution", "solution", "x", &["u"]).grouped("t"));
    }
    Ok(Report { tables, summary, gates, plots })
}

fn invariant(cfg: &ExperimentConfig, p: &InvariantParams) -> Result<Report> {
    let kappa = cfg.kappa();
    let grid = invariant::uniform_grid(p.grid);
    let density: InvariantDensity = invariant::invariant_density(&cfg.measure, kappa, &grid)?;
    let s = invariant::boundary_mass(&density)?;
    let suite = invariant::domain_suite(&cfg.measure)?;
    let stationarity = invariant::stationarity_residual(&suite, &cfg.measure, &density)?;
    let mut dens = Table::new("density", &["y", "phi", "pi"]);
    for ((y, phi), pi) in density.grid().iter().zip(density.phi()).zip(density.pi()) {
        dens.push(vec![num(*y), num(*phi), num(pi)]);
    }
    let mut suite_table = Table::new("stationarity", &["member", "degree", "integral"]);
    for (i, f) in suite.iter().enumerate() {
        let integral = invariant::stationarity_integral(f, &density)?;
        suite_table.push(vec![i.to_string(), (f.coeffs.len() - 1).to_string(), num(integral)]);
    }
    let mut gates = vec![
        Gate::new("s_identity", (s - 2.0).abs() < 1e-9, format!("φ(0) + φ(1) = {s:.15} (limit |S − 2| < 1e-9)")),
        Gate::new(
            "stationarity",
            stationarity < 1e-6,
            format!("max |∫½f'' dπ| = {stationarity:.3e} (limit 1e-6)"),
        ),
    ];
    let mut summary = json!({
        "kappa": kappa,
        "boundary_mass": s,
        "normalization": density.normalization(),
        "stationarity_residual": stationarity,
    });
    let mut tables = vec![dens, suite_table];
    let mut plots = vec![Plot::lines("density", "density", "y", &["pi"])];
    if p.n_paths > 0 {
        let occ = Occupation {
            t_end: p.t_end,
            burn_in: p.burn_in,
            bins: p.bins,
            n_paths: p.n_paths,
            h: p.h,
            seed: seed_for(cfg, 1),
            stride: p.stride,
        };
        let hist = sde::occupation_histogram(&cfg.domain, &cfg.measure, p.x0, &occ, &Parallel)?;
        let ks = invariant::long_run_distance(&hist, &density)?;
        let edges = hist.edges();
        let mut t = Table::new("occupation", &["lo", "hi", "empirical", "analytic"]);
        for (i, m) in hist.masses().into_iter().enumerate() {
            let analytic = density.cdf(edges[i + 1])? - density.cdf(edges[i])?;
            t.push(vec![num(edges[i]), num(edges[i + 1]), num(m), num(analytic)]);
        }
        tables.push(t);
        plots.push(Plot::lines("occupation", "occupation", "lo", &["empirical", "analytic"]));
        summary["long_run_ks"] = json!(ks);
        summary["occupation_samples"] = json!(hist.total());
        gates.push(Gate::new("long_run_law", ks < p.ks_gate, format!("KS distance {ks:.4} (limit {})", p.ks_gate)));
    }
    Ok(Report { tables, summary, gates, plots })
}

fn trace(cfg: &ExperimentConfig, p: &TraceParams) -> Result<Report> {
    let passage = |measure: &RestartMeasure, label: u64| -> Result<trace::ExponentReport> {
        let pc = PassageConfig { level: p.level, horizon: p.horizon, h: p.h, n_paths: p.n_paths, seed: seed_for(cfg, label) };
        let times = trace::passage_times(measure, &pc, &Parallel)?;
        trace::inverse_local_time_exponent(&times, p.level, &p.lambdas, p.resamples, seed_for(cfg, label + 1))
    };
    let calibration =
        if p.calibrate { Calibration::from_report(&passage(&RestartMeasure::zero(), 3)?)? } else { Calibration::EXACT };
    let rep = passage(&cfg.measure, 1)?;
    let mut exp = Table::new(
        "exponent",
        &["lambda", "psi_hat", "std_error", "ci_low", "ci_high", "prediction", "prediction_std_error", "z"],
    );
    let mut rows = Vec::new();
    for e in &rep.estimates {
        let (pred, pred_se) = calibration.predict(&cfg.measure, e.lambda)?;
        let sigma = e.std_error.hypot(pred_se);
        let z = (e.psi - pred) / sigma;
        exp.push(vec![
            num(e.lambda),
            num(e.psi),
            num(e.std_error),
            num(e.ci_low),
            num(e.ci_high),
            num(pred),
            num(pred_se),
            num(z),
        ]);
        rows.push(json!({ "lambda": e.lambda, "psi_hat": e.psi, "prediction": pred, "z": z,
            "relative_error": (e.psi - pred).abs() / pred }));
    }
    let mut summary = json!({
        "kappa": cfg.kappa(),
        "level": p.level,
        "reached": rep.reached,
        "total": rep.total,
        "calibration": { "constant": calibration.constant, "std_error": calibration.std_error, "measured": p.calibrate },
        "exponent": rows,
    });
    let mut tables = vec![exp];
    let mut gates = Vec::new();
    let mut plots = vec![Plot::lines("exponent", "exponent", "lambda", &["psi_hat", "prediction"])];
    if p.dtn_points > 0 {
        let f = GridField::windowed(|x| (-0.5 * x * x).exp(), p.dtn_length, p.dtn_points)?;
        let d = dtn::dtn_compare(&f, &cfg.measure)?;
        let mut sym = Table::new("symbol", &["xi", "residual"]);
        for (xi, r) in &d.symbol_residuals {
            sym.push(vec![num(*xi), num(*r)]);
        }
        let mut field = Table::new("dtn", &["x", "f", "direct", "symbol"]);
        for (((x, v), a), b) in f.points().into_iter().zip(f.values()).zip(&d.direct).zip(&d.symbol) {
            field.push(vec![num(x), num(*v), num(*a), num(*b)]);
        }
        let mut pair = Table::new("pairings", &["field", "pairing", "max_residual"]);
        let mut worst = d.pairing;
        let field_seed = seed_for(cfg, 5);
        for i in 0..p.dtn_fields {
            let g = dtn::random_smooth_field(field_seed, i as u64, p.dtn_length, p.dtn_points)?;
            let r = dtn::dtn_compare(&g, &cfg.measure)?;
            worst = worst.max(r.pairing);
            pair.push(vec![i.to_string(), num(r.pairing), num(r.max_residual)]);
        }
        summary["dtn"] = json!({
            "max_residual": d.max_residual,
            "windowed": f.was_windowed(),
            "largest_pairing": worst,
        });
        gates.push(Gate::new(
            "dtn_symbol",
            d.max_residual < 5e-3,
            format!("max residual {:.3e} (limit 5e-3)", d.max_residual),
        ));
        gates.push(Gate::new("dtn_negativity", worst <= 0.0, format!("largest ⟨Kf, f⟩ = {worst:.3e}")));
        tables.extend([sym, field, pair]);
        plots.push(Plot::lines("symbol", "symbol", "xi", &["residual"]).log_y());
        plots.push(Plot::lines("dtn", "dtn", "x", &["direct", "symbol"]));
    }
    Ok(Report { tables, summary, gates, plots })
}

/// The core escape setup described by an escape config.
pub fn escape_config(cfg: &ExperimentConfig, p: &EscapeParams) -> EscapeConfig {
    let dumbbell = match &cfg.domain {
        DomainSpec::Dumbbell(db) => *db.params(),
        _ => DumbbellParams::standard(0.4),
    };
    EscapeConfig {
        dumbbell,
        target: Ball::new(p.target_center, p.target_radius),
        core_set: Ball::new(p.core_center, p.core_radius),
        measure: cfg.measure.clone(),
        eps_grid: p.eps_grid.clone(),
        n_paths: p.n_paths,
        h: p.h,
        horizon: p.horizon,
    }
}

fn status_name(s: RowStatus) -> &'static str {
    match s {
        RowStatus::Exact => "exact",
        RowStatus::LowerBound => "lower_bound",
        RowStatus::CensoringDominates => "censoring_dominates",
    }
}

fn mfpt_cells(r: &MfptRow) -> Vec<String> {
    let e = &r.estimate;
    vec![
        num(r.eps),
        num(r.x0.x),
        num(r.x0.y),
        r.dynamics.name().into(),
        num(e.mean),
        num(e.std_error),
        num(e.censored_fraction()),
        status_name(r.status()).into(),
    ]
}

fn escape(cfg: &ExperimentConfig, p: &EscapeParams) -> Result<Report> {
    let esc = escape_config(cfg, p);
    let mut mfpt = Table::new(
        "mfpt",
        &["eps", "x0_x", "x0_y", "dynamics", "mfpt", "std_error", "censored_fraction", "status"],
    );
    let mut all_rows = Vec::new();
    let mut summary = json!({ "kappa": cfg.kappa() });
    let mut gates = Vec::new();
    let mut extra = Vec::new();
    if p.reflected {
        let rows = escape::mfpt_reflected(&esc, &[p.x0], seed_for(cfg, 1), &Parallel)?;
        let xs: Vec<f64> = rows.iter().map(|r| (1.0 / r.eps).ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.estimate.mean).collect();
        let mut increasing = true;
        let mut separated = true;
        let mut order: Vec<&MfptRow> = rows.iter().collect();
        order.sort_by(|a, b| b.eps.total_cmp(&a.eps));
        for w in order.windows(2) {
            let (wide, narrow) = (&w[0].estimate, &w[1].estimate);
            increasing &= narrow.mean > wide.mean;
            separated &= narrow.mean - wide.mean > 3.0 * narrow.std_error.hypot(wide.std_error);
        }
        let fit = (rows.len() >= 2).then(|| linear_fit(&xs, &ys));
        summary["reflected"] = json!({
            "increasing": increasing,
            "separated_3sigma": separated,
            "log_fit": fit.map(|f| json!({ "slope": f.slope, "intercept": f.intercept, "r_squared": f.r_squared })),
        });
        all_rows.extend(rows);
    }
    if p.jump {
        let mut bounds = Table::new(
            "bound",
            &[
                "eps",
                "alpha0",
                "s_hat",
                "s_std_error",
                "r0_hat",
                "r0_std_error",
                "bound",
                "bound_std_error",
                "m_hat",
                "m_std_error",
            ],
        );
        let mut per_eps = Vec::new();
        let mut holds = true;
        for (ie, &eps) in p.eps_grid.iter().enumerate() {
            let b = escape::renewal_bound(&esc, eps, derive_seed(cfg.seed, &[2, ie as u64]), &Parallel)?;
            let single = EscapeConfig { eps_grid: vec![eps], ..esc.clone() };
            let starts = escape::start_grid(&esc, eps)?;
            let rows = escape::mfpt_jump(&single, &starts, derive_seed(cfg.seed, &[3, ie as u64]), &Parallel)?;
            let worst = rows
                .iter()
                .max_by(|a, b| a.estimate.mean.total_cmp(&b.estimate.mean))
                .map(|r| r.estimate)
                .expect("the start grid is never empty");
            let sigma = b.bound_std_error.hypot(worst.std_error);
            let ok = worst.mean <= b.bound + 3.0 * sigma;
            holds &= ok;
            bounds.push(vec![
                num(eps),
                num(b.alpha0),
                num(b.s_hat.mean),
                num(b.s_hat.std_error),
                num(b.r0_hat.mean),
                num(b.r0_hat.std_error),
                num(b.bound),
                num(b.bound_std_error),
                num(worst.mean),
                num(worst.std_error),
            ]);
            per_eps.push(json!({
                "eps": eps, "alpha0": b.alpha0, "s_hat": b.s_hat.mean, "r0_hat": b.r0_hat.mean,
                "bound": b.bound, "bound_std_error": b.bound_std_error,
                "m_hat": worst.mean, "m_std_error": worst.std_error, "holds": ok,
            }));
            all_rows.extend(rows);
        }
        summary["jump"] = Value::Array(per_eps);
        gates.push(Gate::new("renewal_bound", holds, "M̂ ≤ Ŝ/α₀ + R̂₀ + 3σ at every neck width".into()));
        extra.push(bounds);
    }
    for r in &all_rows {
        mfpt.push(mfpt_cells(r));
    }
    gates.push(censoring_gate(&all_rows));
    let mut tables = vec![mfpt];
    tables.extend(extra);
    Ok(Report { tables, summary, gates, plots: escape_plots(p.jump) })
}

fn censoring_gate(rows: &[MfptRow]) -> Gate {
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| r.status() == RowStatus::CensoringDominates)
        .map(|r| format!("{} ε = {} from ({}, {})", r.dynamics.name(), r.eps, r.x0.x, r.x0.y))
        .collect();
    let detail = if bad.is_empty() {
        format!("every row has at most {}% censored paths", escape::CENSORING_LIMIT * 100.0)
    } else {
        format!("censoring dominates: {}", bad.join("; "))
    };
    Gate::new("censoring", bad.is_empty(), detail)
}

fn escape_plots(jump: bool) -> Vec<Plot> {
    let mut plots = vec![Plot::lines("mfpt", "mfpt", "eps", &["mfpt"]).grouped("dynamics")];
    if jump {
        plots.push(Plot::lines("bound", "bound", "eps", &["bound", "m_hat"]));
    }
    plots
}

fn compare(cfg: &ExperimentConfig, p: &CompareParams) -> Result<Report> {
    let dim = cfg.domain.dimension();
    let kappa = cfg.kappa();
    let horizon = p.times.iter().copied().fold(0.0, f64::max);
    let run = pipeline(cfg, p.function, p.modes, horizon, p.dt)?;
    let f = |x: Point| p.function.eval(x);
    let mut table = Table::with_header(
        "compare",
        header(&[
            &["t"],
            &coordinate_names(dim),
            &["u_spectral", "u_mc_jump", "std_error_jump", "u_mc_elastic", "std_error_elastic", "sigma"],
        ]),
    );
    let mut worst: f64 = 0.0;
    let mut largest_sigma: f64 = 0.0;
    for (ix, &x) in p.points.iter().enumerate() {
        let mc_jump = MonteCarlo { n_paths: p.n_paths, h: p.h, seed: derive_seed(cfg.seed, &[1, ix as u64]) };
        let mc_elastic = MonteCarlo { n_paths: p.n_paths, h: p.h, seed: derive_seed(cfg.seed, &[2, ix as u64]) };
        let jump = sde::semigroup_estimates(f, &cfg.domain, &cfg.measure, x, &p.times, &mc_jump, &Parallel)?;
        let elastic = sde::elastic_functional(f, &cfg.domain, kappa, &run.c, x, &p.times, &mc_elastic, &Parallel)?;
        for (k, &t) in p.times.iter().enumerate() {
            let u = spectral::evaluate_solution(&run.basis, &run.coeffs, &run.c, t, x)?;
            let (j, e) = (jump[k], elastic[k]);
            let sigma = j.std_error.max(e.std_error);
            for est in [j, e] {
                let diff = (u - est.mean).abs();
                if est.std_error > 0.0 {
                    worst = worst.max(diff / est.std_error);
                } else if diff > 1e-3 {
                    worst = f64::INFINITY;
                }
            }
            largest_sigma = largest_sigma.max(sigma);
            let mut row = vec![num(t)];
            row.extend(point_cells(x, dim));
            row.extend([num(u), num(j.mean), num(j.std_error), num(e.mean), num(e.std_error), num(sigma)]);
            table.push(row);
        }
    }
    let summary = json!({
        "kappa": kappa,
        "largest_z": worst,
        "largest_sigma": largest_sigma,
        "truncation_warning": truncation_summary(&run.c),
    });
    let gates = vec![Gate::new(
        "agreement",
        worst <= p.z_gate,
        format!("largest |u_spectral − u_MC| / σ = {worst:.3} (limit {})", p.z_gate),
    )];
    let mut plots = Vec::new();
    if dim == 1 {
        plots.push(Plot::lines("compare", "compare", "x", &["u_spectral", "u_mc_jump", "u_mc_elastic"]).grouped("t"));
    }
    Ok(Report { tables: vec![table], summary, gates, plots })
}

/// The first `n` trajectories of the experiment's main ensemble.
fn dump_paths(cfg: &ExperimentConfig, n: usize) -> Result<Table> {
    let dim = cfg.domain.dimension();
    let mut table = Table::with_header("paths", header(&[&["path", "t"], &coordinate_names(dim), &["local_time", "jump"]]));
    let (x0, t_end, h, seed) = match &cfg.params {
        Params::Simulate(p) => (p.x0, p.t_end, p.h, seed_for(cfg, 1)),
        Params::Invariant(p) => (p.x0, p.t_end, p.h, seed_for(cfg, 1)),
        Params::Compare(p) => (
            p.points[0],
            p.times.iter().copied().fold(0.0, f64::max),
            p.h,
            derive_seed(cfg.seed, &[1, 0]),
        ),
        Params::Trace(p) => (Point::ORIGIN, p.horizon, p.h, seed_for(cfg, 1)),
        Params::Spectral(_) | Params::Escape(_) => return Ok(table),
    };
    for i in 0..n {
        let mut rng = path_rng(seed, i as u64);
        let rec = sde::simulate_path(&cfg.domain, &cfg.measure, x0, t_end, h, &mut rng)?;
        let mut next_jump = rec.jump_steps.iter().peekable();
        for (k, (x, l)) in rec.positions.iter().zip(&rec.local_time).enumerate() {
            let jumped = next_jump.next_if(|&&s| s == k).is_some();
            let mut row = vec![i.to_string(), num(rec.time(k))];
            row.extend(point_cells(*x, dim));
            row.extend([num(*l), u8::from(jumped).to_string()]);
            table.push(row);
        }
    }
    Ok(table)
}
