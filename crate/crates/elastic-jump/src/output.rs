//! Report files: RFC 4180 tables, plotting scripts and the run manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{render, ExperimentConfig};
use crate::experiments::{Gate, Plot, PlotKind, Report, Table};

pub const MANIFEST: &str = "manifest.json";
pub const CONFIG_ECHO: &str = "config.toml";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn csv_bytes(table: &Table) -> io::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

fn py_list(items: &[String]) -> String {
    let quoted: Vec<String> = items.iter().map(|s| format!("{s:?}")).collect();
    format!("[{}]", quoted.join(", "))
}

/// A standalone matplotlib script that reads one CSV and saves a PNG.
pub fn plot_script(plot: &Plot) -> String {
    let group = plot.group_by.as_ref().map_or("None".to_string(), |g| format!("{g:?}"));
    let body = match plot.kind {
        PlotKind::Histogram => format!("ax.hist([float(r[{:?}]) for r in rows], bins=50, density=True)\nax.set_xlabel({:?})\n", plot.x, plot.x),
        PlotKind::Lines => format!(
            "groups = {{}}\n\
             for r in rows:\n    groups.setdefault(r[GROUP] if GROUP else '', []).append(r)\n\
             for key, rs in groups.items():\n    rs.sort(key=lambda r: float(r[X]))\n    \
             for y in YS:\n        label = f'{{y}} {{GROUP}}={{key}}' if GROUP else y\n        \
             ax.plot([float(r[X]) for r in rs], [float(r[y]) for r in rs], marker='.', label=label)\n\
             ax.set_xlabel(X)\nax.legend()\n{}",
            if plot.log_y { "ax.set_yscale('log')\n" } else { "" }
        ),
    };
    format!(
        "import csv\nimport sys\n\nimport matplotlib\nmatplotlib.use('Agg')\nimport matplotlib.pyplot as plt\n\n\
         X = {x:?}\nYS = {ys}\nGROUP = {group}\n\n\
         with open(sys.argv[1] if len(sys.argv) > 1 else {csv:?}, newline='') as fh:\n    rows = list(csv.DictReader(fh))\n\n\
         fig, ax = plt.subplots()\n{body}ax.set_title({title:?})\nfig.savefig({png:?}, dpi=150)\n",
        x = plot.x,
        ys = py_list(&plot.ys),
        csv = format!("{}.csv", plot.table),
        title = plot.name,
        png = format!("{}.png", plot.name),
    )
}

fn gates_json(gates: &[Gate]) -> Value {
    Value::Array(gates.iter().map(|g| json!({ "name": g.name, "passed": g.passed, "detail": g.detail })).collect())
}

/// Everything the manifest records besides the files themselves.
pub struct RunInfo<'a> {
    pub config: &'a ExperimentConfig,
    pub dump_paths: usize,
    pub wall_time: f64,
}

fn manifest(info: &RunInfo, rendered: &str, outputs: Vec<Value>, gates: &[Gate], summary: &Value, error: Option<&str>) -> Value {
    json!({
        "experiment": info.config.experiment.name(),
        "seed": info.config.seed,
        "config_sha256": sha256_hex(rendered.as_bytes()),
        "config": rendered,
        "dump_paths": info.dump_paths,
        "versions": {
            "elastic-jump": env!("CARGO_PKG_VERSION"),
            "elastic-jump-core": elastic_jump_core::VERSION,
        },
        "wall_time_seconds": info.wall_time,
        "outputs": outputs,
        "gates": gates_json(gates),
        "passed": error.is_none() && gates.iter().all(|g| g.passed),
        "error": error,
        "summary": summary,
    })
}

fn write(dir: &Path, name: &str, bytes: &[u8], outputs: &mut Vec<Value>) -> io::Result<()> {
    fs::write(dir.join(name), bytes)?;
    outputs.push(json!({ "file": name, "sha256": sha256_hex(bytes), "bytes": bytes.len() }));
    Ok(())
}

/// Writes the tables, plot scripts, config echo and manifest into `dir`.
pub fn write_report(dir: &Path, info: &RunInfo, report: &Report) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let rendered = render(info.config);
    let mut outputs = Vec::new();
    write(dir, CONFIG_ECHO, rendered.as_bytes(), &mut outputs)?;
    for t in &report.tables {
        write(dir, &format!("{}.csv", t.name), &csv_bytes(t)?, &mut outputs)?;
    }
    for p in &report.plots {
        write(dir, &format!("plot_{}.py", p.name), plot_script(p).as_bytes(), &mut outputs)?;
    }
    let m = manifest(info, &rendered, outputs.clone(), &report.gates, &report.summary, None);
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&m)? + "\n")?;
    let mut files: Vec<PathBuf> = outputs.iter().map(|o| dir.join(o["file"].as_str().unwrap_or_default())).collect();
    files.push(dir.join(MANIFEST));
    Ok(files)
}

/// The manifest of a run that stopped on a numerical error.
pub fn write_failure(dir: &Path, info: &RunInfo, error: &str) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let rendered = render(info.config);
    let mut outputs = Vec::new();
    write(dir, CONFIG_ECHO, rendered.as_bytes(), &mut outputs)?;
    let gate = Gate { name: "numerical".into(), passed: false, detail: error.into() };
    let m = manifest(info, &rendered, outputs, &[gate], &Value::Null, Some(error));
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&m)? + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_and_crlf() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec!["1".into(), "x,\"y\"".into()]);
        assert_eq!(csv_bytes(&t).unwrap(), b"a,b\r\n1,\"x,\"\"y\"\"\"\r\n");
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
