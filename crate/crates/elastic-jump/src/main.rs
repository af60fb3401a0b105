use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use elastic_jump::config::{parse_config, ExperimentConfig, ValidationErrors};
use elastic_jump::experiments::{self, RunOptions};
use elastic_jump::output::{self, RunInfo};

const VALIDATION: u8 = 2;
const GATE: u8 = 3;
const IO: u8 = 1;

#[derive(Parser)]
#[command(name = "elastic-jump", version, about = "Elastic Brownian motion with random boundary restarts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output` in the config; default `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed (overrides `seed` in the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the first N trajectories to paths.csv.
        #[arg(long, value_name = "N", default_value_t = 0)]
        dump_paths: usize,
    },
    /// Check a config file and print it with all defaults filled in.
    Validate { config: PathBuf },
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, ExitCode> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(ExitCode::from(VALIDATION));
        }
    };
    parse_config(&text).map_err(|e| report_invalid(&e))
}

fn report_invalid(e: &ValidationErrors) -> ExitCode {
    eprintln!("invalid config:");
    for err in &e.0 {
        eprintln!("  {err}");
    }
    ExitCode::from(VALIDATION)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                print!("{}", elastic_jump::config::render(&cfg));
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run { config, out, seed, dump_paths } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if let Some(s) = seed {
                if s > i64::MAX as u64 {
                    return report_invalid(&ValidationErrors::single("--seed", "must not exceed 2^63 − 1"));
                }
                cfg.seed = s;
            }
            let opts = RunOptions { dump_paths };
            if let Err(e) = experiments::check_options(&cfg, &opts) {
                return report_invalid(&e);
            }
            let dir = out.or_else(|| cfg.output.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
            let start = Instant::now();
            let result = experiments::run(&cfg, &opts);
            let info = RunInfo { config: &cfg, dump_paths, wall_time: start.elapsed().as_secs_f64() };
            match result {
                Ok(report) => {
                    if let Err(e) = output::write_report(&dir, &info, &report) {
                        eprintln!("error: writing {}: {e}", dir.display());
                        return ExitCode::from(IO);
                    }
                    for g in &report.gates {
                        let mark = if g.passed { "pass" } else { "FAIL" };
                        println!("{mark} {}: {}", g.name, g.detail);
                    }
                    if report.passed() {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("numerical gate failed; outputs in {}", dir.display());
                        ExitCode::from(GATE)
                    }
                }
                Err(e) => {
                    eprintln!("numerical gate failed: {e}");
                    if let Err(io) = output::write_failure(&dir, &info, &e.to_string()) {
                        eprintln!("error: writing {}: {io}", dir.display());
                    }
                    ExitCode::from(GATE)
                }
            }
        }
    }
}
