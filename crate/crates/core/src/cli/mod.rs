//! Batch front end: parse a run config, run one experiment, write its run
//! directory.
//!
//! Exit status: 0 success, 1 an asserted invariant failed, 2 malformed
//! config, 3 unknown config key, 4 constraint violation, 5 runtime error.

mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

pub use config::{parse_config, parse_config_at, ConfigError, Experiment, FieldSpec, RunConfig};

use crate::fields::{audit_e1, E1Report, Verdict};
use crate::harness::{
    bench_solvers, config_digest, route_name, run_decay, run_energy_bound, run_instability, run_simulation, run_stability,
    write_run, Check, HarnessError, RunFile, WRONSKIAN_TARGET,
};
use crate::propagator::NormTrace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_RUNTIME: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "kgstark", version, about = "Klein–Gordon propagators in time-dependent electric fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the seeded datum and check norm bookkeeping.
    Simulate(RunArgs),
    /// Operator-norm envelope of the unweighted propagator.
    Stability(RunArgs),
    /// Growth or decay of weighted norms against |b(t)|.
    Instability(RunArgs),
    /// Sobolev-weighted decay exponents.
    Decay(RunArgs),
    /// Two-sided energy bounds.
    Energy(RunArgs),
    /// Integrability audit of the field.
    #[command(name = "audit-e1")]
    AuditE1(RunArgs),
    /// Solver cost and parallel scaling.
    Bench(RunArgs),
}

#[derive(Debug, Args, Clone)]
pub struct RunArgs {
    /// JSON run config; omitted means all defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output root; overrides the config's `output`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Caps the number of parallel mode solves.
    #[arg(long)]
    pub workers: Option<usize>,
}

impl Command {
    pub fn split(&self) -> (Experiment, &RunArgs) {
        match self {
            Command::Simulate(a) => (Experiment::Simulate, a),
            Command::Stability(a) => (Experiment::Stability, a),
            Command::Instability(a) => (Experiment::Instability, a),
            Command::Decay(a) => (Experiment::Decay, a),
            Command::Energy(a) => (Experiment::Energy, a),
            Command::AuditE1(a) => (Experiment::AuditE1, a),
            Command::Bench(a) => (Experiment::Bench, a),
        }
    }
}

/// Everything a finished run produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub passed: bool,
    pub summary: serde_json::Value,
}

/// Parses the command line, runs, and returns the process exit status.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let (experiment, args) = cli.command.split();
    execute(experiment, args)
}

pub fn execute(experiment: Experiment, args: &RunArgs) -> i32 {
    let config = match load(args.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    if let Some(selected) = config.experiment {
        if selected != experiment {
            let e = ConfigError::Constraint(format!(
                "experiment is \"{}\" but the subcommand is {}",
                selected.name(),
                experiment.name()
            ));
            eprintln!("error: {e}");
            return e.exit_code();
        }
    }
    if let Some(n) = args.workers {
        if n == 0 {
            eprintln!("error: constraint violated: --workers ≥ 1");
            return 4;
        }
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("runs"));
    let result = match args.workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(experiment, &config, &out)),
            Err(e) => Err(HarnessError::Config(format!("thread pool: {e}"))),
        },
        None => run(experiment, &config, &out),
    };
    match result {
        Ok(outcome) => {
            if let Some(text) = outcome.summary.get("text").and_then(|t| t.as_str()) {
                print!("{text}");
            }
            println!("run directory: {}", outcome.dir.display());
            if outcome.passed {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn load(path: Option<&Path>) -> Result<RunConfig, ConfigError> {
    match path {
        None => parse_config("{}"),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError::Parse(format!("cannot read {}: {e}", p.display())))?;
            let base = p.parent().filter(|b| !b.as_os_str().is_empty()).unwrap_or(Path::new("."));
            parse_config_at(&text, base)
        }
    }
}

fn audit(config: &RunConfig) -> Result<E1Report, crate::fields::FieldError> {
    let c = &config.experiment_config;
    audit_e1(&c.field, &c.params, config.audit_a, &config.audit_horizons)
}

fn summary_text(experiment: Experiment, digest: &str, passed: bool, checks: &[Check], warning: Option<&str>) -> String {
    let mut text = format!("{} {}\n", experiment.name(), &digest[..16]);
    if let Some(w) = warning {
        text.push_str(&format!("WARNING: {w}\n"));
    }
    for c in checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        text.push_str(&format!("  {tag} {} = {:.6e} (limit {:.3e})\n", c.name, c.value, c.limit));
    }
    text.push_str(if passed { "result: ok\n" } else { "result: invariant failed\n" });
    text
}

/// Runs one experiment and writes `<out>/<experiment>-<digest>/`.
pub fn run(experiment: Experiment, config: &RunConfig, out: &Path) -> Result<RunOutcome, HarnessError> {
    let stamped = json!({ "experiment": experiment.name(), "config": config.resolved });
    let digest = config_digest(&stamped);
    let cfg = &config.experiment_config;

    let mut files = Vec::new();
    let mut warning = None;
    let mut audit_json = serde_json::Value::Null;
    if experiment != Experiment::AuditE1 {
        match audit(config) {
            Ok(report) => {
                if report.verdict == Verdict::Fail {
                    warning = Some(format!(
                        "field fails the E1 integrability audit (e1 still growing at t = {}); the stability theory does not cover it",
                        report.horizon
                    ));
                }
                audit_json = json!({ "verdict": report.verdict, "e0": report.e0_estimate, "e1": report.e1_estimate });
            }
            Err(e) => warning = Some(format!("E1 audit unavailable: {e}")),
        }
    }

    let (result, passed, checks, trace): (serde_json::Value, bool, Vec<Check>, Option<NormTrace>) = match experiment {
        Experiment::Simulate => {
            let r = run_simulation(cfg)?;
            let mut bin = Vec::new();
            r.final_state.write_binary(&mut bin)?;
            files.push(RunFile::new("final_state.bin", bin));
            let mut csv_bytes = Vec::new();
            r.final_state.write_csv(&mut csv_bytes)?;
            files.push(RunFile::new("final_state.csv", csv_bytes));
            (serde_json::to_value(&r)?, r.passed, r.checks.clone(), Some(r.trace))
        }
        Experiment::Stability => {
            let r = run_stability(cfg)?;
            (serde_json::to_value(&r)?, r.passed, r.checks.clone(), Some(r.trace))
        }
        Experiment::Instability => {
            let r = run_instability(cfg)?;
            (serde_json::to_value(&r)?, r.passed, r.checks.clone(), Some(r.trace))
        }
        Experiment::Decay => {
            let r = run_decay(cfg)?;
            (serde_json::to_value(&r)?, r.passed, r.checks.clone(), Some(r.trace))
        }
        Experiment::Energy => {
            let r = run_energy_bound(cfg)?;
            (serde_json::to_value(&r)?, r.passed, r.checks.clone(), Some(r.trace))
        }
        Experiment::AuditE1 => {
            let r = audit(config)?;
            let mut trace = NormTrace::new(r.per_horizon.iter().map(|h| h.horizon).collect())?;
            trace.insert("e0", r.per_horizon.iter().map(|h| h.e0).collect())?;
            trace.insert("e1", r.per_horizon.iter().map(|h| h.e1).collect())?;
            trace.insert("b_norm", r.per_horizon.iter().map(|h| h.b_norm).collect())?;
            (serde_json::to_value(&r)?, true, vec![], Some(trace))
        }
        Experiment::Bench => {
            let r = bench_solvers(cfg)?;
            files.push(r.route_table()?);
            let checks = r
                .routes
                .iter()
                .map(|route| {
                    Check::at_most(
                        format!("{}_wronskian", route_name(route.route)),
                        route.max_wronskian,
                        WRONSKIAN_TARGET,
                    )
                })
                .collect();
            (serde_json::to_value(&r)?, r.passed, checks, None)
        }
    };
    if let Some(mut trace) = trace {
        trace.digest = digest.clone();
        files.extend(RunFile::from_trace(&trace)?);
    }
    let text = summary_text(experiment, &digest, passed, &checks, warning.as_deref());
    let summary = json!({
        "tool": "kgstark",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": experiment.name(),
        "digest": digest,
        "passed": passed,
        "warning": warning,
        "e1_audit": audit_json,
        "result": result,
        "text": text,
    });
    files.push(RunFile::json("config.json", &stamped)?);
    files.push(RunFile::json("summary.json", &summary)?);
    files.push(RunFile::new("summary.txt", text.into_bytes()));
    let dir = write_run(out, experiment.name(), &digest, &files)?;
    Ok(RunOutcome { dir, passed, summary })
}
