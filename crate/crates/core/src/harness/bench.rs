use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, HarnessError, RunFile};
use crate::fields::Vec2;
use crate::modes::{integrate_mode, wronskian_deviation, Method, ModeTrajectory, SolverStats};

/// Accuracy target both routes must reach at the horizon.
pub const WRONSKIAN_TARGET: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    /// Modes in the parallel sweep.
    pub modes: usize,
    /// Modes solved by both routes for the comparison table.
    pub route_modes: usize,
    /// Modes are spread evenly over `[−window, window]` along the first axis.
    pub window: f64,
    /// Worker counts for the sweep; empty selects 1 and the pool size.
    pub workers: Vec<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            modes: 1024,
            route_modes: 16,
            window: 4.0,
            workers: vec![],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RouteBench {
    pub route: Method,
    pub modes: usize,
    pub wall_seconds: f64,
    pub stats: SolverStats,
    pub max_wronskian: f64,
    pub target_met: bool,
    /// `−log₁₀(max Wronskian deviation)` per second of wall time.
    pub digits_per_second: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepBench {
    pub workers: usize,
    pub wall_seconds: f64,
    pub modes_per_second: f64,
    pub speedup: f64,
    pub efficiency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub t_end: f64,
    pub routes: Vec<RouteBench>,
    pub sweep: Vec<SweepBench>,
    /// Share of single-worker sweep time spent outside the mode solves.
    pub overhead: f64,
    pub overhead_ok: bool,
    /// Speedup at the largest worker count reaches 0.7 × workers.
    pub scaling_ok: bool,
    pub passed: bool,
}

impl BenchReport {
    /// Deterministic per-route table; timings stay in the summary.
    pub fn route_table(&self) -> Result<RunFile, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["route", "modes", "accepted", "rejected", "rhs_evals", "max_wronskian"])?;
        for r in &self.routes {
            w.write_record([
                route_name(r.route).to_string(),
                r.modes.to_string(),
                r.stats.accepted.to_string(),
                r.stats.rejected.to_string(),
                r.stats.rhs_evals.to_string(),
                format!("{:.17e}", r.max_wronskian),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
        Ok(RunFile::new("routes.csv", bytes))
    }
}

pub fn route_name(method: Method) -> &'static str {
    match method {
        Method::Direct => "direct",
        Method::AmplitudePhase => "amplitude_phase",
    }
}

fn spread(n: usize, window: f64) -> Vec<Vec2> {
    (0..n)
        .map(|k| {
            let x = if n == 1 { 0.0 } else { -window + 2.0 * window * k as f64 / (n - 1) as f64 };
            [x, 0.0]
        })
        .collect()
}

/// Wall time, step counts and Wronskian accuracy of both routes, plus the
/// scaling of a parallel amplitude–phase sweep.
pub fn bench_solvers(config: &ExperimentConfig) -> Result<BenchReport, HarnessError> {
    config.validate()?;
    let b = &config.bench;
    if b.modes == 0 || b.route_modes == 0 || !(b.window >= 0.0) {
        return Err(HarnessError::Config("bench.modes, bench.route_modes > 0 and bench.window ≥ 0".into()));
    }
    let disp = config.dispersion()?;
    let t_end = *config.t_samples.last().expect("validated");
    let times = [0.0, t_end];

    let mut routes = Vec::new();
    for route in [Method::Direct, Method::AmplitudePhase] {
        let xis = spread(b.route_modes, b.window);
        let start = Instant::now();
        let trajs = xis
            .iter()
            .map(|xi| integrate_mode(route, &disp, *xi, &times, config.tol))
            .collect::<Result<Vec<ModeTrajectory>, _>>()?;
        let wall_seconds = start.elapsed().as_secs_f64();
        let mut stats = SolverStats::default();
        let mut max_wronskian: f64 = 0.0;
        for traj in &trajs {
            stats += traj.stats;
            max_wronskian = max_wronskian.max(wronskian_deviation(traj));
        }
        routes.push(RouteBench {
            route,
            modes: b.route_modes,
            wall_seconds,
            stats,
            max_wronskian,
            target_met: max_wronskian <= WRONSKIAN_TARGET,
            digits_per_second: -max_wronskian.max(f64::EPSILON).log10() / wall_seconds.max(1e-9),
        });
    }

    let mut workers = if b.workers.is_empty() {
        vec![1, rayon::current_num_threads()]
    } else {
        b.workers.clone()
    };
    workers.sort_unstable();
    workers.dedup();
    workers.retain(|w| *w > 0);
    let xis = spread(b.modes, b.window);
    let mut sweep = Vec::new();
    let mut overhead = 0.0;
    for &n in &workers {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
        let start = Instant::now();
        let solved = pool.install(|| {
            xis.par_iter()
                .map(|xi| {
                    let s = Instant::now();
                    integrate_mode(config.method, &disp, *xi, &times, config.tol).map(|_| s.elapsed().as_secs_f64())
                })
                .collect::<Result<Vec<f64>, _>>()
        })?;
        let wall_seconds = start.elapsed().as_secs_f64();
        if n == 1 {
            let inner: f64 = solved.iter().sum();
            overhead = ((wall_seconds - inner) / wall_seconds).max(0.0);
        }
        sweep.push(SweepBench {
            workers: n,
            wall_seconds,
            modes_per_second: b.modes as f64 / wall_seconds,
            speedup: 1.0,
            efficiency: 1.0,
        });
    }
    if let Some(base) = sweep.first().map(|s| s.wall_seconds * s.workers as f64) {
        for s in &mut sweep {
            s.speedup = base / s.wall_seconds;
            s.efficiency = s.speedup / s.workers as f64;
        }
    }
    let scaling_ok = sweep.last().is_none_or(|s| s.efficiency >= 0.7);
    let passed = routes.iter().all(|r| r.target_met);
    Ok(BenchReport {
        t_end,
        routes,
        sweep,
        overhead,
        overhead_ok: overhead < 0.05,
        scaling_ok,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{FieldModel, PhysicalParams};

    #[test]
    fn zero_field_bench_is_cheap_and_accurate() {
        let params = PhysicalParams::default();
        let config = ExperimentConfig {
            field: FieldModel::zero(&params).unwrap(),
            t_samples: vec![10.0],
            bench: BenchConfig {
                modes: 32,
                route_modes: 4,
                window: 2.0,
                workers: vec![1, 2],
            },
            ..Default::default()
        };
        let report = bench_solvers(&config).unwrap();
        assert!(report.passed);
        assert_eq!(report.routes.len(), 2);
        assert_eq!(report.sweep.len(), 2);
        let table = report.route_table().unwrap();
        let text = String::from_utf8(table.bytes).unwrap();
        assert!(text.starts_with("route,modes,accepted"));
        assert_eq!(text.lines().count(), 3);
    }
}
