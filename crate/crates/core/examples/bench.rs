//! Times both mode routes and a parallel sweep.

use kg_stark::harness::{bench_solvers, log_spaced, BenchConfig, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig {
        t_samples: log_spaced(1.0, 1e2, 8),
        bench: BenchConfig {
            modes: 256,
            route_modes: 8,
            ..Default::default()
        },
        ..Default::default()
    };
    let report = bench_solvers(&config)?;
    for r in &report.routes {
        println!(
            "{:?}: {:.3} s, {} steps, max Wronskian deviation {:.2e}",
            r.route, r.wall_seconds, r.stats.accepted, r.max_wronskian
        );
    }
    for s in &report.sweep {
        println!("{} workers: {:.0} modes/s, speedup {:.2}", s.workers, s.modes_per_second, s.speedup);
    }
    println!("harness overhead {:.2}%", 100.0 * report.overhead);
    Ok(())
}
