//! Instability, decay and energy runs sharing one mode bank, over a
//! shortened horizon.

use kg_stark::harness::{log_spaced, ExperimentConfig, Workspace};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig {
        t_samples: log_spaced(1.0, 1e3, 48),
        ..Default::default()
    };
    let ws = Workspace::new(&config)?;
    let prop = ws.propagator()?;

    let inst = ws.instability(&prop)?;
    for f in &inst.fits {
        if let Some(fit) = f.fit {
            println!("α = {:+}: slope {:+.4} (expected {:+}), r² {:.5}", f.alpha, fit.slope, f.expected_slope, fit.r_squared);
        }
    }
    let decay = ws.decay(&prop)?;
    for f in &decay.fits {
        if let Some(fit) = f.direct {
            println!("θ = {}: slope {:+.4} (exponent {:+})", f.theta, fit.slope, f.exponent);
        }
    }
    let energy = ws.energy(&prop)?;
    println!(
        "e(t)/e(0) ∈ [{:.5}, {:.5}], cross-path gap {:.2e}",
        energy.gamma1_hat, energy.gamma2_hat, energy.cross_path
    );
    for report in [&inst.checks, &decay.checks, &energy.checks] {
        for c in report {
            println!("  {} {} = {:.3e}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.value);
        }
    }
    Ok(())
}
