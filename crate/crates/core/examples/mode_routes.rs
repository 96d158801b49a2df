//! Solves one frequency mode by both routes and compares them.

use kg_stark::fields::{FieldKind, FieldModel, PhysicalParams};
use kg_stark::modes::{envelope_check, integrate_mode, uniform_times, wronskian_deviation, Dispersion, Method};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = PhysicalParams::default();
    let kind = FieldKind::PowerLaw {
        gamma: 0.5,
        coeff: 1.0,
        rho: vec![],
        theta1: vec![],
    };
    let disp = Dispersion::new(params, FieldModel::new(kind, &params, 0)?)?;
    let times = uniform_times(100.0, 100);
    let xi = [2.0, 0.0];
    let direct = integrate_mode(Method::Direct, &disp, xi, &times, 1e-10)?;
    let ap = integrate_mode(Method::AmplitudePhase, &disp, xi, &times, 1e-10)?;
    for (name, traj) in [("direct", &direct), ("amplitude-phase", &ap)] {
        println!(
            "{name:>16}: {} steps, {} rhs evaluations, Wronskian deviation {:.2e}",
            traj.stats.accepted,
            traj.stats.rhs_evals,
            wronskian_deviation(traj)
        );
    }
    let gap = (0..times.len())
        .map(|i| (direct.zeta0[i] - ap.zeta0[i]).abs().max((direct.zeta1[i] - ap.zeta1[i]).abs()))
        .fold(0.0, f64::max);
    println!("route gap on ζ₀, ζ₁: {gap:.2e}");
    let env = envelope_check(&ap);
    println!("amplitude envelopes positive: {}", env.positive());
    let last = ap.sample(ap.len() - 1);
    println!("t = {}: ζ₀ = {:+.8}, ζ₁ = {:+.8}, A = {:.6}, C = {:.6}", last.t, last.zeta0, last.zeta1, last.a, last.c);
    Ok(())
}
