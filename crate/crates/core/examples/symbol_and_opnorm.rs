//! Propagator symbol at a few frequencies and the operator norm of `U₀,α(t)`.

use kg_stark::fields::{FieldKind, FieldModel, PhysicalParams};
use kg_stark::modes::{integrate_mode, Dispersion, Method};
use kg_stark::propagator::{assemble_symbol, operator_norm_series, OperatorNormOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = PhysicalParams::default();
    let kind = FieldKind::PowerLaw {
        gamma: 0.5,
        coeff: 1.0,
        rho: vec![],
        theta1: vec![],
    };
    let disp = Dispersion::new(params, FieldModel::new(kind, &params, 0)?)?;
    let times = [0.0, 10.0, 100.0];
    for xi in [-2.0, 0.0, 2.0] {
        let traj = integrate_mode(Method::AmplitudePhase, &disp, [xi, 0.0], &times, 1e-10)?;
        let m = assemble_symbol(&disp, &traj, 100.0, 0.0)?;
        let (smax, smin) = m.singular_values();
        println!("ξ = {xi:+}: |det M₀| = {:.12}, σ = ({smax:.6}, {smin:.6})", m.det().norm());
    }
    let (norms, stats) = operator_norm_series(&disp, &[1.0, 10.0, 100.0], 0.0, &OperatorNormOptions::default())?;
    for n in &norms {
        println!("‖U₀,₀({:>5})‖ = {:.6} at ξ = {:+.4}", n.t, n.value, n.argmax[0]);
    }
    println!("{} accepted steps in total", stats.accepted);
    Ok(())
}
