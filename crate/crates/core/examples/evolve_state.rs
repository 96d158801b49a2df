//! Evolves a compactly supported datum and tracks norms over time.

use kg_stark::fields::{FieldKind, FieldModel, PhysicalParams};
use kg_stark::harness::{BumpConfig, InitialData};
use kg_stark::modes::{Dispersion, Method};
use kg_stark::propagator::{k_alpha_half, sobolev_norm, Direction, Grid, GridPropagator, Weighting};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = PhysicalParams::default();
    let kind = FieldKind::PowerLaw {
        gamma: 0.5,
        coeff: 1.0,
        rho: vec![],
        theta1: vec![],
    };
    let disp = Dispersion::new(params, FieldModel::new(kind, &params, 0)?)?;
    let grid = Grid::new(1, 256, 16.0 * std::f64::consts::PI)?;
    let state = InitialData::from_seed(0, 0, 1, &BumpConfig::default()).state(grid, &disp)?;
    let times = [1.0, 10.0, 100.0, 1000.0];
    let prop = GridPropagator::new(&disp, &state, &times, Method::AmplitudePhase, 1e-10)?;
    println!("{} active modes", prop.active_modes().len());

    let weighted = k_alpha_half(&state, &disp, 0.0, Direction::Forward)?;
    let norms = prop.norm_series(&weighted, Weighting::Alpha(0.0))?;
    for (t, n) in prop.times().iter().zip(&norms) {
        let raw = prop.evolve(&state, *t, Weighting::Raw)?;
        println!(
            "t = {t:>6}: ‖U₀,₀Φ‖ = {n:.6}, ‖ψ‖ = {:.6}, ‖L^(1/4)ψ‖ = {:.6}",
            raw.component_norm(0),
            sobolev_norm(&raw, &disp, 0.25, 0)
        );
    }
    Ok(())
}
