//! Builds catalog fields, evaluates `E`, `b` and `b′`, and runs the
//! integrability audit on each.

use kg_stark::fields::{audit_e1, FieldKind, FieldModel, PhysicalParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = PhysicalParams::default();
    let fields = [
        (
            "power_law",
            FieldKind::PowerLaw {
                gamma: 0.5,
                coeff: 1.0,
                rho: vec![],
                theta1: vec![],
            },
        ),
        ("logarithmic", FieldKind::Logarithmic { e3: 1.0, e4: 1.0 }),
        (
            "sinusoidal",
            FieldKind::Sinusoidal {
                gamma: 0.5,
                coeff: 1.0,
                amplitude: 1.0,
                frequency: 1.0,
            },
        ),
    ];
    for (name, kind) in fields {
        let model = FieldModel::new(kind, &params, 0)?;
        let t = 10.0;
        println!(
            "{name:>12}: E({t}) = {:+.6}  b({t}) = {:+.6}  b'({t}) = {:+.6}",
            model.eval_field(t)?[0],
            model.eval_b(t)?[0],
            model.eval_b_prime(t)?[0]
        );
        let report = audit_e1(&model, &params, [0.0; 2], &[1e2, 1e3, 1e4])?;
        for h in &report.per_horizon {
            println!("{:>14}T = {:>7}: e0 = {:.6}, e1 = {:.6}", "", h.horizon, h.e0, h.e1);
        }
        println!("{:>14}verdict {:?}", "", report.verdict);
    }
    Ok(())
}
