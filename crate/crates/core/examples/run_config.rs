//! Parses a run config and executes it into a temporary output directory.

use kg_stark::cli::{parse_config, run, Experiment};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let document = r#"{
        "experiment": "decay",
        "field": {"kind": "sinusoidal", "gamma": 0.5, "coeff": 1.0, "amplitude": 1.0, "frequency": 1.0},
        "times": {"end": 100, "count": 24}
    }"#;
    let config = parse_config(document)?;
    let out = std::env::temp_dir().join("kgstark-example");
    let outcome = run(Experiment::Decay, &config, &out)?;
    print!("{}", outcome.summary["text"].as_str().unwrap_or_default());
    println!("artifacts in {}", outcome.dir.display());

    match parse_config(r#"{"params": {"m": 0}}"#) {
        Err(e) => println!("rejected with exit code {}: {e}", e.exit_code()),
        Ok(_) => println!("unexpectedly accepted"),
    }
    Ok(())
}
