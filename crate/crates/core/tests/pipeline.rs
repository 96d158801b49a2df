use kg_stark::cli::{parse_config, run, Experiment};
use kg_stark::fields::{FieldModel, PhysicalParams};
use kg_stark::harness::{log_spaced, run_instability, run_stability, ExperimentConfig, Workspace};
use kg_stark::modes::{integrate_mode, uniform_times, Dispersion, Method};
use kg_stark::propagator::{evolve_kg, k_alpha_half, Direction, Weighting};

fn zero_field() -> ExperimentConfig {
    let params = PhysicalParams::default();
    ExperimentConfig {
        field: FieldModel::zero(&params).unwrap(),
        t_samples: log_spaced(1.0, 1e3, 24),
        ..Default::default()
    }
}

#[test]
fn free_modes_match_closed_form() {
    let params = PhysicalParams::default();
    let disp = Dispersion::new(params, FieldModel::zero(&params).unwrap()).unwrap();
    let times = uniform_times(50.0, 200);
    for xi in [0.0, 0.7, 3.0] {
        let q = (xi * xi + 1.0_f64).sqrt();
        for method in [Method::Direct, Method::AmplitudePhase] {
            let traj = integrate_mode(method, &disp, [xi, 0.0], &times, 1e-10).unwrap();
            for (i, &t) in times.iter().enumerate() {
                assert!((traj.zeta0[i] - (q * t).cos()).abs() < 1e-7, "{method:?} ξ={xi} t={t}");
                assert!((traj.zeta1[i] - (q * t).sin() / q).abs() < 1e-7, "{method:?} ξ={xi} t={t}");
            }
        }
    }
}

#[test]
fn zero_field_stability_envelope_is_one() {
    let report = run_stability(&ExperimentConfig {
        opnorm: kg_stark::propagator::OperatorNormOptions {
            window: Some((-4.0, 4.0)),
            ..Default::default()
        },
        ..zero_field()
    })
    .unwrap();
    assert!((report.gamma1_hat - 1.0).abs() < 1e-9 && (report.gamma2_hat - 1.0).abs() < 1e-9);
}

#[test]
fn zero_field_instability_is_conservative() {
    let report = run_instability(&zero_field()).unwrap();
    assert!(report.passed);
    assert!(report.fits.iter().all(|f| f.fit.is_none() && (f.final_norm / f.initial_norm - 1.0).abs() < 1e-10));
}

#[test]
fn weighting_round_trip_and_free_evolution() {
    let ws = Workspace::new(&zero_field()).unwrap();
    for alpha in [-0.25, 0.0, 0.25] {
        let there = k_alpha_half(&ws.state, &ws.disp, alpha, Direction::Forward).unwrap();
        let back = k_alpha_half(&there, &ws.disp, alpha, Direction::Inverse).unwrap();
        let err: f64 = (0..2)
            .flat_map(|k| ws.state.phi[k].iter().zip(&back.phi[k]).map(|(a, b)| (a - b).norm()))
            .fold(0.0, f64::max);
        assert!(err < 1e-13);
    }
    let prop = ws.propagator().unwrap();
    let direct = evolve_kg(&ws.state, &ws.disp, 1e3).unwrap();
    let banked = prop.evolve(&ws.state, 1e3, Weighting::Raw).unwrap();
    let gap: f64 = direct.phi[0].iter().zip(&banked.phi[0]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(gap < 1e-12);
}

#[test]
fn runs_are_reproducible_across_worker_counts() {
    let config = parse_config(r#"{"times": {"end": 300, "count": 30}, "seed": 11}"#).unwrap();
    let dirs: Vec<_> = [1, 3]
        .iter()
        .map(|&n| {
            let out = tempfile::tempdir().unwrap();
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
            let outcome = pool.install(|| run(Experiment::Energy, &config, out.path())).unwrap();
            (out, outcome)
        })
        .collect();
    assert_eq!(dirs[0].1.dir.file_name(), dirs[1].1.dir.file_name());
    for name in ["energy_ratio.csv", "config.json"] {
        let a = std::fs::read(dirs[0].1.dir.join(name));
        let b = std::fs::read(dirs[1].1.dir.join(name));
        assert_eq!(a.ok(), b.ok(), "{name}");
    }
    let files: Vec<_> = std::fs::read_dir(&dirs[0].1.dir).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert!(files.iter().any(|f| f.to_string_lossy().ends_with(".csv")));
}

#[test]
fn seed_changes_the_datum_but_not_the_exponents() {
    let slopes: Vec<f64> = [0, 5]
        .iter()
        .map(|&seed| {
            let config = ExperimentConfig {
                seed,
                t_samples: log_spaced(1.0, 1e3, 40),
                ..Default::default()
            };
            let report = run_instability(&config).unwrap();
            report.fits[0].fit.unwrap().slope
        })
        .collect();
    for s in &slopes {
        assert!((s + 0.25).abs() < 0.03, "{s}");
    }
}
