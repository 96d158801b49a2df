use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use num_complex::Complex64;

use kg_stark::cli::{parse_config, run, Experiment};
use kg_stark::fields::{audit_e1, FieldKind, FieldModel, PhysicalParams, Vec2, Verdict};
use kg_stark::harness::{log_spaced, run_stability, ExperimentConfig, GridConfig, SlopeFit, Workspace};
use kg_stark::modes::{integrate_mode, uniform_times, wronskian_deviation, Dispersion, Method};
use kg_stark::propagator::{assemble_symbol, k_alpha_half, Direction, GridPropagator, Weighting};

struct Outcome {
    passed: bool,
    detail: String,
}

fn report(id: usize, title: &str, start: Instant, outcome: Result<Outcome, String>) -> bool {
    let secs = start.elapsed().as_secs_f64();
    let (passed, detail) = match outcome {
        Ok(o) => (o.passed, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("{tag} criterion {id:>2} {title} [{secs:.1} s] {detail}");
    passed
}

fn catalog(params: &PhysicalParams) -> Vec<(&'static str, FieldModel)> {
    let power = |gamma: f64| FieldKind::PowerLaw {
        gamma,
        coeff: 1.0,
        rho: vec![],
        theta1: vec![],
    };
    let kinds = [
        ("constant", FieldKind::Constant { e0: [1.0, 0.0] }),
        ("power_law_1/2", power(0.5)),
        ("power_law_1", power(1.0)),
        ("logarithmic", FieldKind::Logarithmic { e3: 1.0, e4: 1.0 }),
    ];
    kinds
        .into_iter()
        .map(|(name, kind)| (name, FieldModel::new(kind, params, 0).unwrap()))
        .collect()
}

const XIS: [f64; 3] = [-2.0, 0.0, 2.0];

fn mode_suite(route_gap: bool) -> Result<Outcome, String> {
    let params = PhysicalParams::default();
    let times = uniform_times(100.0, 401);
    let mut worst: f64 = 0.0;
    for (_, model) in catalog(&params) {
        let disp = Dispersion::new(params, model).map_err(|e| e.to_string())?;
        for xi in XIS {
            let xi = [xi, 0.0];
            let direct = integrate_mode(Method::Direct, &disp, xi, &times, 1e-10).map_err(|e| e.to_string())?;
            let ap = integrate_mode(Method::AmplitudePhase, &disp, xi, &times, 1e-10).map_err(|e| e.to_string())?;
            if route_gap {
                for i in 0..times.len() {
                    worst = worst
                        .max((direct.zeta0[i] - ap.zeta0[i]).abs())
                        .max((direct.zeta1[i] - ap.zeta1[i]).abs());
                }
            } else {
                worst = worst.max(wronskian_deviation(&direct)).max(wronskian_deviation(&ap));
            }
        }
    }
    let limit = if route_gap { 1e-6 } else { 1e-7 };
    Ok(Outcome {
        passed: worst <= limit,
        detail: format!("max deviation {worst:.3e} (limit {limit:.0e})"),
    })
}

fn identity_and_unitarity() -> Result<Outcome, String> {
    let params = PhysicalParams::default();
    let mut id_err: f64 = 0.0;
    for (_, model) in catalog(&params) {
        let disp = Dispersion::new(params, model).map_err(|e| e.to_string())?;
        for xi in XIS {
            let traj = integrate_mode(Method::AmplitudePhase, &disp, [xi, 0.0], &[0.0, 1.0], 1e-10)
                .map_err(|e| e.to_string())?;
            for alpha in [0.0, 0.25, -0.25] {
                let m = assemble_symbol(&disp, &traj, 0.0, alpha).map_err(|e| e.to_string())?.m;
                for (r, row) in m.iter().enumerate() {
                    for (c, v) in row.iter().enumerate() {
                        let target = if r == c { 1.0 } else { 0.0 };
                        id_err = id_err.max((v - target).norm());
                    }
                }
            }
        }
    }

    let config = ExperimentConfig {
        field: FieldModel::zero(&params).unwrap(),
        t_samples: log_spaced(1.0, 1e3, 32),
        ..Default::default()
    };
    let ws = Workspace::new(&config).map_err(|e| e.to_string())?;
    let prop = ws.propagator().map_err(|e| e.to_string())?;
    let weighted = k_alpha_half(&ws.state, &ws.disp, 0.0, Direction::Forward).map_err(|e| e.to_string())?;
    let n0 = weighted.norm();
    let norms = prop.norm_series(&weighted, Weighting::Alpha(0.0)).map_err(|e| e.to_string())?;
    let drift = norms.iter().map(|v| (v / n0 - 1.0).abs()).fold(0.0, f64::max);
    Ok(Outcome {
        passed: id_err <= 1e-12 && drift <= 1e-10,
        detail: format!("|M(0) − I| = {id_err:.2e} (1e-12), zero-field norm drift {drift:.2e} (1e-10)"),
    })
}

fn determinant() -> Result<Outcome, String> {
    let params = PhysicalParams::default();
    let times = log_spaced(1e-2, 1e3, 48);
    let mut sampled = vec![0.0];
    sampled.extend(times);
    let mut worst: f64 = 0.0;
    for (name, model) in catalog(&params) {
        if name == "constant" || name == "power_law_1" {
            continue;
        }
        let disp = Dispersion::new(params, model).map_err(|e| e.to_string())?;
        for xi in XIS {
            let traj = integrate_mode(Method::AmplitudePhase, &disp, [xi, 0.0], &sampled, 1e-10)
                .map_err(|e| e.to_string())?;
            for &t in &sampled {
                let m = assemble_symbol(&disp, &traj, t, 0.0).map_err(|e| e.to_string())?;
                worst = worst.max((m.det().norm() - 1.0).abs());
            }
        }
    }
    Ok(Outcome {
        passed: worst <= 1e-8,
        detail: format!("max ||det M₀| − 1| = {worst:.3e} (1e-8)"),
    })
}

fn stability() -> Result<Outcome, String> {
    let report = run_stability(&ExperimentConfig::default()).map_err(|e| e.to_string())?;
    let ok = report.ratio.is_finite() && report.gamma1_hat > 0.0 && report.drift < 0.01;
    Ok(Outcome {
        passed: ok,
        detail: format!(
            "envelope [{:.5}, {:.5}], ratio {:.5}, final-decade drift {:.2e} (0.01)",
            report.gamma1_hat, report.gamma2_hat, report.ratio, report.drift
        ),
    })
}

/// `‖U₀,α(t)Φ₀,α‖` by a naive DFT of the raw data and per-mode symbols
/// rebuilt from the stored amplitudes and phases.
fn brute_force_norms(ws: &Workspace, alpha: f64, times: &[f64]) -> Result<Vec<f64>, String> {
    let grid = ws.grid;
    let n = grid.points();
    let dx = grid.dx();
    let dxi = grid.dxi();
    let x0 = -grid.half_width();
    let spectrum = |phi: &[Complex64]| -> Vec<(f64, Complex64)> {
        (0..n)
            .map(|k| {
                let kk = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
                let xi = kk * dxi;
                let sum: Complex64 = (0..n)
                    .map(|j| phi[j] * Complex64::from_polar(1.0, -xi * (x0 + j as f64 * dx)))
                    .sum();
                (xi, sum * dx / (2.0 * PI).sqrt())
            })
            .collect()
    };
    let s0 = spectrum(&ws.state.phi[0]);
    let s1 = spectrum(&ws.state.phi[1]);
    let peak = s0.iter().chain(&s1).map(|(_, v)| v.norm()).fold(0.0, f64::max);
    let mut sampled = vec![0.0];
    sampled.extend_from_slice(times);
    let mut sums = vec![0.0; times.len()];
    for ((xi, u0), (_, u1)) in s0.iter().zip(&s1) {
        if u0.norm().max(u1.norm()) <= 1e-13 * peak {
            continue;
        }
        let xi: Vec2 = [*xi, 0.0];
        let traj = integrate_mode(ws.config.method, &ws.disp, xi, &sampled, ws.config.tol).map_err(|e| e.to_string())?;
        let q0 = ws.disp.l0(xi).sqrt();
        for (slot, &t) in times.iter().enumerate() {
            let i = slot + 1;
            let lt = ws.disp.l(t, xi);
            let q = lt.sqrt();
            let (g0, g1, b, d) = (traj.g0[i], traj.g1[i], traj.b[i], traj.d[i]);
            let z0 = g0 * (q0 / q).sqrt() * b.cos();
            let z0p = -g0 * (q0 * q).sqrt() * b.sin();
            let z1 = g1 / (q * q0).sqrt() * d.sin();
            let z1p = g1 * (q / q0).sqrt() * d.cos();
            let i_unit = Complex64::i();
            let r0 = z0 * u0 - i_unit * z1 * u1;
            let r1 = i_unit * z0p * u0 + z1p * u1;
            sums[slot] += lt.powf(0.5 - alpha) * r0.norm_sqr() + lt.powf(-0.5 - alpha) * r1.norm_sqr();
        }
    }
    Ok(sums.into_iter().map(|s| (s * dxi).sqrt()).collect())
}

fn oracle_check() -> Result<(f64, Vec<f64>), String> {
    let config = ExperimentConfig {
        grid: GridConfig {
            points: 64,
            half_width: 4.0 * PI,
        },
        ..Default::default()
    };
    let ws = Workspace::new(&config).map_err(|e| e.to_string())?;
    let prop = ws.propagator().map_err(|e| e.to_string())?;
    let times = &ws.config.t_samples;
    let mut worst: f64 = 0.0;
    let mut slopes = Vec::new();
    for alpha in [0.25, -0.25] {
        let weighted = k_alpha_half(&ws.state, &ws.disp, alpha, Direction::Forward).map_err(|e| e.to_string())?;
        let fast = prop.norm_series(&weighted, Weighting::Alpha(alpha)).map_err(|e| e.to_string())?;
        let fast = &fast[fast.len() - times.len()..];
        let slow = brute_force_norms(&ws, alpha, times)?;
        for (a, b) in fast.iter().zip(&slow) {
            worst = worst.max((a / b - 1.0).abs());
        }
        let (x, y): (Vec<f64>, Vec<f64>) = times
            .iter()
            .zip(&slow)
            .filter(|(t, _)| **t >= 100.0)
            .map(|(t, v)| (ws.disp.model().jet(*t).b[0].abs().ln(), v.ln()))
            .unzip();
        slopes.push(SlopeFit::fit(&x, &y, (100.0, 1e4)).map_err(|e| e.to_string())?.slope);
    }
    Ok((worst, slopes))
}

fn instability(ws: &Workspace, prop: &GridPropagator<'_>) -> Result<Outcome, String> {
    let (oracle_gap, oracle_slopes) = oracle_check()?;
    let report = ws.instability(prop).map_err(|e| e.to_string())?;
    let mut ok = oracle_gap <= 1e-8;
    let mut detail = format!("oracle gap {oracle_gap:.2e} (1e-8)");
    for (a, expected) in [(0.25, -0.25), (-0.25, 0.25)] {
        let fit = report.fits.iter().find(|f| f.alpha == a).and_then(|f| f.fit);
        match fit {
            Some(f) => {
                ok &= (f.slope - expected).abs() <= 0.03 && f.r_squared >= 0.98;
                detail.push_str(&format!(", α={a:+}: slope {:+.5} r² {:.5}", f.slope, f.r_squared));
            }
            None => {
                ok = false;
                detail.push_str(&format!(", α={a:+}: no fit"));
            }
        }
    }
    for (a, s) in [0.25, -0.25].iter().zip(&oracle_slopes) {
        ok &= (s + a).abs() <= 0.03;
    }
    detail.push_str(&format!(", oracle slopes {:+.4}/{:+.4}", oracle_slopes[0], oracle_slopes[1]));
    Ok(Outcome { passed: ok, detail })
}

fn decay(ws: &Workspace, prop: &GridPropagator<'_>) -> Result<Outcome, String> {
    let report = ws.decay(prop).map_err(|e| e.to_string())?;
    let slope = |theta: f64| {
        report
            .fits
            .iter()
            .find(|f| f.theta == theta)
            .and_then(|f| f.direct)
            .map(|f| (f.slope, f.r_squared))
    };
    let (s0, r0) = slope(0.0).ok_or("no θ=0 fit")?;
    let (s1, _) = slope(0.25).ok_or("no θ=1/4 fit")?;
    let ok = s0 <= -0.45 && r0 >= 0.98 && (-0.05..=0.05).contains(&s1);
    Ok(Outcome {
        passed: ok,
        detail: format!("θ=0 slope {s0:+.5} (r² {r0:.5}), θ=1/4 slope {s1:+.5}"),
    })
}

fn energy(ws: &Workspace, prop: &GridPropagator<'_>) -> Result<Outcome, String> {
    let report = ws.energy(prop).map_err(|e| e.to_string())?;
    let ok = report.gamma1_hat > 0.0
        && report.gamma2_hat.is_finite()
        && report.drift < 0.01
        && report.cross_path <= 1e-8;
    Ok(Outcome {
        passed: ok,
        detail: format!(
            "e(t)/e(0) ∈ [{:.5}, {:.5}], drift {:.2e}, cross-path {:.2e} (1e-8)",
            report.gamma1_hat, report.gamma2_hat, report.drift, report.cross_path
        ),
    })
}

fn auditor() -> Result<Outcome, String> {
    let params = PhysicalParams::default();
    let power = FieldKind::PowerLaw {
        gamma: 0.5,
        coeff: 1.0,
        rho: vec![],
        theta1: vec![],
    };
    let sinusoidal = FieldKind::Sinusoidal {
        gamma: 0.5,
        coeff: 1.0,
        amplitude: 1.0,
        frequency: 1.0,
    };
    let cases = [
        ("power_law", FieldModel::new(power, &params, 0).unwrap(), Verdict::Pass),
        (
            "logarithmic",
            FieldModel::new(FieldKind::Logarithmic { e3: 1.0, e4: 1.0 }, &params, 0).unwrap(),
            Verdict::Pass,
        ),
        ("sinusoidal", FieldModel::new(sinusoidal, &params, 0).unwrap(), Verdict::Fail),
        ("zero", FieldModel::zero(&params).unwrap(), Verdict::NotApplicable),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, model, expected) in cases {
        let verdicts = [1e3, 1e4]
            .iter()
            .map(|&t| audit_e1(&model, &params, [0.0; 2], &[t / 10.0, t]).map(|r| r.verdict))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let full = audit_e1(&model, &params, [0.0; 2], &[1e2, 1e3, 1e4]).map_err(|e| e.to_string())?;
        ok &= full.verdict == expected && verdicts.iter().all(|v| *v == expected);
        detail.push(format!("{name} {:?}", full.verdict));
    }
    Ok(Outcome {
        passed: ok,
        detail: detail.join(", "),
    })
}

fn csv_files(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            out.insert(name, std::fs::read(&path).map_err(|e| e.to_string())?);
        }
    }
    Ok(out)
}

fn determinism() -> Result<Outcome, String> {
    let config = parse_config(r#"{"times": {"end": 1000, "count": 40}}"#).map_err(|e| e.to_string())?;
    let mut compared = 0;
    for experiment in [
        Experiment::Simulate,
        Experiment::Instability,
        Experiment::Decay,
        Experiment::Energy,
        Experiment::AuditE1,
    ] {
        let a = tempfile::tempdir().map_err(|e| e.to_string())?;
        let b = tempfile::tempdir().map_err(|e| e.to_string())?;
        let first = run(experiment, &config, a.path()).map_err(|e| e.to_string())?;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
        let second = pool.install(|| run(experiment, &config, b.path())).map_err(|e| e.to_string())?;
        let (fa, fb) = (csv_files(&first.dir)?, csv_files(&second.dir)?);
        if fa.is_empty() || fa != fb {
            return Ok(Outcome {
                passed: false,
                detail: format!("{} CSVs differ", experiment.name()),
            });
        }
        compared += fa.len();
    }
    Ok(Outcome {
        passed: true,
        detail: format!("{compared} CSVs byte-identical across runs and worker counts"),
    })
}

fn timed(limit: Duration, outcome: Result<Outcome, String>, start: Instant) -> Result<Outcome, String> {
    outcome.map(|mut o| {
        let elapsed = start.elapsed();
        o.passed &= elapsed <= limit;
        o.detail.push_str(&format!(", runtime {:.1} s (limit {} s)", elapsed.as_secs_f64(), limit.as_secs()));
        o
    })
}

fn main() {
    let mut passed = 0;
    let total = 10;

    let start = Instant::now();
    let c1 = timed(Duration::from_secs(60), mode_suite(false), start);
    passed += report(1, "Wronskian suite", start, c1) as usize;

    let start = Instant::now();
    passed += report(2, "route equivalence", start, mode_suite(true)) as usize;

    let start = Instant::now();
    passed += report(3, "identity and unitarity", start, identity_and_unitarity()) as usize;

    let start = Instant::now();
    passed += report(4, "determinant identity", start, determinant()) as usize;

    let start = Instant::now();
    let c5 = timed(Duration::from_secs(300), stability(), start);
    passed += report(5, "stability envelope", start, c5) as usize;

    let start = Instant::now();
    let shared = Workspace::new(&ExperimentConfig::default()).map_err(|e| e.to_string());
    let ws = match shared {
        Ok(ws) => ws,
        Err(e) => {
            for (id, title) in [(6, "instability slopes"), (7, "decay exponents"), (8, "energy two-sidedness")] {
                report(id, title, start, Err(e.clone()));
            }
            finish(passed, total);
            return;
        }
    };
    let prop = ws.propagator().map_err(|e| e.to_string());
    let outcome = |f: fn(&Workspace, &GridPropagator<'_>) -> Result<Outcome, String>| match &prop {
        Ok(p) => f(&ws, p),
        Err(e) => Err(e.clone()),
    };
    passed += report(6, "instability slopes", start, outcome(instability)) as usize;
    let start = Instant::now();
    passed += report(7, "decay exponents", start, outcome(decay)) as usize;
    let start = Instant::now();
    passed += report(8, "energy two-sidedness", start, outcome(energy)) as usize;

    let start = Instant::now();
    passed += report(9, "E1 auditor", start, auditor()) as usize;

    let start = Instant::now();
    passed += report(10, "determinism", start, determinism()) as usize;

    finish(passed, total);
}

fn finish(passed: usize, total: usize) {
    println!("{passed}/{total} criteria passed");
    if passed != total {
        std::process::exit(1);
    }
}
