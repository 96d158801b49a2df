use serde::Serialize;

use super::{
    all_passed, Check, ExperimentConfig, HarnessError, InitialData, SlopeFit, DRIFT_LIMIT, FIT_DECADES, MIN_R_SQUARED,
    OVERFLOW_GUARD,
};
use crate::modes::{Dispersion, SolverStats};
use crate::propagator::{
    k_alpha_half, operator_norm_series, sobolev_norm, symbol_at, Direction, Grid, GridPropagator, NormTrace,
    OperatorNorm, SpectralState, Weighting,
};

const SLOPE_TOL: f64 = 0.03;
const DECAY_TOL: f64 = 0.05;
const SYMMETRY_TOL: f64 = 0.02;
const CROSS_PATH_TOL: f64 = 1e-8;
/// Relative variation allowed where a norm is exactly conserved.
const CONSERVED_TOL: f64 = 1e-10;
const WRONSKIAN_TOL: f64 = 1e-7;

/// Validated configuration plus the objects every experiment needs.
pub struct Workspace {
    pub config: ExperimentConfig,
    pub disp: Dispersion,
    pub grid: Grid,
    /// Positive-energy raw datum (seed index 0).
    pub state: SpectralState,
}

impl Workspace {
    pub fn new(config: &ExperimentConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let disp = config.dispersion()?;
        let grid = config.grid()?;
        let state = InitialData::from_seed(config.seed, 0, config.params.n, &config.bump).state(grid, &disp)?;
        Ok(Self {
            config: config.clone(),
            disp,
            grid,
            state,
        })
    }

    /// Mode bank for the main datum over the configured times.
    pub fn propagator(&self) -> Result<GridPropagator<'_>, HarnessError> {
        Ok(GridPropagator::new(
            &self.disp,
            &self.state,
            &self.config.t_samples,
            self.config.method,
            self.config.tol,
        )?)
    }

    fn times(&self) -> &[f64] {
        &self.config.t_samples
    }

    /// Whether `b` vanishes at every sample, so no slope can be fitted.
    fn field_free(&self) -> bool {
        self.times().iter().all(|&t| {
            let b = self.disp.model().jet(t).b;
            b[0] == 0.0 && b[1] == 0.0
        })
    }

    /// Fits `ln v` against `ln |b(t)|` over the final decades of the horizon.
    fn impulse_fit(&self, times: &[f64], values: &[f64]) -> Result<SlopeFit, HarnessError> {
        let t_last = *times.last().ok_or_else(|| HarnessError::Fit("empty series".into()))?;
        let lo = t_last / 10f64.powf(FIT_DECADES);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (&t, &v) in times.iter().zip(values) {
            if t >= lo {
                let b = self.disp.model().jet(t).b;
                let nb = b[0].hypot(b[1]);
                if nb == 0.0 {
                    return Err(HarnessError::Fit(format!("b({t}) = 0 inside the fit window")));
                }
                x.push(nb.ln());
                y.push(v.ln());
            }
        }
        SlopeFit::fit(&x, &y, (lo, t_last))
    }
}

/// Magnitude of the slope of `ln v` against `log₁₀ t` over the final decade.
pub(crate) fn final_decade_drift(times: &[f64], values: &[f64]) -> Result<f64, HarnessError> {
    let t_last = *times.last().ok_or_else(|| HarnessError::Fit("empty series".into()))?;
    let lo = t_last / 10.0;
    let (x, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= lo)
        .map(|(t, v)| (t.log10(), v.ln()))
        .unzip();
    Ok(SlopeFit::fit(&x, &y, (lo, t_last))?.slope.abs())
}

fn max_relative_deviation(values: &[f64], reference: f64) -> f64 {
    values.iter().map(|v| (v / reference - 1.0).abs()).fold(0.0, f64::max)
}

fn trace(times: &[f64]) -> Result<NormTrace, HarnessError> {
    Ok(NormTrace::new(times.to_vec())?)
}

/// Drops the leading `t = 0` entry a bank adds when the samples lack it.
fn at_samples(values: Vec<f64>, samples: usize) -> Vec<f64> {
    let skip = values.len() - samples;
    values.into_iter().skip(skip).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    #[serde(skip)]
    pub trace: NormTrace,
    pub gamma1_hat: f64,
    pub gamma2_hat: f64,
    pub ratio: f64,
    pub drift: f64,
    pub norms: Vec<OperatorNorm>,
    /// `(min, max)` of `‖U₀,₀(t)Φ‖/‖Φ‖` per random datum.
    pub state_envelopes: Vec<(f64, f64)>,
    pub data: Vec<InitialData>,
    pub stats: SolverStats,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Operator norm of `U₀,₀(t)` and state-norm ratios for seeded random data.
pub fn run_stability(config: &ExperimentConfig) -> Result<StabilityReport, HarnessError> {
    let ws = Workspace::new(config)?;
    if config.states < 3 {
        return Err(HarnessError::Config("stability needs at least 3 random states".into()));
    }
    let times = ws.times();
    let (norms, mut stats) = operator_norm_series(&ws.disp, times, 0.0, &config.opnorm)?;
    let values: Vec<f64> = norms.iter().map(|n| n.value).collect();
    let mut trace = trace(times)?;
    trace.insert("operator_norm", values.clone())?;

    let data: Vec<InitialData> = (1..=config.states as u64)
        .map(|k| InitialData::from_seed(config.seed, k, config.params.n, &config.bump))
        .collect();
    let weighted = data
        .iter()
        .map(|d| Ok(k_alpha_half(&d.state(ws.grid, &ws.disp)?, &ws.disp, 0.0, Direction::Forward)?))
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let refs: Vec<&SpectralState> = weighted.iter().collect();
    let prop = GridPropagator::for_states(&ws.disp, &refs, times, config.method, config.tol)?;
    stats += prop.bank().stats;
    let mut state_envelopes = Vec::new();
    for (k, state) in weighted.iter().enumerate() {
        let series = at_samples(prop.norm_series(state, Weighting::Alpha(0.0))?, times.len());
        let n0 = state.norm();
        let ratios: Vec<f64> = series.iter().map(|v| v / n0).collect();
        state_envelopes.push(ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v))));
        trace.insert(&format!("state_ratio_{}", k + 1), ratios)?;
    }

    let (gamma1_hat, gamma2_hat) = trace.envelope("operator_norm").unwrap_or((f64::NAN, f64::NAN));
    let ratio = gamma2_hat / gamma1_hat;
    let drift = final_decade_drift(times, &values)?;
    let mut checks = vec![
        Check::at_least("gamma1_hat_positive", gamma1_hat, f64::MIN_POSITIVE),
        Check::at_most("envelope_ratio_finite", ratio, f64::MAX),
        Check::at_most("final_decade_drift", drift, DRIFT_LIMIT),
    ];
    if ws.field_free() {
        checks.push(Check::at_most(
            "unitary_envelope",
            max_relative_deviation(&values, 1.0),
            CONSERVED_TOL,
        ));
    }
    let passed = all_passed(&checks);
    Ok(StabilityReport {
        trace,
        gamma1_hat,
        gamma2_hat,
        ratio,
        drift,
        norms,
        state_envelopes,
        data,
        stats,
        checks,
        passed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AlphaFit {
    pub alpha: f64,
    pub expected_slope: f64,
    /// `None` for a field-free run, where the norm is conserved instead.
    pub fit: Option<SlopeFit>,
    /// First time the norm passed the overflow guard.
    pub truncated_at: Option<f64>,
    pub initial_norm: f64,
    pub final_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InstabilityReport {
    #[serde(skip)]
    pub trace: NormTrace,
    pub fits: Vec<AlphaFit>,
    pub stats: SolverStats,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub fn run_instability(config: &ExperimentConfig) -> Result<InstabilityReport, HarnessError> {
    let ws = Workspace::new(config)?;
    let prop = ws.propagator()?;
    ws.instability(&prop)
}

impl Workspace {
    /// `‖U₀,α(t)Φ₀,α‖` per `α` with slope fits against `ln |b(t)|`.
    pub fn instability(&self, prop: &GridPropagator<'_>) -> Result<InstabilityReport, HarnessError> {
        let times = self.times();
        if self.config.alpha_list.contains(&0.0) {
            return Err(HarnessError::Config("instability needs alpha ≠ 0".into()));
        }
        let mut trace = trace(times)?;
        let mut fits = Vec::new();
        let mut checks = Vec::new();
        let field_free = self.field_free();
        for &alpha in &self.config.alpha_list {
            let weighted = k_alpha_half(&self.state, &self.disp, alpha, Direction::Forward)?;
            let initial_norm = weighted.norm();
            let mut series = at_samples(prop.norm_series(&weighted, Weighting::Alpha(alpha))?, times.len());
            let cut = series.iter().position(|v| !(*v <= OVERFLOW_GUARD));
            let truncated_at = cut.map(|i| times[i]);
            if let Some(i) = cut {
                series.truncate(i);
            }
            let kept = &times[..series.len()];
            let expected_slope = -alpha;
            let tag = format!("alpha_{alpha}");
            let fit = if field_free {
                checks.push(Check::at_most(
                    format!("{tag}_conserved"),
                    max_relative_deviation(&series, initial_norm),
                    CONSERVED_TOL,
                ));
                None
            } else {
                let fit = self.impulse_fit(kept, &series)?;
                checks.push(Check::at_most(
                    format!("{tag}_slope_error"),
                    (fit.slope - expected_slope).abs(),
                    SLOPE_TOL,
                ));
                checks.push(Check::at_least(format!("{tag}_r_squared"), fit.r_squared, MIN_R_SQUARED));
                Some(fit)
            };
            let final_norm = series.last().copied().unwrap_or(initial_norm);
            let mut padded = series.clone();
            padded.resize(times.len(), OVERFLOW_GUARD);
            trace.insert(&format!("norm_{tag}"), padded)?;
            fits.push(AlphaFit {
                alpha,
                expected_slope,
                fit,
                truncated_at,
                initial_norm,
                final_norm,
            });
        }
        for a in &fits {
            if a.alpha <= 0.0 {
                continue;
            }
            if let Some(b) = fits.iter().find(|b| b.alpha == -a.alpha) {
                if let (Some(fa), Some(fb)) = (a.fit, b.fit) {
                    checks.push(Check::at_most(
                        format!("alpha_{}_symmetry", a.alpha),
                        (fa.slope + fb.slope).abs(),
                        SYMMETRY_TOL,
                    ));
                }
            }
        }
        let passed = all_passed(&checks);
        Ok(InstabilityReport {
            trace,
            fits,
            stats: prop.bank().stats,
            checks,
            passed,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThetaFit {
    pub theta: f64,
    /// `2θ − 1/2`.
    pub exponent: f64,
    /// From the evolved `ψ₀(t)` and `L(0, p)^θ`.
    pub direct: Option<SlopeFit>,
    /// From the first component of `U₀,α(t)K_α^{1/2}Ψ₀` with `α = 1/2 − 2θ`.
    pub weighted: Option<SlopeFit>,
    /// `sup_t ‖L(0,p)^θ ψ₀(t)‖ |b(t)|^{−(2θ−1/2)}` over the fit window.
    pub constant: Option<f64>,
    pub max_path_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    #[serde(skip)]
    pub trace: NormTrace,
    pub fits: Vec<ThetaFit>,
    pub stats: SolverStats,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub fn run_decay(config: &ExperimentConfig) -> Result<DecayReport, HarnessError> {
    let ws = Workspace::new(config)?;
    let prop = ws.propagator()?;
    ws.decay(&prop)
}

impl Workspace {
    pub fn decay(&self, prop: &GridPropagator<'_>) -> Result<DecayReport, HarnessError> {
        let times = self.times();
        let mut trace = trace(times)?;
        let mut fits = Vec::new();
        let mut checks = Vec::new();
        let field_free = self.field_free();
        for &theta in &self.config.theta_list {
            let exponent = 2.0 * theta - 0.5;
            let alpha = 0.5 - 2.0 * theta;
            let weighted0 = k_alpha_half(&self.state, &self.disp, alpha, Direction::Forward)?;
            let mut direct = Vec::with_capacity(times.len());
            let mut weighted = Vec::with_capacity(times.len());
            for &t in times {
                let raw = prop.evolve(&self.state, t, Weighting::Raw)?;
                direct.push(sobolev_norm(&raw, &self.disp, theta, 0));
                weighted.push(prop.evolve(&weighted0, t, Weighting::Alpha(alpha))?.component_norm(0));
            }
            let max_path_gap = direct
                .iter()
                .zip(&weighted)
                .map(|(a, b)| (a - b).abs() / a.abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            let tag = format!("theta_{theta}");
            let (fit_a, fit_b, constant) = if field_free {
                let n0 = sobolev_norm(&self.state, &self.disp, theta, 0);
                checks.push(Check::at_most(
                    format!("{tag}_conserved"),
                    max_relative_deviation(&direct, n0),
                    CONSERVED_TOL,
                ));
                (None, None, None)
            } else {
                let fa = self.impulse_fit(times, &direct)?;
                let fb = self.impulse_fit(times, &weighted)?;
                checks.push(Check::at_most(format!("{tag}_slope_bound"), fa.slope, exponent + DECAY_TOL));
                checks.push(Check::at_most(
                    format!("{tag}_path_consistency"),
                    (fa.slope - fb.slope).abs(),
                    DECAY_TOL,
                ));
                if exponent != 0.0 {
                    checks.push(Check::at_least(format!("{tag}_r_squared"), fa.r_squared, MIN_R_SQUARED));
                }
                let constant = times
                    .iter()
                    .zip(&direct)
                    .filter(|(t, _)| **t >= fa.window.0)
                    .map(|(&t, v)| {
                        let b = self.disp.model().jet(t).b;
                        v * b[0].hypot(b[1]).powf(-exponent)
                    })
                    .fold(0.0, f64::max);
                (Some(fa), Some(fb), Some(constant))
            };
            trace.insert(&format!("sobolev_{tag}"), direct)?;
            trace.insert(&format!("weighted_{tag}"), weighted)?;
            fits.push(ThetaFit {
                theta,
                exponent,
                direct: fit_a,
                weighted: fit_b,
                constant,
                max_path_gap,
            });
        }
        let passed = all_passed(&checks);
        Ok(DecayReport {
            trace,
            fits,
            stats: prop.bank().stats,
            checks,
            passed,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    #[serde(skip)]
    pub trace: NormTrace,
    pub e0: f64,
    pub gamma1_hat: f64,
    pub gamma2_hat: f64,
    pub drift: f64,
    /// Largest `|e(t) − ‖U₀,₀(t)Φ₀,₀‖²| / e(t)`.
    pub cross_path: f64,
    pub stats: SolverStats,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub fn run_energy_bound(config: &ExperimentConfig) -> Result<EnergyReport, HarnessError> {
    let ws = Workspace::new(config)?;
    let prop = ws.propagator()?;
    ws.energy(&prop)
}

impl Workspace {
    fn energy_of(&self, state: &SpectralState) -> f64 {
        sobolev_norm(state, &self.disp, 0.25, 0).powi(2) + sobolev_norm(state, &self.disp, -0.25, 1).powi(2)
    }

    /// `e(t) = ‖L(0,p)^{1/4}ψ₀‖² + ‖L(0,p)^{−1/4}ψ₀₁‖²` against `‖U₀,₀(t)Φ₀,₀‖²`.
    pub fn energy(&self, prop: &GridPropagator<'_>) -> Result<EnergyReport, HarnessError> {
        let times = self.times();
        let e0 = self.energy_of(&self.state);
        let weighted0 = k_alpha_half(&self.state, &self.disp, 0.0, Direction::Forward)?;
        let hilbert = at_samples(prop.norm_series(&weighted0, Weighting::Alpha(0.0))?, times.len());
        let mut energy = Vec::with_capacity(times.len());
        for &t in times {
            energy.push(self.energy_of(&prop.evolve(&self.state, t, Weighting::Raw)?));
        }
        let cross_path = energy
            .iter()
            .zip(&hilbert)
            .map(|(e, h)| (e - h * h).abs() / e)
            .fold(0.0, f64::max);
        let ratio: Vec<f64> = energy.iter().map(|e| e / e0).collect();
        let mut trace = trace(times)?;
        trace.insert("energy", energy)?;
        trace.insert("energy_ratio", ratio.clone())?;
        trace.insert("hilbert_norm_sqr", hilbert.iter().map(|h| h * h).collect())?;
        let (gamma1_hat, gamma2_hat) = trace.envelope("energy_ratio").unwrap_or((f64::NAN, f64::NAN));
        let drift = final_decade_drift(times, &ratio)?;
        let mut checks = vec![
            Check::at_least("gamma1_hat_positive", gamma1_hat, f64::MIN_POSITIVE),
            Check::at_most("gamma2_hat_finite", gamma2_hat, f64::MAX),
            Check::at_most("final_decade_drift", drift, DRIFT_LIMIT),
            Check::at_most("cross_path", cross_path, CROSS_PATH_TOL),
        ];
        if self.field_free() {
            checks.push(Check::at_most("conserved", max_relative_deviation(&ratio, 1.0), CONSERVED_TOL));
        }
        let passed = all_passed(&checks);
        Ok(EnergyReport {
            trace,
            e0,
            gamma1_hat,
            gamma2_hat,
            drift,
            cross_path,
            stats: prop.bank().stats,
            checks,
            passed,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationReport {
    #[serde(skip)]
    pub trace: NormTrace,
    #[serde(skip)]
    pub final_state: SpectralState,
    pub modes: usize,
    /// Largest `||det M₀(t, ξ)| − 1|` over the bank.
    pub det_deviation: f64,
    pub norm_envelope: (f64, f64),
    pub stats: SolverStats,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Evolves the seeded datum and records norms at every sample time.
pub fn run_simulation(config: &ExperimentConfig) -> Result<SimulationReport, HarnessError> {
    let ws = Workspace::new(config)?;
    let prop = ws.propagator()?;
    let times = ws.times();
    let weighted0 = k_alpha_half(&ws.state, &ws.disp, 0.0, Direction::Forward)?;
    let n0 = weighted0.norm();
    let hilbert: Vec<f64> = at_samples(prop.norm_series(&weighted0, Weighting::Alpha(0.0))?, times.len())
        .into_iter()
        .map(|v| v / n0)
        .collect();
    let psi0 = ws.state.component_norm(0);
    let mut psi = Vec::with_capacity(times.len());
    let mut final_state = ws.state.clone();
    for &t in times {
        final_state = prop.evolve(&ws.state, t, Weighting::Raw)?;
        psi.push(final_state.component_norm(0) / psi0);
    }
    let mut det_deviation: f64 = 0.0;
    for traj in &prop.bank().trajectories {
        for index in 0..traj.len() {
            let det = symbol_at(&ws.disp, traj, index, Weighting::Alpha(0.0)).det();
            det_deviation = det_deviation.max((det.norm() - 1.0).abs());
        }
    }
    let mut trace = trace(times)?;
    trace.insert("hilbert_norm_ratio", hilbert)?;
    trace.insert("psi_norm_ratio", psi)?;
    let norm_envelope = trace.envelope("hilbert_norm_ratio").unwrap_or((f64::NAN, f64::NAN));
    let mut checks = vec![Check::at_most("det_deviation", det_deviation, WRONSKIAN_TOL)];
    if ws.field_free() {
        checks.push(Check::at_most(
            "norm_preserved",
            max_relative_deviation(trace.get("hilbert_norm_ratio").unwrap_or(&[]), 1.0),
            CONSERVED_TOL,
        ));
    }
    let passed = all_passed(&checks);
    Ok(SimulationReport {
        trace,
        final_state,
        modes: prop.active_modes().len(),
        det_deviation,
        norm_envelope,
        stats: prop.bank().stats,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{FieldModel, PhysicalParams};
    use crate::harness::log_spaced;

    fn zero_config() -> ExperimentConfig {
        let params = PhysicalParams::default();
        ExperimentConfig {
            field: FieldModel::zero(&params).unwrap(),
            t_samples: log_spaced(1.0, 1e3, 24),
            ..Default::default()
        }
    }

    #[test]
    fn zero_field_runs_are_conservative() {
        let config = zero_config();
        let stability = run_stability(&config).unwrap();
        assert!(stability.passed, "{:?}", stability.checks);
        assert!((stability.gamma1_hat - 1.0).abs() < 1e-10 && (stability.gamma2_hat - 1.0).abs() < 1e-10);
        let ws = Workspace::new(&config).unwrap();
        let prop = ws.propagator().unwrap();
        let decay = ws.decay(&prop).unwrap();
        assert!(decay.passed, "{:?}", decay.checks);
        let energy = ws.energy(&prop).unwrap();
        assert!(energy.passed, "{:?}", energy.checks);
        let inst = ws.instability(&prop).unwrap();
        assert!(inst.passed, "{:?}", inst.checks);
        assert!(inst.fits.iter().all(|f| f.fit.is_none()));
    }

    #[test]
    fn simulation_preserves_norm_without_field() {
        let report = run_simulation(&zero_config()).unwrap();
        assert!(report.passed, "{:?}", report.checks);
        assert!(report.modes > 8);
    }

    #[test]
    fn short_power_law_decay_and_energy() {
        let config = ExperimentConfig {
            t_samples: log_spaced(1.0, 1e3, 40),
            ..Default::default()
        };
        let ws = Workspace::new(&config).unwrap();
        let prop = ws.propagator().unwrap();
        let energy = ws.energy(&prop).unwrap();
        assert!(energy.cross_path < 1e-8, "{}", energy.cross_path);
        let decay = ws.decay(&prop).unwrap();
        for fit in &decay.fits {
            assert!(fit.max_path_gap < 1e-8, "{}", fit.max_path_gap);
        }
        let zero_theta = decay.fits[0].direct.unwrap();
        assert!(zero_theta.slope < -0.4, "{}", zero_theta.slope);
    }

    #[test]
    fn drift_of_a_power() {
        let t = log_spaced(1.0, 1e4, 64);
        let v: Vec<f64> = t.iter().map(|x| x.powf(0.5)).collect();
        assert!((final_decade_drift(&t, &v).unwrap() - 0.5 * 10f64.ln()).abs() < 1e-10);
        assert!(Workspace::new(&ExperimentConfig {
            alpha_list: vec![0.0],
            ..zero_config()
        })
        .and_then(|ws| {
            let prop = ws.propagator()?;
            ws.instability(&prop)
        })
        .is_err());
    }
}
