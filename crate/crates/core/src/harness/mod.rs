//! Scripted experiments: stability, instability, decay, energy bounds and a
//! solver benchmark, each producing norm traces and a checked summary.

mod bench;
mod experiments;
mod initial;
mod output;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{FieldError, FieldKind, FieldModel, PhysicalParams};
use crate::modes::{Dispersion, Method, ModeError};
use crate::propagator::{Grid, OperatorNormOptions, PropagatorError};

pub use bench::{bench_solvers, route_name, BenchConfig, BenchReport, RouteBench, SweepBench, WRONSKIAN_TARGET};
pub use experiments::{
    run_decay, run_energy_bound, run_instability, run_simulation, run_stability, AlphaFit, DecayReport, EnergyReport,
    InstabilityReport, SimulationReport, StabilityReport, ThetaFit, Workspace,
};
pub use initial::{BumpConfig, InitialData};
pub use output::{config_digest, write_run, RunFile};

/// Norms above this stop an instability run.
pub const OVERFLOW_GUARD: f64 = 1e100;
/// Slopes are fitted over the final `FIT_DECADES` decades of the horizon.
pub const FIT_DECADES: f64 = 2.0;
pub const MIN_FIT_SAMPLES: usize = 8;
pub const MIN_R_SQUARED: f64 = 0.98;
pub const DRIFT_LIMIT: f64 = 0.01;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("{0}")]
    Config(String),
    #[error("slope fit: {0}")]
    Fit(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    /// Points per axis, a power of two.
    pub points: usize,
    /// The periodic box is `[−X, X)` per axis.
    pub half_width: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            points: 1024,
            half_width: 64.0 * std::f64::consts::PI,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub params: PhysicalParams,
    pub field: FieldModel,
    pub alpha_list: Vec<f64>,
    pub theta_list: Vec<f64>,
    pub t_samples: Vec<f64>,
    pub grid: GridConfig,
    pub tol: f64,
    pub method: Method,
    pub opnorm: OperatorNormOptions,
    pub seed: u64,
    /// Random initial states used by the stability run.
    pub states: usize,
    pub bump: BumpConfig,
    pub bench: BenchConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let params = PhysicalParams::default();
        let kind = FieldKind::PowerLaw {
            gamma: 0.5,
            coeff: 1.0,
            rho: vec![],
            theta1: vec![],
        };
        Self {
            params,
            field: FieldModel::new(kind, &params, 0).expect("default field is valid"),
            alpha_list: vec![0.25, -0.25],
            theta_list: vec![0.0, 0.25],
            t_samples: log_spaced(1.0, 1e4, 64),
            grid: GridConfig::default(),
            tol: 1e-10,
            method: Method::AmplitudePhase,
            opnorm: OperatorNormOptions::default(),
            seed: 0,
            states: 3,
            bump: BumpConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.params.validate()?;
        if self.field.dim() != self.params.n {
            return Err(HarnessError::Config(format!(
                "field dimension {} differs from params.n = {}",
                self.field.dim(),
                self.params.n
            )));
        }
        let t = &self.t_samples;
        if t.is_empty() || t.iter().any(|v| !v.is_finite() || *v <= 0.0) || t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HarnessError::Config("t_samples must be positive, finite and strictly increasing".into()));
        }
        if self.alpha_list.iter().chain(&self.theta_list).any(|v| !v.is_finite()) {
            return Err(HarnessError::Config("alpha_list and theta_list must be finite".into()));
        }
        if !(1e-13..=1e-4).contains(&self.tol) {
            return Err(HarnessError::Config("tol in [1e-13, 1e-4]".into()));
        }
        self.grid()?;
        self.bump.validate(&self.grid()?)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, HarnessError> {
        Ok(Grid::new(self.params.n, self.grid.points, self.grid.half_width)?)
    }

    pub fn dispersion(&self) -> Result<Dispersion, HarnessError> {
        Ok(Dispersion::new(self.params, self.field.clone())?)
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let ratio = (hi / lo).ln();
            (0..n)
                .map(|k| {
                    if k == n - 1 {
                        hi
                    } else {
                        lo * (ratio * k as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// Least-squares line `y = slope·x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Time interval the samples came from.
    pub window: (f64, f64),
    pub samples: usize,
}

impl SlopeFit {
    pub fn fit(x: &[f64], y: &[f64], window: (f64, f64)) -> Result<Self, HarnessError> {
        if x.len() != y.len() {
            return Err(HarnessError::Fit("x and y lengths differ".into()));
        }
        if x.len() < MIN_FIT_SAMPLES {
            return Err(HarnessError::Fit(format!(
                "window [{}, {}] holds {} samples, need {MIN_FIT_SAMPLES}",
                window.0,
                window.1,
                x.len()
            )));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(HarnessError::Fit("non-finite sample".into()));
        }
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
        if sxx <= 0.0 {
            return Err(HarnessError::Fit("abscissae are all equal".into()));
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
        let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
        Ok(Self {
            slope,
            intercept,
            r_squared,
            window,
            samples: x.len(),
        })
    }
}

/// One asserted property of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value >= limit,
        }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_spacing_hits_endpoints() {
        let t = log_spaced(1.0, 1e4, 64);
        assert_eq!(t.len(), 64);
        assert_eq!((t[0], t[63]), (1.0, 1e4));
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert!(t.iter().filter(|v| **v >= 100.0).count() >= 8);
    }

    #[test]
    fn exact_line_fit() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| -0.25 * v + 3.0).collect();
        let fit = SlopeFit::fit(&x, &y, (0.0, 9.0)).unwrap();
        assert!((fit.slope + 0.25).abs() < 1e-14 && (fit.intercept - 3.0).abs() < 1e-13);
        assert_eq!(fit.r_squared, 1.0);
        assert!(SlopeFit::fit(&x[..7], &y[..7], (0.0, 6.0)).is_err());
    }

    #[test]
    fn default_config_is_valid() {
        ExperimentConfig::default().validate().unwrap();
        let bad = ExperimentConfig {
            t_samples: vec![2.0, 1.0],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn r_squared_in_unit_interval(y in proptest::collection::vec(-5.0f64..5.0, 8..40)) {
            let x: Vec<f64> = (0..y.len()).map(|k| k as f64).collect();
            let fit = SlopeFit::fit(&x, &y, (0.0, 1.0)).unwrap();
            proptest::prop_assert!((0.0..=1.0).contains(&fit.r_squared));
        }
    }
}
