use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{FieldKind, FieldModel, PhysicalParams, Tabulated, TrigTerm, Vec2};
use crate::harness::{log_spaced, BenchConfig, BumpConfig, ExperimentConfig, GridConfig};
use crate::modes::Method;
use crate::propagator::OperatorNormOptions;

/// Configuration failures, each with its own exit status.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
}

impl ConfigError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ConfigError::Parse(_) => 2,
            ConfigError::UnknownKey(_) => 3,
            ConfigError::Constraint(_) => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    Stability,
    Instability,
    Decay,
    Energy,
    AuditE1,
    Bench,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Stability => "stability",
            Experiment::Instability => "instability",
            Experiment::Decay => "decay",
            Experiment::Energy => "energy",
            Experiment::AuditE1 => "audit-e1",
            Experiment::Bench => "bench",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamsBlock {
    pub c: f64,
    pub m: f64,
    pub q: f64,
    pub n: usize,
}

impl Default for ParamsBlock {
    fn default() -> Self {
        let p = PhysicalParams::default();
        Self {
            c: p.c,
            m: p.m,
            q: p.q,
            n: p.n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimesBlock {
    pub start: f64,
    pub end: f64,
    pub count: usize,
    /// Explicit samples; overrides the log-spaced range.
    pub samples: Option<Vec<f64>>,
}

impl Default for TimesBlock {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 1e4,
            count: 64,
            samples: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TolerancesBlock {
    pub ode: f64,
    pub operator_norm: f64,
    pub rel_change: f64,
}

impl Default for TolerancesBlock {
    fn default() -> Self {
        let o = OperatorNormOptions::default();
        Self {
            ode: 1e-10,
            operator_norm: o.tol,
            rel_change: o.rel_change,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OperatorNormBlock {
    pub samples: usize,
    pub max_rounds: usize,
    pub window: Option<(f64, f64)>,
}

impl Default for OperatorNormBlock {
    fn default() -> Self {
        let o = OperatorNormOptions::default();
        Self {
            samples: o.samples,
            max_rounds: o.max_rounds,
            window: o.window,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditBlock {
    pub horizons: Vec<f64>,
    pub a: Vec<f64>,
}

impl Default for AuditBlock {
    fn default() -> Self {
        Self {
            horizons: vec![1e2, 1e3, 1e4],
            a: vec![],
        }
    }
}

/// The field block after kind dispatch, with defaults applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Constant {
        e0: Vec<f64>,
    },
    PowerLaw {
        gamma: f64,
        coeff: f64,
        rho: Vec<f64>,
        theta1: Vec<TrigTerm>,
        axis: usize,
    },
    Logarithmic {
        e3: f64,
        e4: f64,
        axis: usize,
    },
    Sinusoidal {
        gamma: f64,
        coeff: f64,
        amplitude: f64,
        frequency: f64,
        axis: usize,
    },
    Tabulated {
        samples: Vec<(f64, f64)>,
        interpolation: String,
        axis: usize,
    },
}

#[derive(Deserialize)]
#[serde(default)]
struct ConstantBlock {
    e0: Vec<f64>,
}

impl Default for ConstantBlock {
    fn default() -> Self {
        Self { e0: vec![1.0] }
    }
}

#[derive(Deserialize)]
#[serde(default)]
struct PowerLawBlock {
    gamma: f64,
    coeff: f64,
    rho: Vec<f64>,
    theta1: Vec<TrigTerm>,
    axis: usize,
}

impl Default for PowerLawBlock {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            coeff: 1.0,
            rho: vec![],
            theta1: vec![],
            axis: 0,
        }
    }
}

#[derive(Deserialize)]
#[serde(default)]
struct LogarithmicBlock {
    e3: f64,
    e4: f64,
    axis: usize,
}

impl Default for LogarithmicBlock {
    fn default() -> Self {
        Self { e3: 1.0, e4: 1.0, axis: 0 }
    }
}

#[derive(Deserialize)]
#[serde(default)]
struct SinusoidalBlock {
    gamma: f64,
    coeff: f64,
    amplitude: f64,
    frequency: f64,
    axis: usize,
}

impl Default for SinusoidalBlock {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            coeff: 1.0,
            amplitude: 1.0,
            frequency: 1.0,
            axis: 0,
        }
    }
}

#[derive(Deserialize)]
#[serde(default)]
struct TabulatedBlock {
    samples: Option<Vec<(f64, f64)>>,
    path: Option<String>,
    interpolation: String,
    axis: usize,
}

impl Default for TabulatedBlock {
    fn default() -> Self {
        Self {
            samples: None,
            path: None,
            interpolation: "cubic".into(),
            axis: 0,
        }
    }
}

#[derive(Deserialize, Default)]
#[serde(default)]
struct Document {
    experiment: Option<Experiment>,
    params: ParamsBlock,
    field: Option<serde_json::Value>,
    grid: GridConfig,
    times: TimesBlock,
    alpha_list: Option<Vec<f64>>,
    theta_list: Option<Vec<f64>>,
    tolerances: TolerancesBlock,
    operator_norm: OperatorNormBlock,
    method: Option<Method>,
    seed: u64,
    states: Option<usize>,
    bump: BumpConfig,
    bench: BenchConfig,
    audit: AuditBlock,
    output: Option<String>,
}

/// A fully validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub experiment_config: ExperimentConfig,
    pub field: FieldSpec,
    pub audit_horizons: Vec<f64>,
    pub audit_a: Vec2,
    pub output: Option<PathBuf>,
    /// Every setting with defaults applied; hashed for the run digest.
    pub resolved: serde_json::Value,
}

/// Deserializes `value`, reporting the first key serde did not consume.
fn strict<T: DeserializeOwned>(value: serde_json::Value, prefix: &str) -> Result<T, ConfigError> {
    let mut unknown = None;
    let parsed: T = serde_ignored::deserialize(value, |path| {
        if unknown.is_none() {
            unknown = Some(path.to_string());
        }
    })
    .map_err(|e| ConfigError::Constraint(format!("{prefix}{e}")))?;
    match unknown {
        Some(key) => Err(ConfigError::UnknownKey(format!("{prefix}{key}"))),
        None => Ok(parsed),
    }
}

fn field_spec(value: Option<serde_json::Value>, base: &Path) -> Result<FieldSpec, ConfigError> {
    let Some(mut value) = value else {
        let d = PowerLawBlock::default();
        return Ok(FieldSpec::PowerLaw {
            gamma: d.gamma,
            coeff: d.coeff,
            rho: d.rho,
            theta1: d.theta1,
            axis: d.axis,
        });
    };
    let obj = value
        .as_object_mut()
        .ok_or_else(|| ConfigError::Constraint("field must be an object".into()))?;
    let kind = match obj.remove("kind") {
        None => "power_law".to_string(),
        Some(serde_json::Value::String(s)) => s,
        Some(_) => return Err(ConfigError::Constraint("field.kind must be a string".into())),
    };
    Ok(match kind.as_str() {
        "constant" => {
            let b: ConstantBlock = strict(value, "field.")?;
            FieldSpec::Constant { e0: b.e0 }
        }
        "power_law" => {
            let b: PowerLawBlock = strict(value, "field.")?;
            FieldSpec::PowerLaw {
                gamma: b.gamma,
                coeff: b.coeff,
                rho: b.rho,
                theta1: b.theta1,
                axis: b.axis,
            }
        }
        "logarithmic" => {
            let b: LogarithmicBlock = strict(value, "field.")?;
            FieldSpec::Logarithmic {
                e3: b.e3,
                e4: b.e4,
                axis: b.axis,
            }
        }
        "sinusoidal" => {
            let b: SinusoidalBlock = strict(value, "field.")?;
            FieldSpec::Sinusoidal {
                gamma: b.gamma,
                coeff: b.coeff,
                amplitude: b.amplitude,
                frequency: b.frequency,
                axis: b.axis,
            }
        }
        "tabulated" => {
            let b: TabulatedBlock = strict(value, "field.")?;
            if b.interpolation != "cubic" {
                return Err(ConfigError::Constraint("field.interpolation must be \"cubic\"".into()));
            }
            let samples = match (b.samples, b.path) {
                (Some(s), None) => s,
                (None, Some(p)) => {
                    let path = base.join(p);
                    let table = read_table(&path)?;
                    if table.is_empty() {
                        return Err(ConfigError::Constraint(format!("field.path {} holds no samples", path.display())));
                    }
                    table
                }
                _ => {
                    return Err(ConfigError::Constraint(
                        "tabulated field needs exactly one of field.samples or field.path".into(),
                    ))
                }
            };
            FieldSpec::Tabulated {
                samples,
                interpolation: b.interpolation,
                axis: b.axis,
            }
        }
        other => {
            return Err(ConfigError::Constraint(format!(
                "field.kind must be one of constant, power_law, logarithmic, sinusoidal, tabulated (got {other:?})"
            )))
        }
    })
}

fn read_table(path: &Path) -> Result<Vec<(f64, f64)>, ConfigError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| ConfigError::Constraint(format!("field.path {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for record in reader.deserialize::<(f64, f64)>() {
        out.push(record.map_err(|e| ConfigError::Constraint(format!("field.path {}: {e}", path.display())))?);
    }
    Ok(out)
}

impl FieldSpec {
    pub fn model(&self, params: &PhysicalParams) -> Result<FieldModel, ConfigError> {
        let constraint = |e: crate::fields::FieldError| ConfigError::Constraint(e.to_string());
        let (kind, axis) = match self {
            FieldSpec::Constant { e0 } => {
                if e0.len() > 2 || e0.len() > params.n {
                    return Err(ConfigError::Constraint("field.e0 has at most params.n components".into()));
                }
                let mut v = [0.0; 2];
                v[..e0.len()].copy_from_slice(e0);
                (FieldKind::Constant { e0: v }, 0)
            }
            FieldSpec::PowerLaw {
                gamma,
                coeff,
                rho,
                theta1,
                axis,
            } => (
                FieldKind::PowerLaw {
                    gamma: *gamma,
                    coeff: *coeff,
                    rho: rho.clone(),
                    theta1: theta1.clone(),
                },
                *axis,
            ),
            FieldSpec::Logarithmic { e3, e4, axis } => (FieldKind::Logarithmic { e3: *e3, e4: *e4 }, *axis),
            FieldSpec::Sinusoidal {
                gamma,
                coeff,
                amplitude,
                frequency,
                axis,
            } => (
                FieldKind::Sinusoidal {
                    gamma: *gamma,
                    coeff: *coeff,
                    amplitude: *amplitude,
                    frequency: *frequency,
                },
                *axis,
            ),
            FieldSpec::Tabulated { samples, axis, .. } => {
                (FieldKind::Tabulated(Tabulated::new(samples.clone()).map_err(constraint)?), *axis)
            }
        };
        FieldModel::new(kind, params, axis).map_err(constraint)
    }

    pub fn is_sinusoidal(&self) -> bool {
        matches!(self, FieldSpec::Sinusoidal { .. })
    }
}

/// Parses and validates a config document; relative paths resolve against
/// the working directory.
pub fn parse_config(document: &str) -> Result<RunConfig, ConfigError> {
    parse_config_at(document, Path::new("."))
}

/// As [`parse_config`], resolving relative paths against `base`.
pub fn parse_config_at(document: &str, base: &Path) -> Result<RunConfig, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(document).map_err(|e| ConfigError::Parse(e.to_string()))?;
    if !value.is_object() {
        return Err(ConfigError::Parse("top level must be a JSON object".into()));
    }
    let doc: Document = strict(value, "")?;
    let params = PhysicalParams {
        c: doc.params.c,
        m: doc.params.m,
        q: doc.params.q,
        n: doc.params.n,
    };
    params.validate().map_err(|e| ConfigError::Constraint(e.to_string()))?;
    let field = field_spec(doc.field, base)?;
    let model = field.model(&params)?;

    let t_samples = match &doc.times.samples {
        Some(s) => s.clone(),
        None => {
            let t = &doc.times;
            if !(t.start > 0.0 && t.end > t.start && t.end.is_finite() && t.count >= 2) {
                return Err(ConfigError::Constraint("times: 0 < start < end, count ≥ 2".into()));
            }
            log_spaced(t.start, t.end, t.count)
        }
    };
    let tol = &doc.tolerances;
    for (key, v) in [("tolerances.ode", tol.ode), ("tolerances.operator_norm", tol.operator_norm)] {
        if !(1e-13..=1e-4).contains(&v) {
            return Err(ConfigError::Constraint(format!("{key} in [1e-13, 1e-4]")));
        }
    }
    if !(tol.rel_change > 0.0 && tol.rel_change < 1.0) {
        return Err(ConfigError::Constraint("tolerances.rel_change in (0, 1)".into()));
    }
    if doc.operator_norm.samples < 64 {
        return Err(ConfigError::Constraint("operator_norm.samples ≥ 64".into()));
    }
    if let Some((lo, hi)) = doc.operator_norm.window {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(ConfigError::Constraint("operator_norm.window must satisfy lo < hi".into()));
        }
    }
    let method = doc.method.unwrap_or(Method::AmplitudePhase);
    let states = doc.states.unwrap_or(3);
    if states < 3 {
        return Err(ConfigError::Constraint("states ≥ 3".into()));
    }
    let b = &doc.bench;
    if b.modes == 0 || b.route_modes == 0 || !(b.window >= 0.0 && b.window.is_finite()) {
        return Err(ConfigError::Constraint("bench.modes > 0, bench.route_modes > 0, bench.window ≥ 0".into()));
    }
    let audit = &doc.audit;
    if audit.horizons.len() < 2
        || audit.horizons.iter().any(|h| !(h.is_finite() && *h > 0.0))
        || audit.horizons.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(ConfigError::Constraint("audit.horizons: at least two, positive, strictly increasing".into()));
    }
    if audit.a.len() > params.n || audit.a.iter().any(|v| !v.is_finite()) {
        return Err(ConfigError::Constraint("audit.a: at most params.n finite components".into()));
    }
    let mut audit_a = [0.0; 2];
    audit_a[..audit.a.len()].copy_from_slice(&audit.a);

    let experiment_config = ExperimentConfig {
        params,
        field: model,
        alpha_list: doc.alpha_list.clone().unwrap_or_else(|| vec![0.25, -0.25]),
        theta_list: doc.theta_list.clone().unwrap_or_else(|| vec![0.0, 0.25]),
        t_samples: t_samples.clone(),
        grid: doc.grid,
        tol: tol.ode,
        method,
        opnorm: OperatorNormOptions {
            samples: doc.operator_norm.samples,
            tol: tol.operator_norm,
            rel_change: tol.rel_change,
            max_rounds: doc.operator_norm.max_rounds,
            window: doc.operator_norm.window,
            method,
        },
        seed: doc.seed,
        states,
        bump: doc.bump,
        bench: doc.bench.clone(),
    };
    experiment_config
        .validate()
        .map_err(|e| ConfigError::Constraint(e.to_string()))?;

    let resolved = serde_json::json!({
        "params": doc.params,
        "field": field,
        "grid": doc.grid,
        "t_samples": t_samples,
        "alpha_list": experiment_config.alpha_list,
        "theta_list": experiment_config.theta_list,
        "tolerances": doc.tolerances,
        "operator_norm": doc.operator_norm,
        "method": method,
        "seed": doc.seed,
        "states": states,
        "bump": doc.bump,
        "bench": doc.bench,
        "audit": { "horizons": audit.horizons, "a": audit_a[..params.n].to_vec() },
    });
    Ok(RunConfig {
        experiment: doc.experiment,
        experiment_config,
        field,
        audit_horizons: audit.horizons.clone(),
        audit_a,
        output: doc.output.map(PathBuf::from),
        resolved,
    })
}
