//! Per-mode solvers for `ζ″ + L(t, ξ) ζ = 0`.
//!
//! Two independent routes produce the fundamental pair `ζ₀, ζ₁` with
//! `(ζ₀, ζ₀′, ζ₁, ζ₁′)(0) = (1, 0, 0, 1)`:
//!
//! * [`integrate_direct`] integrates the second-order system as is and
//!   back-fills the amplitude–phase quantities from `ζ`.
//! * [`integrate_amplitude_phase`] integrates the Hochstadt system
//!
//!   ```text
//!   (ln A)′ = −(Q′/Q) sin²B        B′ = Q − (Q′/Q) sin B cos B
//!   (ln C)′ = −(Q′/Q) cos²D        D′ = Q + (Q′/Q) sin D cos D
//!   ```
//!
//!   and reconstructs `ζ₀ = A cos B`, `ζ₀′ = −AQ sin B`, `ζ₁ = C sin D`,
//!   `ζ₁′ = CQ cos D`.
//!
//! Both report the envelopes `𝒢₀ = A (Q(t)/Q(0))^{1/2}` and
//! `𝒢₁ = C (Q(t)Q(0))^{1/2}`.

pub mod integrator;

use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{FieldError, FieldModel, PhysicalParams, Vec2};
pub use integrator::{IntegratorError, IntegratorOptions, OdeSystem, SolverStats, Tolerances};

/// Largest direct-route step as a fraction of the local period `1/Q`.
pub const STEP_CEILING: f64 = 0.25;

/// Amplitude–phase step ceiling in units of `1/Q`. The unknowns are not
/// oscillatory, so beyond this the error controller decides.
pub const AP_STEP_CEILING: f64 = 1.0;

/// The direct route runs its controller this much tighter than the requested
/// local tolerance; its global error grows with the step count.
const DIRECT_TOL_FACTOR: f64 = 0.1;

/// Below this time the amplitude–phase right-hand side is evaluated at the
/// floor, keeping `b′` finite for fields with an integrable singularity at 0.
const TIME_FLOOR: f64 = 1e-24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModeError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error("tolerance {0:e} outside [1e-13, 1e-4]")]
    Tolerance(f64),
    #[error("sample times must start at 0, increase, and end at a positive t_end")]
    Times,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionValue {
    /// `L = c²|ξ + b|² + (mc²)²`.
    pub l: f64,
    /// `Q = √L`.
    pub q: f64,
    /// `Q′/Q = c²(ξ + b)·b′ / L`.
    pub log_rate: f64,
}

/// The mode dispersion `L(t, ξ)` of a field model.
#[derive(Clone, Debug, PartialEq)]
pub struct Dispersion {
    params: PhysicalParams,
    model: FieldModel,
    c2: f64,
    rest2: f64,
}

impl Dispersion {
    pub fn new(params: PhysicalParams, model: FieldModel) -> Result<Self, FieldError> {
        params.validate()?;
        if model.dim() != params.n {
            return Err(FieldError::InvalidParameter(format!(
                "field dimension {} does not match params.n = {}",
                model.dim(),
                params.n
            )));
        }
        let rest = params.rest_energy();
        Ok(Self {
            params,
            model,
            c2: params.c * params.c,
            rest2: rest * rest,
        })
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn model(&self) -> &FieldModel {
        &self.model
    }

    #[inline]
    pub fn eval(&self, t: f64, xi: Vec2) -> DispersionValue {
        let (b, b1) = self.model.b_and_rate(t);
        let p = [xi[0] + b[0], xi[1] + b[1]];
        let l = self.c2 * (p[0] * p[0] + p[1] * p[1]) + self.rest2;
        let q = l.sqrt();
        let log_rate = self.c2 * (p[0] * b1[0] + p[1] * b1[1]) / l;
        DispersionValue { l, q, log_rate }
    }

    /// `L(0, ξ)`; `b(0) = 0` so no field evaluation is needed.
    #[inline]
    pub fn l0(&self, xi: Vec2) -> f64 {
        self.c2 * (xi[0] * xi[0] + xi[1] * xi[1]) + self.rest2
    }

    #[inline]
    pub fn l(&self, t: f64, xi: Vec2) -> f64 {
        let b = self.model.jet(t).b;
        let p = [xi[0] + b[0], xi[1] + b[1]];
        self.c2 * (p[0] * p[0] + p[1] * p[1]) + self.rest2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    AmplitudePhase,
}

/// Sampled fundamental pair and its amplitude–phase representation for one ξ.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModeTrajectory {
    pub xi: Vec2,
    pub times: Vec<f64>,
    pub zeta0: Vec<f64>,
    pub zeta0_prime: Vec<f64>,
    pub zeta1: Vec<f64>,
    pub zeta1_prime: Vec<f64>,
    pub a: Vec<f64>,
    /// Unwrapped phase.
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// Unwrapped phase.
    pub d: Vec<f64>,
    pub g0: Vec<f64>,
    pub g1: Vec<f64>,
    pub q: Vec<f64>,
    pub method: Option<Method>,
    pub stats: SolverStats,
}

/// One sample of a [`ModeTrajectory`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ModeSample {
    pub t: f64,
    pub zeta0: f64,
    pub zeta0_prime: f64,
    pub zeta1: f64,
    pub zeta1_prime: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub g0: f64,
    pub g1: f64,
    pub q: f64,
}

impl ModeTrajectory {
    fn with_capacity(xi: Vec2, n: usize, method: Method) -> Self {
        let v = || Vec::with_capacity(n);
        Self {
            xi,
            times: v(),
            zeta0: v(),
            zeta0_prime: v(),
            zeta1: v(),
            zeta1_prime: v(),
            a: v(),
            b: v(),
            c: v(),
            d: v(),
            g0: v(),
            g1: v(),
            q: v(),
            method: Some(method),
            stats: SolverStats::default(),
        }
    }

    fn push(&mut self, s: ModeSample) {
        self.times.push(s.t);
        self.zeta0.push(s.zeta0);
        self.zeta0_prime.push(s.zeta0_prime);
        self.zeta1.push(s.zeta1);
        self.zeta1_prime.push(s.zeta1_prime);
        self.a.push(s.a);
        self.b.push(s.b);
        self.c.push(s.c);
        self.d.push(s.d);
        self.g0.push(s.g0);
        self.g1.push(s.g1);
        self.q.push(s.q);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sample(&self, i: usize) -> ModeSample {
        ModeSample {
            t: self.times[i],
            zeta0: self.zeta0[i],
            zeta0_prime: self.zeta0_prime[i],
            zeta1: self.zeta1[i],
            zeta1_prime: self.zeta1_prime[i],
            a: self.a[i],
            b: self.b[i],
            c: self.c[i],
            d: self.d[i],
            g0: self.g0[i],
            g1: self.g1[i],
            q: self.q[i],
        }
    }

    /// Index of the sample at time `t` (relative match within 1e-12).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * t.abs().max(1.0);
        let i = self.times.partition_point(|s| *s < t - tol);
        (i < self.times.len() && (self.times[i] - t).abs() <= tol).then_some(i)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "zeta0", "zeta0p", "zeta1", "zeta1p", "A", "B", "C", "D", "G0", "G1", "Q"])?;
        for i in 0..self.len() {
            let s = self.sample(i);
            let row = [
                s.t,
                s.zeta0,
                s.zeta0_prime,
                s.zeta1,
                s.zeta1_prime,
                s.a,
                s.b,
                s.c,
                s.d,
                s.g0,
                s.g1,
                s.q,
            ];
            w.write_record(row.iter().map(|v| format!("{v:.17e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_inputs(times: &[f64], tol: f64) -> Result<f64, ModeError> {
    if !(1e-13..=1e-4).contains(&tol) {
        return Err(ModeError::Tolerance(tol));
    }
    let ok = times.first() == Some(&0.0)
        && times.windows(2).all(|w| w[1] > w[0])
        && times.iter().all(|t| t.is_finite())
        && *times.last().unwrap() > 0.0;
    if !ok {
        return Err(ModeError::Times);
    }
    Ok(*times.last().unwrap())
}

/// Nearest representative of `raw + 2πk` to `reference`.
#[inline]
fn unwrap_near(raw: f64, reference: f64) -> f64 {
    raw + TAU * ((reference - raw) / TAU).round()
}

struct DirectSystem<'a> {
    disp: &'a Dispersion,
    xi: Vec2,
    q0: f64,
    phase_b: f64,
    phase_d: f64,
    traj: ModeTrajectory,
}

impl DirectSystem<'_> {
    fn phases(&self, y: &[f64; 4], q: f64) -> (f64, f64) {
        let b = unwrap_near((-y[1] / q).atan2(y[0]), self.phase_b);
        let d = unwrap_near(y[2].atan2(y[3] / q), self.phase_d);
        (b, d)
    }
}

impl OdeSystem<4> for DirectSystem<'_> {
    #[inline]
    fn rhs(&self, t: f64, y: &[f64; 4], dy: &mut [f64; 4]) {
        let l = self.disp.eval(t, self.xi).l;
        dy[0] = y[1];
        dy[1] = -l * y[0];
        dy[2] = y[3];
        dy[3] = -l * y[2];
    }

    fn max_step(&self, t: f64, _y: &[f64; 4]) -> f64 {
        STEP_CEILING / self.disp.eval(t, self.xi).q
    }

    fn sample(&mut self, t: f64, y: &[f64; 4]) {
        let q = self.disp.eval(t, self.xi).q;
        let (b, d) = self.phases(y, q);
        let a = y[0].hypot(y[1] / q);
        let c = y[2].hypot(y[3] / q);
        self.traj.push(ModeSample {
            t,
            zeta0: y[0],
            zeta0_prime: y[1],
            zeta1: y[2],
            zeta1_prime: y[3],
            a,
            b,
            c,
            d,
            g0: a * (q / self.q0).sqrt(),
            g1: c * (q * self.q0).sqrt(),
            q,
        });
    }

    fn accept(&mut self, t: f64, y: &[f64; 4]) {
        let q = self.disp.eval(t, self.xi).q;
        let (b, d) = self.phases(y, q);
        self.phase_b = b;
        self.phase_d = d;
    }
}

/// Integrates the second-order mode equation directly, with local error per
/// step `≤ tol` (absolute and relative) and back-filled `A, B, C, D`.
pub fn integrate_direct(disp: &Dispersion, xi: Vec2, times: &[f64], tol: f64) -> Result<ModeTrajectory, ModeError> {
    let t_end = check_inputs(times, tol)?;
    let q0 = disp.l0(xi).sqrt();
    let mut sys = DirectSystem {
        disp,
        xi,
        q0,
        phase_b: 0.0,
        phase_d: 0.0,
        traj: ModeTrajectory::with_capacity(xi, times.len(), Method::Direct),
    };
    let (_, stats) = integrator::integrate(
        &mut sys,
        0.0,
        [1.0, 0.0, 0.0, 1.0],
        t_end,
        times,
        &Tolerances::uniform(tol * DIRECT_TOL_FACTOR, tol * DIRECT_TOL_FACTOR),
        &IntegratorOptions::default(),
    )?;
    sys.traj.stats = stats;
    Ok(sys.traj)
}

struct AmplitudePhaseSystem<'a> {
    disp: &'a Dispersion,
    xi: Vec2,
    q0: f64,
    traj: ModeTrajectory,
}

impl OdeSystem<4> for AmplitudePhaseSystem<'_> {
    #[inline]
    fn rhs(&self, t: f64, y: &[f64; 4], dy: &mut [f64; 4]) {
        let v = self.disp.eval(t.max(TIME_FLOOR), self.xi);
        let g = v.log_rate;
        let (s2b, c2b) = (2.0 * y[1]).sin_cos();
        let (s2d, c2d) = (2.0 * y[3]).sin_cos();
        dy[0] = -0.5 * g * (1.0 - c2b);
        dy[1] = v.q - 0.5 * g * s2b;
        dy[2] = -0.5 * g * (1.0 + c2d);
        dy[3] = v.q + 0.5 * g * s2d;
    }

    fn max_step(&self, t: f64, _y: &[f64; 4]) -> f64 {
        AP_STEP_CEILING / self.disp.eval(t.max(TIME_FLOOR), self.xi).q
    }

    fn sample(&mut self, t: f64, y: &[f64; 4]) {
        let q = self.disp.eval(t, self.xi).q;
        let a = y[0].exp();
        let c = y[2].exp();
        let (sb, cb) = y[1].sin_cos();
        let (sd, cd) = y[3].sin_cos();
        self.traj.push(ModeSample {
            t,
            zeta0: a * cb,
            zeta0_prime: -a * q * sb,
            zeta1: c * sd,
            zeta1_prime: c * q * cd,
            a,
            b: y[1],
            c,
            d: y[3],
            g0: a * (q / self.q0).sqrt(),
            g1: c * (q * self.q0).sqrt(),
            q,
        });
    }
}

/// Integrates the amplitude–phase system for `(ln A, B, ln C, D)` with
/// absolute local error per step `≤ tol` and reconstructs `ζ₀, ζ₁`.
pub fn integrate_amplitude_phase(
    disp: &Dispersion,
    xi: Vec2,
    times: &[f64],
    tol: f64,
) -> Result<ModeTrajectory, ModeError> {
    let t_end = check_inputs(times, tol)?;
    let q0 = disp.l0(xi).sqrt();
    let mut sys = AmplitudePhaseSystem {
        disp,
        xi,
        q0,
        traj: ModeTrajectory::with_capacity(xi, times.len(), Method::AmplitudePhase),
    };
    let (_, stats) = integrator::integrate(
        &mut sys,
        0.0,
        [0.0, 0.0, -q0.ln(), 0.0],
        t_end,
        times,
        &Tolerances::uniform(tol, 0.0),
        &IntegratorOptions::default(),
    )?;
    sys.traj.stats = stats;
    Ok(sys.traj)
}

pub fn integrate_mode(
    method: Method,
    disp: &Dispersion,
    xi: Vec2,
    times: &[f64],
    tol: f64,
) -> Result<ModeTrajectory, ModeError> {
    match method {
        Method::Direct => integrate_direct(disp, xi, times, tol),
        Method::AmplitudePhase => integrate_amplitude_phase(disp, xi, times, tol),
    }
}

/// `max |ζ₀ζ₁′ − ζ₀′ζ₁ − 1|` over the samples.
pub fn wronskian_deviation(traj: &ModeTrajectory) -> f64 {
    (0..traj.len())
        .map(|i| (traj.zeta0[i] * traj.zeta1_prime[i] - traj.zeta0_prime[i] * traj.zeta1[i] - 1.0).abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelopes {
    pub g0_max: f64,
    pub g0_min: f64,
    pub g1_max: f64,
    pub g1_min: f64,
}

impl Envelopes {
    pub fn positive(&self) -> bool {
        self.g0_min > 0.0 && self.g1_min > 0.0
    }
}

/// Extrema of `𝒢₀ = A (Q(t)/Q(0))^{1/2}` and `𝒢₁ = C (Q(t)Q(0))^{1/2}`.
pub fn envelope_check(traj: &ModeTrajectory) -> Envelopes {
    let extrema = |v: &[f64]| {
        v.iter()
            .fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), x| (hi.max(*x), lo.min(*x)))
    };
    let (g0_max, g0_min) = extrema(&traj.g0);
    let (g1_max, g1_min) = extrema(&traj.g1);
    Envelopes {
        g0_max,
        g0_min,
        g1_max,
        g1_min,
    }
}

/// `n + 1` equally spaced times on `[0, t_end]`.
pub fn uniform_times(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| if k == n { t_end } else { t_end * k as f64 / n as f64 }).collect()
}
