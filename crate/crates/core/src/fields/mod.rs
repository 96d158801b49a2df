//! Homogeneous time-dependent electric fields.
//!
//! A [`FieldModel`] supplies `E(t)` together with the accumulated impulse
//! `b(t) = ∫₀ᵗ qE(s) ds` and its first two derivatives. Everything downstream
//! (the mode dispersion, the gauge phase, the integrability audit) only ever
//! looks at `b`, `b′ = qE` and `b″ = qE′`.
//!
//! Vectors are stored as [`Vec2`]; components beyond the model dimension are
//! always zero.

mod audit;
mod tabulated;

pub use audit::{audit_e1, E1Report, HorizonEstimate, Verdict};
pub use tabulated::Tabulated;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 2;

/// Fixed-size spatial vector; unused trailing components are zero.
pub type Vec2 = [f64; MAX_DIM];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("time {t} outside the field's domain [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("quadrature did not converge on [{a}, {b}]: estimated error {error:e} exceeds {tolerance:e}")]
    Quadrature {
        a: f64,
        b: f64,
        error: f64,
        tolerance: f64,
    },
}

/// Physical constants of the charged particle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Speed of light.
    pub c: f64,
    /// Rest mass, strictly positive.
    pub m: f64,
    /// Charge, nonzero.
    pub q: f64,
    /// Spatial dimension, 1 or 2.
    pub n: usize,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            m: 1.0,
            q: 1.0,
            n: 1,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<(), FieldError> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(FieldError::InvalidParameter("params.c > 0".into()));
        }
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(FieldError::InvalidParameter("params.m > 0".into()));
        }
        if !(self.q.is_finite() && self.q != 0.0) {
            return Err(FieldError::InvalidParameter("params.q != 0".into()));
        }
        if !(1..=MAX_DIM).contains(&self.n) {
            return Err(FieldError::InvalidParameter("params.n in {1, 2}".into()));
        }
        Ok(())
    }

    /// `mc²`, the lower bound of `Q(t, ξ)`.
    pub fn rest_energy(&self) -> f64 {
        self.m * self.c * self.c
    }
}

/// One bounded trigonometric term `s·sin(ωt) + k·(cos(ωt) − 1)` of the
/// perturbation θ₁ allowed for linear growth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub frequency: f64,
    #[serde(default)]
    pub sin: f64,
    #[serde(default)]
    pub cos: f64,
}

/// The catalog of field profiles.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldKind {
    /// `E(t) = E₀`, so `b(t) = qE₀t`.
    Constant { e0: Vec2 },
    /// `b(t) = C tᵞ + ρ(t) [+ θ₁(t) when γ = 1]` along one axis, with
    /// `ρ(t) = Σₖ rₖ ln(1+t)ᵏ` (k = 1, 2, ...).
    PowerLaw {
        gamma: f64,
        coeff: f64,
        rho: Vec<f64>,
        theta1: Vec<TrigTerm>,
    },
    /// `b(t) = e₃ ln(1 + e₄ t)` along one axis.
    Logarithmic { e3: f64, e4: f64 },
    /// Negative-test AC field. In one dimension `b(t) = C tᵞ + A(cos ωt − 1)`;
    /// in two dimensions `b(t) = (C tᵞ, C t^{γ/2} + A(cos ωt − 1))`.
    Sinusoidal {
        gamma: f64,
        coeff: f64,
        amplitude: f64,
        frequency: f64,
    },
    /// Sampled `E(t)` along one axis, interpolated by a monotone cubic.
    Tabulated(Tabulated),
}

/// `b`, `b′` and `b″` evaluated together.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub b: Vec2,
    pub b1: Vec2,
    pub b2: Vec2,
}

/// An immutable field profile bound to a charge and a spatial dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldModel {
    kind: FieldKind,
    q: f64,
    dim: usize,
    axis: usize,
}

impl FieldModel {
    /// Builds and validates a model. `axis` selects the component carrying
    /// scalar profiles (ignored for `Constant`).
    pub fn new(kind: FieldKind, params: &PhysicalParams, axis: usize) -> Result<Self, FieldError> {
        params.validate()?;
        let dim = params.n;
        if axis >= dim {
            return Err(FieldError::InvalidParameter(format!(
                "field.axis < params.n (got axis {axis}, n {dim})"
            )));
        }
        validate_kind(&kind, dim)?;
        Ok(Self {
            kind,
            q: params.q,
            dim,
            axis,
        })
    }

    pub fn zero(params: &PhysicalParams) -> Result<Self, FieldError> {
        Self::new(FieldKind::Constant { e0: [0.0; MAX_DIM] }, params, 0)
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn charge(&self) -> f64 {
        self.q
    }

    /// Time domain on which the model is defined.
    pub fn domain(&self) -> (f64, f64) {
        match &self.kind {
            FieldKind::Tabulated(tab) => (0.0, tab.t_max()),
            _ => (0.0, f64::INFINITY),
        }
    }

    /// True when `b′` blows up (integrably) at `t = 0`, as for `tᵞ` with γ < 1.
    pub fn singular_at_origin(&self) -> bool {
        match &self.kind {
            FieldKind::PowerLaw { gamma, .. } | FieldKind::Sinusoidal { gamma, .. } => *gamma < 1.0,
            _ => false,
        }
    }

    /// Start of the interval on which the field is C¹ with bounded derivatives.
    /// Integrability audits are taken from here on.
    pub fn regular_from(&self) -> f64 {
        if self.singular_at_origin() {
            1.0
        } else {
            0.0
        }
    }

    /// Period of the oscillating part, if any.
    pub fn period(&self) -> Option<f64> {
        match &self.kind {
            FieldKind::Sinusoidal { frequency, .. } if *frequency != 0.0 => {
                Some(2.0 * std::f64::consts::PI / frequency.abs())
            }
            FieldKind::PowerLaw { theta1, .. } => theta1
                .iter()
                .filter(|term| term.frequency != 0.0)
                .map(|term| 2.0 * std::f64::consts::PI / term.frequency.abs())
                .reduce(f64::min),
            FieldKind::Tabulated(tab) => Some(tab.min_spacing()),
            _ => None,
        }
    }

    fn check_time(&self, t: f64) -> Result<(), FieldError> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return Err(FieldError::OutOfRange { t, lo, hi });
        }
        Ok(())
    }

    /// `E(t)`.
    pub fn eval_field(&self, t: f64) -> Result<Vec2, FieldError> {
        self.check_time(t)?;
        let b1 = self.jet(t).b1;
        Ok([b1[0] / self.q, b1[1] / self.q])
    }

    /// `E′(t)`.
    pub fn eval_field_derivative(&self, t: f64) -> Result<Vec2, FieldError> {
        self.check_time(t)?;
        let b2 = self.jet(t).b2;
        Ok([b2[0] / self.q, b2[1] / self.q])
    }

    /// `b(t) = ∫₀ᵗ qE(s) ds`.
    pub fn eval_b(&self, t: f64) -> Result<Vec2, FieldError> {
        self.check_time(t)?;
        Ok(self.jet(t).b)
    }

    pub fn eval_b_prime(&self, t: f64) -> Result<Vec2, FieldError> {
        self.check_time(t)?;
        Ok(self.jet(t).b1)
    }

    pub fn eval_b_second(&self, t: f64) -> Result<Vec2, FieldError> {
        self.check_time(t)?;
        Ok(self.jet(t).b2)
    }

    /// Unchecked evaluation of `b`, `b′`, `b″` for `t` inside [`domain`](Self::domain).
    /// Tabulated models hold their boundary values outside the sampled range.
    pub fn jet(&self, t: f64) -> Jet {
        let mut out = Jet::default();
        let ax = self.axis;
        match &self.kind {
            FieldKind::Constant { e0 } => {
                for j in 0..self.dim {
                    out.b[j] = self.q * e0[j] * t;
                    out.b1[j] = self.q * e0[j];
                }
            }
            FieldKind::PowerLaw {
                gamma,
                coeff,
                rho,
                theta1,
            } => {
                let (p, p1, p2) = power_jet(*gamma, t);
                let mut b = coeff * p;
                let mut b1 = coeff * p1;
                let mut b2 = coeff * p2;
                if !rho.is_empty() {
                    let (r, r1, r2) = log_poly_jet(rho, t);
                    b += r;
                    b1 += r1;
                    b2 += r2;
                }
                for term in theta1 {
                    let (s, c) = (term.frequency * t).sin_cos();
                    let w = term.frequency;
                    b += term.sin * s + term.cos * (c - 1.0);
                    b1 += w * (term.sin * c - term.cos * s);
                    b2 -= w * w * (term.sin * s + term.cos * c);
                }
                out.b[ax] = b;
                out.b1[ax] = b1;
                out.b2[ax] = b2;
            }
            FieldKind::Logarithmic { e3, e4 } => {
                let u = 1.0 + e4 * t;
                out.b[ax] = e3 * u.ln();
                out.b1[ax] = e3 * e4 / u;
                out.b2[ax] = -e3 * e4 * e4 / (u * u);
            }
            FieldKind::Sinusoidal {
                gamma,
                coeff,
                amplitude,
                frequency,
            } => {
                let (p, p1, p2) = power_jet(*gamma, t);
                let (s, c) = (frequency * t).sin_cos();
                let ac = amplitude * (c - 1.0);
                let ac1 = -amplitude * frequency * s;
                let ac2 = -amplitude * frequency * frequency * c;
                if self.dim == 1 {
                    out.b[0] = coeff * p + ac;
                    out.b1[0] = coeff * p1 + ac1;
                    out.b2[0] = coeff * p2 + ac2;
                } else {
                    let other = (ax + 1) % self.dim;
                    let (h, h1, h2) = power_jet(0.5 * gamma, t);
                    out.b[ax] = coeff * p;
                    out.b1[ax] = coeff * p1;
                    out.b2[ax] = coeff * p2;
                    out.b[other] = coeff * h + ac;
                    out.b1[other] = coeff * h1 + ac1;
                    out.b2[other] = coeff * h2 + ac2;
                }
            }
            FieldKind::Tabulated(tab) => {
                let (e, e1, integral) = tab.eval(t);
                out.b[ax] = self.q * integral;
                out.b1[ax] = self.q * e;
                out.b2[ax] = self.q * e1;
            }
        }
        out
    }

    /// `b` and `b′` only; the hot path of the mode solvers.
    #[inline]
    pub fn b_and_rate(&self, t: f64) -> (Vec2, Vec2) {
        match &self.kind {
            FieldKind::PowerLaw {
                gamma,
                coeff,
                rho,
                theta1,
            } if rho.is_empty() && theta1.is_empty() => {
                let (p, p1) = power_pair(*gamma, t);
                let mut b = [0.0; MAX_DIM];
                let mut b1 = [0.0; MAX_DIM];
                b[self.axis] = coeff * p;
                b1[self.axis] = coeff * p1;
                (b, b1)
            }
            _ => {
                let jet = self.jet(t);
                (jet.b, jet.b1)
            }
        }
    }

    /// Estimates of `E₀,₀ = sup Σⱼ|Eⱼ|` and `E₀,₁ = sup Σⱼ|Eⱼ′|` over `[from, to]`.
    /// Closed forms are used where the supremum is attained at `from`;
    /// otherwise the interval is sampled densely.
    pub fn field_bounds(&self, from: f64, to: f64) -> (f64, f64) {
        let qa = self.q.abs();
        match &self.kind {
            FieldKind::Constant { e0 } => (e0.iter().map(|e| e.abs()).sum(), 0.0),
            FieldKind::Logarithmic { e3, e4 } => {
                let u = 1.0 + e4 * from;
                ((e3 * e4 / u).abs() / qa, (e3 * e4 * e4 / (u * u)).abs() / qa)
            }
            FieldKind::PowerLaw {
                gamma,
                coeff,
                rho,
                theta1,
            } if rho.is_empty() && theta1.is_empty() => {
                let (_, p1, p2) = power_jet(*gamma, from);
                ((coeff * p1).abs() / qa, (coeff * p2).abs() / qa)
            }
            _ => {
                let step = self.period().unwrap_or(1.0).min(1.0) / 8.0;
                let n = ((to - from) / step).ceil().max(1.0) as usize;
                let mut e00: f64 = 0.0;
                let mut e01: f64 = 0.0;
                for i in 0..=n {
                    let t = (from + i as f64 * step).min(to);
                    let jet = self.jet(t);
                    e00 = e00.max(jet.b1.iter().map(|v| v.abs()).sum::<f64>() / qa);
                    e01 = e01.max(jet.b2.iter().map(|v| v.abs()).sum::<f64>() / qa);
                }
                (e00, e01)
            }
        }
    }
}

fn validate_kind(kind: &FieldKind, dim: usize) -> Result<(), FieldError> {
    let bad = |msg: &str| Err(FieldError::InvalidParameter(msg.to_string()));
    match kind {
        FieldKind::Constant { e0 } => {
            if e0.iter().any(|v| !v.is_finite()) {
                return bad("field.e0 finite");
            }
            if e0[dim..].iter().any(|v| *v != 0.0) {
                return bad("field.e0 has at most params.n components");
            }
        }
        FieldKind::PowerLaw {
            gamma,
            coeff,
            rho,
            theta1,
        } => {
            if !(*gamma > 0.0 && *gamma <= 1.0) {
                return bad("field.gamma in (0, 1]");
            }
            if !(coeff.is_finite() && *coeff != 0.0) {
                return bad("field.coeff != 0");
            }
            if rho.iter().any(|v| !v.is_finite()) {
                return bad("field.rho finite");
            }
            if !theta1.is_empty() && *gamma != 1.0 {
                return bad("field.theta1 only allowed with gamma = 1");
            }
            if theta1
                .iter()
                .any(|t| !(t.frequency.is_finite() && t.sin.is_finite() && t.cos.is_finite()))
            {
                return bad("field.theta1 finite");
            }
        }
        FieldKind::Logarithmic { e3, e4 } => {
            if !(e3.is_finite() && *e3 != 0.0) {
                return bad("field.e3 != 0");
            }
            if !(e4.is_finite() && *e4 > 0.0) {
                return bad("field.e4 > 0");
            }
        }
        FieldKind::Sinusoidal {
            gamma,
            coeff,
            amplitude,
            frequency,
        } => {
            if !(*gamma > 0.0 && *gamma <= 1.0) {
                return bad("field.gamma in (0, 1]");
            }
            if !(coeff.is_finite() && amplitude.is_finite() && frequency.is_finite()) {
                return bad("field sinusoidal parameters finite");
            }
        }
        FieldKind::Tabulated(_) => {}
    }
    Ok(())
}

/// `(tᵞ, γtᵞ⁻¹, γ(γ−1)tᵞ⁻²)`, with the common exponents special-cased.
#[inline]
fn power_jet(gamma: f64, t: f64) -> (f64, f64, f64) {
    if gamma == 1.0 {
        return (t, 1.0, 0.0);
    }
    let p = if gamma == 0.5 { t.sqrt() } else { t.powf(gamma) };
    let p1 = gamma * p / t;
    let p2 = (gamma - 1.0) * p1 / t;
    (p, p1, p2)
}

#[inline]
fn power_pair(gamma: f64, t: f64) -> (f64, f64) {
    if gamma == 1.0 {
        return (t, 1.0);
    }
    let p = if gamma == 0.5 { t.sqrt() } else { t.powf(gamma) };
    (p, gamma * p / t)
}

/// `Σₖ rₖ ℓᵏ` with `ℓ = ln(1+t)`, k starting at 1, and its first two derivatives.
fn log_poly_jet(coeffs: &[f64], t: f64) -> (f64, f64, f64) {
    let u = 1.0 + t;
    let l = u.ln();
    let (mut f, mut df, mut d2f) = (0.0, 0.0, 0.0);
    // derivatives in ℓ, then chain rule with dℓ/dt = 1/u
    for (i, r) in coeffs.iter().enumerate() {
        let k = (i + 1) as f64;
        let lk1 = l.powi(i as i32);
        f += r * lk1 * l;
        df += r * k * lk1;
        if i >= 1 {
            d2f += r * k * (k - 1.0) * l.powi(i as i32 - 1);
        }
    }
    (f, df / u, (d2f - df) / (u * u))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PhysicalParams {
        PhysicalParams::default()
    }

    fn power(gamma: f64) -> FieldModel {
        let kind = FieldKind::PowerLaw {
            gamma,
            coeff: 1.0,
            rho: vec![],
            theta1: vec![],
        };
        FieldModel::new(kind, &params(), 0).unwrap()
    }

    #[test]
    fn constant_field_values() {
        let model = FieldModel::new(FieldKind::Constant { e0: [1.0, 0.0] }, &params(), 0).unwrap();
        assert_eq!(model.eval_field(7.5).unwrap(), [1.0, 0.0]);
        let two = FieldModel::new(FieldKind::Constant { e0: [2.0, 0.0] }, &params(), 0).unwrap();
        assert_eq!(two.eval_b(3.0).unwrap(), [6.0, 0.0]);
    }

    #[test]
    fn power_law_values() {
        let model = power(0.5);
        assert!((model.eval_field(4.0).unwrap()[0] - 0.25).abs() < 1e-15);
        assert!((model.eval_b(9.0).unwrap()[0] - 3.0).abs() < 1e-15);
        assert_eq!(model.eval_b(0.0).unwrap(), [0.0, 0.0]);
        assert!(model.singular_at_origin());
        assert_eq!(model.regular_from(), 1.0);
    }

    #[test]
    fn logarithmic_values() {
        let one = FieldModel::new(FieldKind::Logarithmic { e3: 1.0, e4: 1.0 }, &params(), 0).unwrap();
        assert!((one.eval_field(0.0).unwrap()[0] - 1.0).abs() < 1e-15);
        let two = FieldModel::new(FieldKind::Logarithmic { e3: 2.0, e4: 1.0 }, &params(), 0).unwrap();
        let t = std::f64::consts::E - 1.0;
        assert!((two.eval_b(t).unwrap()[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad_mass = PhysicalParams { m: 0.0, ..params() };
        let err = FieldModel::zero(&bad_mass).unwrap_err();
        assert!(err.to_string().contains("params.m > 0"));
        let kind = FieldKind::PowerLaw {
            gamma: 0.5,
            coeff: 1.0,
            rho: vec![],
            theta1: vec![TrigTerm {
                frequency: 1.0,
                sin: 1.0,
                cos: 0.0,
            }],
        };
        assert!(FieldModel::new(kind, &params(), 0).is_err());
        assert!(FieldModel::new(FieldKind::Logarithmic { e3: 1.0, e4: 0.0 }, &params(), 0).is_err());
        assert!(FieldModel::new(FieldKind::Logarithmic { e3: 1.0, e4: 1.0 }, &params(), 1).is_err());
    }

    #[test]
    fn negative_time_is_out_of_range() {
        assert!(matches!(
            power(0.5).eval_b(-1.0),
            Err(FieldError::OutOfRange { .. })
        ));
    }

    #[test]
    fn perturbed_power_law_derivatives_match_finite_differences() {
        let kind = FieldKind::PowerLaw {
            gamma: 1.0,
            coeff: 0.7,
            rho: vec![0.3, -0.1, 0.02],
            theta1: vec![TrigTerm {
                frequency: 1.3,
                sin: 0.2,
                cos: -0.4,
            }],
        };
        let model = FieldModel::new(kind, &params(), 0).unwrap();
        let h = 1e-5;
        for &t in &[0.5, 3.0, 17.0] {
            let jet = model.jet(t);
            let fd1 = (model.jet(t + h).b[0] - model.jet(t - h).b[0]) / (2.0 * h);
            let fd2 = (model.jet(t + h).b1[0] - model.jet(t - h).b1[0]) / (2.0 * h);
            assert!((jet.b1[0] - fd1).abs() < 1e-8, "b' at {t}");
            assert!((jet.b2[0] - fd2).abs() < 1e-8, "b'' at {t}");
        }
        assert_eq!(model.jet(0.0).b[0], 0.0);
    }

    #[test]
    fn sinusoidal_two_dimensional_components() {
        let p = PhysicalParams { n: 2, ..params() };
        let kind = FieldKind::Sinusoidal {
            gamma: 0.5,
            coeff: 1.0,
            amplitude: 1.0,
            frequency: 1.0,
        };
        let model = FieldModel::new(kind, &p, 0).unwrap();
        let b = model.eval_b(16.0).unwrap();
        assert!((b[0] - 4.0).abs() < 1e-14);
        assert!((b[1] - (2.0 + 16f64.cos() - 1.0)).abs() < 1e-14);
        assert_eq!(model.eval_b(0.0).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn analytic_bounds() {
        let log = FieldModel::new(FieldKind::Logarithmic { e3: 1.0, e4: 1.0 }, &params(), 0).unwrap();
        assert_eq!(log.field_bounds(0.0, 100.0), (1.0, 1.0));
        let (e00, e01) = power(0.5).field_bounds(1.0, 100.0);
        assert!((e00 - 0.5).abs() < 1e-15);
        assert!((e01 - 0.25).abs() < 1e-15);
    }
}
