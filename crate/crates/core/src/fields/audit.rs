//! Numerical audit of the integrability conditions on `b′` and `b″`.
//!
//! For a shift vector `a` and horizon `T` the auditor measures
//!
//! * `e₀(T) = ∫_{s∈[R,T], |a+b(s)| ≤ 2E₀,₀/(mc²)} |b′(s)| ds`
//! * `e₁(T) = ∫_R^T (|b′|² + |b″|) / (c²|a+b|² + (mc²)²) ds`
//!
//! where `R` is [`FieldModel::regular_from`]. Bounded estimates over a
//! sequence of decade horizons mean the field behaves like the admissible
//! catalog; continued growth means it does not.

use serde::{Deserialize, Serialize};

use super::{FieldError, FieldModel, PhysicalParams, Vec2};
use crate::quadrature::{integrate, QuadOptions};

/// Relative increase between the last two horizons that counts as growth.
pub const GROWTH_THRESHOLD: f64 = 0.01;
const ROOT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonEstimate {
    pub horizon: f64,
    pub e0: f64,
    pub e1: f64,
    pub b_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct E1Report {
    pub e0_estimate: f64,
    pub e1_estimate: f64,
    pub horizon: f64,
    pub growth_flag: bool,
    pub verdict: Verdict,
    /// Lower integration limit `R`.
    pub lower_limit: f64,
    /// `E₀,₀` and `E₀,₁` estimates over `[R, T_max]`.
    pub e00: f64,
    pub e01: f64,
    /// Radius `2E₀,₀/(mc²)` of the low-momentum region.
    pub threshold: f64,
    pub per_horizon: Vec<HorizonEstimate>,
}

fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

fn shifted(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

/// Runs the audit at every horizon. Horizons must be strictly increasing,
/// at least two, and beyond the model's regular-from time.
pub fn audit_e1(
    model: &FieldModel,
    params: &PhysicalParams,
    a: Vec2,
    horizons: &[f64],
) -> Result<E1Report, FieldError> {
    params.validate()?;
    let lower = model.regular_from();
    if horizons.len() < 2 {
        return Err(FieldError::InvalidParameter(
            "audit horizons need at least two entries".into(),
        ));
    }
    if horizons.iter().any(|h| !h.is_finite() || *h <= lower) || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FieldError::InvalidParameter(format!(
            "audit horizons strictly increasing and > {lower}"
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(FieldError::InvalidParameter("audit shift a finite".into()));
    }
    let t_max = *horizons.last().unwrap();
    let (_, domain_hi) = model.domain();
    if t_max > domain_hi {
        return Err(FieldError::OutOfRange {
            t: t_max,
            lo: 0.0,
            hi: domain_hi,
        });
    }

    let (e00, e01) = model.field_bounds(lower, t_max);
    let mc2 = params.rest_energy();
    let threshold = 2.0 * e00 / mc2;
    let panel = model.period().unwrap_or(1.0).min(1.0);
    let scan = panel / 8.0;

    let region = sublevel_region(model, a, threshold, lower, t_max, scan);

    let opts = QuadOptions {
        rel_tol: 1e-10,
        abs_tol: 1e-15,
        max_intervals: 2000,
    };
    let rate = |s: f64| norm(model.jet(s).b1);
    let c2 = params.c * params.c;
    let e1_integrand = |s: f64| {
        let jet = model.jet(s);
        let b1 = norm(jet.b1);
        let shifted = norm(shifted(a, jet.b));
        (b1 * b1 + norm(jet.b2)) / (c2 * shifted * shifted + mc2 * mc2)
    };

    let mut per_horizon = Vec::with_capacity(horizons.len());
    let (mut e0, mut e1) = (0.0, 0.0);
    let mut from = lower;
    for &to in horizons {
        for &(lo, hi) in &region {
            let (lo, hi) = (lo.max(from), hi.min(to));
            if hi > lo {
                e0 += integrate(rate, lo, hi, opts)?.value;
            }
        }
        let panels = ((to - from) / panel).ceil().max(1.0) as usize;
        let width = (to - from) / panels as f64;
        for k in 0..panels {
            let lo = from + k as f64 * width;
            let hi = if k + 1 == panels { to } else { lo + width };
            e1 += integrate(e1_integrand, lo, hi, opts)?.value;
        }
        per_horizon.push(HorizonEstimate {
            horizon: to,
            e0,
            e1,
            b_norm: norm(model.jet(to).b),
        });
        from = to;
    }

    let last = per_horizon[per_horizon.len() - 1];
    let prev = per_horizon[per_horizon.len() - 2];
    let grows = |new: f64, old: f64| new - old > GROWTH_THRESHOLD * old.abs() && new - old > 1e-14;
    let growth_flag = grows(last.e0, prev.e0) || grows(last.e1, prev.e1);
    let unbounded = last.b_norm > prev.b_norm * (1.0 + GROWTH_THRESHOLD) && last.b_norm > 0.0;
    let verdict = if !unbounded {
        Verdict::NotApplicable
    } else if growth_flag {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    Ok(E1Report {
        e0_estimate: last.e0,
        e1_estimate: last.e1,
        horizon: t_max,
        growth_flag,
        verdict,
        lower_limit: lower,
        e00,
        e01,
        threshold,
        per_horizon,
    })
}

/// Intervals of `[lo, hi]` on which `|a + b(s)| ≤ radius`, located by a scan
/// of step `scan` and refined by bisection.
pub(crate) fn sublevel_region(model: &FieldModel, a: Vec2, radius: f64, lo: f64, hi: f64, scan: f64) -> Vec<(f64, f64)> {
    let g = |s: f64| norm(shifted(a, model.jet(s).b)) - radius;
    let steps = ((hi - lo) / scan).ceil().max(1.0) as usize;
    let mut intervals = Vec::new();
    let mut start = if g(lo) <= 0.0 { Some(lo) } else { None };
    let mut prev_s = lo;
    let mut prev_inside = start.is_some();
    for k in 1..=steps {
        let s = if k == steps { hi } else { lo + k as f64 * scan };
        let inside = g(s) <= 0.0;
        if inside != prev_inside {
            let root = bisect(&g, prev_s, s);
            if inside {
                start = Some(root);
            } else if let Some(begin) = start.take() {
                intervals.push((begin, root));
            }
        }
        prev_s = s;
        prev_inside = inside;
    }
    if let Some(begin) = start {
        intervals.push((begin, hi));
    }
    intervals
}

fn bisect<G: Fn(f64) -> f64>(g: &G, mut lo: f64, mut hi: f64) -> f64 {
    let lo_inside = g(lo) <= 0.0;
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if (g(mid) <= 0.0) == lo_inside {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
