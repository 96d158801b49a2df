//! Dormand–Prince 5(4) with dense output and Hairer's step-size control.

use thiserror::Error;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFE: f64 = 0.9;
const FAC1: f64 = 0.2;
const FAC2: f64 = 10.0;
const BETA: f64 = 0.04;

/// A first-order system `y′ = f(t, y)` of fixed size `D`.
pub trait OdeSystem<const D: usize> {
    fn rhs(&self, t: f64, y: &[f64; D], dy: &mut [f64; D]);

    /// Upper bound on the next step from `(t, y)`.
    fn max_step(&self, _t: f64, _y: &[f64; D]) -> f64 {
        f64::INFINITY
    }

    /// Called with a dense-output value at each requested sample time,
    /// before [`accept`](Self::accept) sees the step containing it.
    fn sample(&mut self, t: f64, y: &[f64; D]);

    /// Called after every accepted step.
    fn accept(&mut self, _t: f64, _y: &[f64; D]) {}
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerances<const D: usize> {
    pub atol: [f64; D],
    pub rtol: [f64; D],
}

impl<const D: usize> Tolerances<D> {
    pub fn uniform(atol: f64, rtol: f64) -> Self {
        Self {
            atol: [atol; D],
            rtol: [rtol; D],
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IntegratorOptions {
    pub max_steps: u64,
    pub h_max: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            max_steps: 200_000_000,
            h_max: f64::INFINITY,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SolverStats {
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
}

impl std::ops::AddAssign for SolverStats {
    fn add_assign(&mut self, other: Self) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.rhs_evals += other.rhs_evals;
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: u64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("sample times must be increasing and inside [{t0}, {t_end}]")]
    BadSamples { t0: f64, t_end: f64 },
}

fn axpy<const D: usize>(y: &[f64; D], terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for i in 0..D {
        let mut acc = 0.0;
        for (w, k) in terms {
            acc += w * k[i];
        }
        out[i] += acc;
    }
    out
}

fn initial_step<const D: usize, S: OdeSystem<D>>(
    sys: &S,
    t: f64,
    y: &[f64; D],
    f0: &[f64; D],
    tol: &Tolerances<D>,
    h_max: f64,
) -> f64 {
    let mut dnf = 0.0;
    let mut dny = 0.0;
    let mut sk = [0.0; D];
    for i in 0..D {
        sk[i] = tol.atol[i] + tol.rtol[i] * y[i].abs();
        dnf += (f0[i] / sk[i]).powi(2);
        dny += (y[i] / sk[i]).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(h_max);
    let y1 = axpy(y, &[(h, f0)]);
    let mut f1 = [0.0; D];
    sys.rhs(t + h, &y1, &mut f1);
    let mut der2: f64 = 0.0;
    for i in 0..D {
        der2 += ((f1[i] - f0[i]) / sk[i]).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.abs().max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1).min(h_max)
}

/// Integrates `sys` from `(t0, y0)` to `t_end`, calling `sys.sample` at every
/// entry of `samples` (increasing, within `[t0, t_end]`). The state update is
/// Kahan-compensated so that large slowly-varying components (accumulated
/// phases) keep their low-order bits.
pub fn integrate<const D: usize, S: OdeSystem<D>>(
    sys: &mut S,
    t0: f64,
    y0: [f64; D],
    t_end: f64,
    samples: &[f64],
    tol: &Tolerances<D>,
    opts: &IntegratorOptions,
) -> Result<([f64; D], SolverStats), IntegratorError> {
    if samples.windows(2).any(|w| w[1] < w[0]) || samples.iter().any(|s| !(*s >= t0 && *s <= t_end)) {
        return Err(IntegratorError::BadSamples { t0, t_end });
    }
    let mut stats = SolverStats::default();
    let mut next = 0;
    while next < samples.len() && samples[next] == t0 {
        sys.sample(t0, &y0);
        next += 1;
    }
    if t_end == t0 {
        return Ok((y0, stats));
    }

    let mut t = t0;
    let mut y = y0;
    let mut comp = [0.0; D];
    let mut k1 = [0.0; D];
    sys.rhs(t, &y, &mut k1);
    stats.rhs_evals += 1;
    let h_cap = |sys: &S, t: f64, y: &[f64; D]| sys.max_step(t, y).min(opts.h_max);
    let mut h = initial_step(sys, t, &y, &k1, tol, h_cap(sys, t, &y));
    stats.rhs_evals += 1;
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = ([0.0; D], [0.0; D], [0.0; D], [0.0; D], [0.0; D], [0.0; D]);

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(IntegratorError::TooManySteps {
                t,
                max_steps: opts.max_steps,
            });
        }
        h = h.min(h_cap(sys, t, &y));
        let mut last = false;
        if t + 1.01 * h >= t_end {
            h = t_end - t;
            last = true;
        }
        if !(h > 0.0) || 0.1 * h <= t.abs() * f64::EPSILON {
            return Err(IntegratorError::StepUnderflow { t, h });
        }

        let y2 = axpy(&y, &[(h * A21, &k1)]);
        sys.rhs(t + C2 * h, &y2, &mut k2);
        let y3 = axpy(&y, &[(h * A31, &k1), (h * A32, &k2)]);
        sys.rhs(t + C3 * h, &y3, &mut k3);
        let y4 = axpy(&y, &[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)]);
        sys.rhs(t + C4 * h, &y4, &mut k4);
        let y5 = axpy(&y, &[(h * A51, &k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)]);
        sys.rhs(t + C5 * h, &y5, &mut k5);
        let y6 = axpy(
            &y,
            &[(h * A61, &k1), (h * A62, &k2), (h * A63, &k3), (h * A64, &k4), (h * A65, &k5)],
        );
        let t_new = if last { t_end } else { t + h };
        sys.rhs(t_new, &y6, &mut k6);
        let mut delta = [0.0; D];
        let mut y_new = [0.0; D];
        let mut comp_new = comp;
        for i in 0..D {
            delta[i] = h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            let inc = delta[i] - comp[i];
            let sum = y[i] + inc;
            comp_new[i] = (sum - y[i]) - inc;
            y_new[i] = sum;
        }
        sys.rhs(t_new, &y_new, &mut k7);
        stats.rhs_evals += 6;

        let mut err: f64 = 0.0;
        for i in 0..D {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = tol.atol[i] + tol.rtol[i] * y[i].abs().max(y_new[i].abs());
            err = err.max(e.abs() / sk);
        }

        if !err.is_finite() {
            stats.rejected += 1;
            h *= FAC1;
            last_rejected = true;
            continue;
        }

        let fac11 = err.powf(0.2 - BETA * 0.75);
        if err <= 1.0 {
            if y_new.iter().any(|v| !v.is_finite()) {
                return Err(IntegratorError::NonFinite { t: t_new });
            }
            stats.accepted += 1;
            let fac = fac11 / facold.powf(BETA);
            facold = err.max(1e-4);
            if next < samples.len() && samples[next] <= t_new {
                let mut r5 = [0.0; D];
                for i in 0..D {
                    r5[i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                while next < samples.len() && samples[next] <= t_new {
                    let ts = samples[next];
                    if ts == t_new {
                        sys.sample(ts, &y_new);
                    } else {
                        let theta = (ts - t) / h;
                        let theta1 = 1.0 - theta;
                        let mut ys = [0.0; D];
                        for i in 0..D {
                            let r2 = y_new[i] - y[i];
                            let r3 = h * k1[i] - r2;
                            let r4 = r2 - h * k7[i] - r3;
                            ys[i] = y[i] + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5[i])));
                        }
                        sys.sample(ts, &ys);
                    }
                    next += 1;
                }
            }
            t = t_new;
            y = y_new;
            comp = comp_new;
            k1 = k7;
            sys.accept(t, &y);
            if last {
                return Ok((y, stats));
            }
            let fac = (1.0 / FAC2).max((1.0 / FAC1).min(fac / SAFE));
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new;
        } else {
            stats.rejected += 1;
            h /= (1.0 / FAC1).min(fac11 / SAFE);
            last_rejected = true;
        }
    }
}
