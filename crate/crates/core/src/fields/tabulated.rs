use std::path::Path;

use super::FieldError;

/// Sampled `E(t)` along one axis with Fritsch–Carlson monotone cubic
/// interpolation. The interpolant is piecewise cubic, so `E′` and `∫E` are
/// evaluated exactly per piece; cumulative integrals at the knots are
/// precomputed at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Tabulated {
    t: Vec<f64>,
    e: Vec<f64>,
    slope: Vec<f64>,
    /// `∫₀^{tᵢ} E` at every knot.
    cumulative: Vec<f64>,
}

impl Tabulated {
    /// Samples must start at `t = 0`, be strictly increasing and finite.
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self, FieldError> {
        let bad = |msg: &str| Err(FieldError::InvalidParameter(msg.to_string()));
        if samples.len() < 2 {
            return bad("field.samples needs at least two points");
        }
        if samples[0].0 != 0.0 {
            return bad("field.samples must start at t = 0");
        }
        if samples.iter().any(|(t, e)| !t.is_finite() || !e.is_finite()) {
            return bad("field.samples finite");
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return bad("field.samples strictly increasing in t");
        }
        let t: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let e: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let slope = pchip_slopes(&t, &e);
        let mut cumulative = vec![0.0; t.len()];
        for i in 0..t.len() - 1 {
            let h = t[i + 1] - t[i];
            cumulative[i + 1] = cumulative[i] + piece_integral(e[i], e[i + 1], slope[i], slope[i + 1], h, 1.0);
        }
        Ok(Self {
            t,
            e,
            slope,
            cumulative,
        })
    }

    /// Reads a two-column CSV with header `t,E`.
    pub fn from_csv(path: &Path) -> Result<Self, FieldError> {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|err| FieldError::InvalidParameter(format!("field.path: {err}")))?;
        let mut samples = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|err| FieldError::InvalidParameter(format!("field.path: {err}")))?;
            let parse = |i: usize| -> Result<f64, FieldError> {
                record
                    .get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| FieldError::InvalidParameter("field.path rows are (t, E) numbers".into()))
            };
            samples.push((parse(0)?, parse(1)?));
        }
        Self::new(samples)
    }

    pub fn t_max(&self) -> f64 {
        *self.t.last().unwrap()
    }

    pub fn min_spacing(&self) -> f64 {
        self.t
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// `(E(t), E′(t), ∫₀ᵗ E)`; values beyond the last knot hold the end value.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let last = self.t.len() - 1;
        if t >= self.t[last] {
            let extra = t - self.t[last];
            return (self.e[last], 0.0, self.cumulative[last] + extra * self.e[last]);
        }
        let t = t.max(0.0);
        let i = match self.t.binary_search_by(|probe| probe.total_cmp(&t)) {
            Ok(i) => i.min(last - 1),
            Err(i) => i - 1,
        };
        let h = self.t[i + 1] - self.t[i];
        let s = (t - self.t[i]) / h;
        let (y0, y1, d0, d1) = (self.e[i], self.e[i + 1], self.slope[i], self.slope[i + 1]);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let value = h00 * y0 + h * h10 * d0 + h01 * y1 + h * h11 * d1;
        let dh00 = 6.0 * s * s - 6.0 * s;
        let dh10 = 3.0 * s * s - 4.0 * s + 1.0;
        let dh01 = -dh00;
        let dh11 = 3.0 * s * s - 2.0 * s;
        let derivative = (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1;
        let integral = self.cumulative[i] + piece_integral(y0, y1, d0, d1, h, s);
        (value, derivative, integral)
    }
}

/// `∫` of the Hermite cubic on one piece from its left end to fraction `s`.
fn piece_integral(y0: f64, y1: f64, d0: f64, d1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let i00 = s - s3 + 0.5 * s4;
    let i10 = 0.5 * s2 - 2.0 / 3.0 * s3 + 0.25 * s4;
    let i01 = s3 - 0.5 * s4;
    let i11 = 0.25 * s4 - s3 / 3.0;
    h * (i00 * y0 + h * i10 * d0 + i01 * y1 + h * i11 * d1)
}

fn pchip_slopes(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}
