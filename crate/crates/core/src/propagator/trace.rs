use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::PropagatorError;

/// Named metric series over a common time axis.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormTrace {
    pub times: Vec<f64>,
    pub metrics: BTreeMap<String, Vec<f64>>,
    /// Digest of the configuration that produced the trace.
    pub digest: String,
}

impl NormTrace {
    pub fn new(times: Vec<f64>) -> Result<Self, PropagatorError> {
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PropagatorError::Grid("trace times must be strictly increasing".into()));
        }
        Ok(Self {
            times,
            ..Default::default()
        })
    }

    /// Adds a metric; it must have one finite value per time.
    pub fn insert(&mut self, name: &str, values: Vec<f64>) -> Result<(), PropagatorError> {
        if values.len() != self.times.len() {
            return Err(PropagatorError::Grid(format!(
                "metric {name} has {} values for {} times",
                values.len(),
                self.times.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(PropagatorError::Grid(format!("metric {name} has non-finite value {v}")));
        }
        self.metrics.insert(name.to_string(), values);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.metrics.get(name).map(Vec::as_slice)
    }

    /// `(min, max)` of a metric.
    pub fn envelope(&self, name: &str) -> Option<(f64, f64)> {
        self.get(name).map(|v| {
            v.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)))
        })
    }

    /// Writes one metric as CSV with columns `t,value`.
    pub fn write_metric_csv<W: Write>(&self, name: &str, writer: W) -> csv::Result<()> {
        let values = self.metrics.get(name).map(Vec::as_slice).unwrap_or(&[]);
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "value"])?;
        for (t, v) in self.times.iter().zip(values) {
            w.write_record([format!("{t:.17e}"), format!("{v:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_series() {
        assert!(NormTrace::new(vec![1.0, 1.0]).is_err());
        let mut trace = NormTrace::new(vec![1.0, 2.0]).unwrap();
        assert!(trace.insert("norm", vec![1.0]).is_err());
        assert!(trace.insert("norm", vec![1.0, f64::NAN]).is_err());
        trace.insert("norm", vec![2.0, 0.5]).unwrap();
        assert_eq!(trace.envelope("norm"), Some((0.5, 2.0)));
    }

    #[test]
    fn csv_layout() {
        let mut trace = NormTrace::new(vec![1.0, 10.0]).unwrap();
        trace.insert("norm", vec![1.0, 0.25]).unwrap();
        let mut buf = Vec::new();
        trace.write_metric_csv("norm", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("t,value"));
        assert_eq!(text.lines().count(), 3);
    }
}
