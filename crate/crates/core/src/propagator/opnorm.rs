//! `‖U₀,α(t)‖_{ℬ(ℋ)} = sup_ξ σ_max(M_α(t, ξ))`, since the phase factor is
//! unitary. The supremum is taken over a sampled ξ-window with adaptive local
//! refinement around each time's maximizer.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{singular_values, symbol_at, with_origin, PropagatorError, Weighting};
use crate::fields::{Vec2, MAX_DIM};
use crate::modes::{integrate_mode, Dispersion, Method, ModeTrajectory, SolverStats};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorNormOptions {
    /// Lattice points per axis, at least 64.
    pub samples: usize,
    pub tol: f64,
    /// Refinement stops once the maximum moves by less than this fraction.
    pub rel_change: f64,
    pub max_rounds: usize,
    /// Per-axis ξ-window; `None` selects [`default_window`].
    pub window: Option<(f64, f64)>,
    pub method: Method,
}

impl Default for OperatorNormOptions {
    fn default() -> Self {
        Self {
            samples: 64,
            tol: 1e-9,
            rel_change: 1e-3,
            max_rounds: 16,
            window: None,
            method: Method::AmplitudePhase,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorNorm {
    pub t: f64,
    pub value: f64,
    pub argmax: Vec2,
    pub rounds: usize,
    pub window: (f64, f64),
}

/// `±(8mc²/c + sup_{[0, t_max]} |b|)` per axis.
pub fn default_window(disp: &Dispersion, t_max: f64) -> (f64, f64) {
    let model = disp.model();
    let n = 4096;
    let sup_b = (0..=n)
        .map(|k| {
            let b = model.jet(t_max * k as f64 / n as f64).b;
            b[0].hypot(b[1])
        })
        .fold(0.0, f64::max);
    let p = disp.params();
    let half = 8.0 * p.rest_energy() / p.c + sup_b;
    (-half, half)
}

struct Entry {
    xi: Vec2,
    traj: ModeTrajectory,
    /// Number of leading bank times covered.
    covered: usize,
}

struct Pool<'a> {
    disp: &'a Dispersion,
    times: Vec<f64>,
    method: Method,
    tol: f64,
    entries: Vec<Entry>,
    index: BTreeMap<[u64; MAX_DIM], usize>,
    stats: SolverStats,
}

fn key(xi: Vec2) -> [u64; MAX_DIM] {
    [xi[0].to_bits(), xi[1].to_bits()]
}

impl Pool<'_> {
    /// Makes every `(ξ, time index)` request available, solving in parallel.
    fn ensure(&mut self, requests: BTreeMap<[u64; MAX_DIM], (Vec2, usize)>) -> Result<(), PropagatorError> {
        let todo: Vec<(Vec2, usize)> = requests
            .into_values()
            .filter(|(xi, k)| self.index.get(&key(*xi)).is_none_or(|&e| self.entries[e].covered <= *k))
            .collect();
        let solved = todo
            .par_iter()
            .map(|(xi, k)| integrate_mode(self.method, self.disp, *xi, &self.times[..=*k], self.tol))
            .collect::<Result<Vec<_>, _>>()?;
        for ((xi, k), traj) in todo.into_iter().zip(solved) {
            self.stats += traj.stats;
            let entry = Entry {
                xi,
                traj,
                covered: k + 1,
            };
            match self.index.get(&key(xi)) {
                Some(&e) => self.entries[e] = entry,
                None => {
                    self.index.insert(key(xi), self.entries.len());
                    self.entries.push(entry);
                }
            }
        }
        Ok(())
    }

    fn sigma(&self, e: usize, k: usize, alpha: f64) -> f64 {
        let sym = symbol_at(self.disp, &self.entries[e].traj, k, Weighting::Alpha(alpha));
        singular_values(&sym.m).0
    }

    /// Maximizer over every entry covering time index `k`; ties keep the first.
    fn best(&self, k: usize, alpha: f64) -> (usize, f64) {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for e in 0..self.entries.len() {
            if self.entries[e].covered > k {
                let s = self.sigma(e, k, alpha);
                if s > best.1 {
                    best = (e, s);
                }
            }
        }
        best
    }
}

pub fn operator_norm(disp: &Dispersion, t: f64, alpha: f64, opts: &OperatorNormOptions) -> Result<OperatorNorm, PropagatorError> {
    Ok(operator_norm_series(disp, &[t], alpha, opts)?.0[0])
}

/// Operator norms at every entry of `times` (increasing, `≥ 0`), plus the
/// accumulated solver statistics.
pub fn operator_norm_series(
    disp: &Dispersion,
    times: &[f64],
    alpha: f64,
    opts: &OperatorNormOptions,
) -> Result<(Vec<OperatorNorm>, SolverStats), PropagatorError> {
    if opts.samples < 64 {
        return Err(PropagatorError::Grid(format!("operator norm needs ≥ 64 samples per axis, got {}", opts.samples)));
    }
    if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) || times[0] < 0.0 {
        return Err(PropagatorError::Grid("operator norm times must be increasing and ≥ 0".into()));
    }
    let t_max = *times.last().unwrap();
    let window = opts.window.unwrap_or_else(|| default_window(disp, t_max));
    if !(window.0 < window.1) {
        return Err(PropagatorError::Grid("operator norm window must have lo < hi".into()));
    }
    let dim = disp.params().n;
    let bank_times = with_origin(times);
    let offset = bank_times.len() - times.len();
    let last = bank_times.len() - 1;
    let mut pool = Pool {
        disp,
        times: bank_times,
        method: opts.method,
        tol: opts.tol,
        entries: Vec::new(),
        index: BTreeMap::new(),
        stats: SolverStats::default(),
    };

    let n = opts.samples;
    let spacing = (window.1 - window.0) / (n - 1) as f64;
    let axis: Vec<f64> = (0..n).map(|j| if j == n - 1 { window.1 } else { window.0 + j as f64 * spacing }).collect();
    let mut requests = BTreeMap::new();
    if dim == 1 {
        for &x in &axis {
            requests.insert(key([x, 0.0]), ([x, 0.0], last));
        }
    } else {
        for &x in &axis {
            for &y in &axis {
                requests.insert(key([x, y]), ([x, y], last));
            }
        }
    }
    pool.ensure(requests)?;

    struct Track {
        value: f64,
        argmax: Vec2,
        step: f64,
        rounds: usize,
        extensions: usize,
        done: bool,
        lo: f64,
        hi: f64,
    }
    let mut tracks: Vec<Track> = (0..times.len())
        .map(|i| {
            let (e, value) = pool.best(i + offset, alpha);
            Track {
                value,
                argmax: pool.entries[e].xi,
                step: spacing,
                rounds: 0,
                extensions: 0,
                done: times[i] == 0.0,
                lo: window.0,
                hi: window.1,
            }
        })
        .collect();

    let on_edge = |x: f64, lo: f64, hi: f64| x <= lo || x >= hi;
    for _ in 0..opts.max_rounds {
        let mut requests = BTreeMap::new();
        for (i, tr) in tracks.iter_mut().enumerate() {
            if tr.done {
                continue;
            }
            let k = i + offset;
            let mut push = |xi: Vec2| {
                let entry = requests.entry(key(xi)).or_insert((xi, k));
                entry.1 = entry.1.max(k);
            };
            let edge_axes: Vec<usize> = (0..dim).filter(|&a| on_edge(tr.argmax[a], tr.lo, tr.hi)).collect();
            if !edge_axes.is_empty() && tr.extensions < 4 {
                tr.extensions += 1;
                for &a in &edge_axes {
                    let dir = if tr.argmax[a] >= tr.hi { 1.0 } else { -1.0 };
                    for j in 1..=n / 4 {
                        let mut xi = tr.argmax;
                        xi[a] += dir * j as f64 * spacing;
                        push(xi);
                    }
                    if dir > 0.0 {
                        tr.hi += (n / 4) as f64 * spacing;
                    } else {
                        tr.lo -= (n / 4) as f64 * spacing;
                    }
                }
            } else {
                let half = 0.5 * tr.step;
                for a in 0..dim {
                    for s in [-1.0, 1.0] {
                        let mut xi = tr.argmax;
                        xi[a] += s * half;
                        push(xi);
                    }
                }
                tr.step = half;
            }
        }
        if requests.is_empty() {
            break;
        }
        pool.ensure(requests)?;
        for (i, tr) in tracks.iter_mut().enumerate() {
            if tr.done {
                continue;
            }
            let (e, value) = pool.best(i + offset, alpha);
            let change = (value - tr.value).abs() / tr.value;
            tr.value = value;
            tr.argmax = pool.entries[e].xi;
            tr.rounds += 1;
            let edge = (0..dim).any(|a| on_edge(tr.argmax[a], tr.lo, tr.hi));
            if change < opts.rel_change && !(edge && tr.extensions < 4) {
                tr.done = true;
            }
        }
    }

    let out = times
        .iter()
        .zip(&tracks)
        .map(|(&t, tr)| OperatorNorm {
            t,
            value: if t == 0.0 { 1.0 } else { tr.value },
            argmax: tr.argmax,
            rounds: tr.rounds,
            window: (tr.lo, tr.hi),
        })
        .collect();
    Ok((out, pool.stats))
}
