//! The factorized propagator `U₀,α(t)` on spectral grids.
//!
//! `U₀,α(t)` acts as a 2×2 Fourier multiplier `M_α(t, ξ)` followed by the
//! position-space phase `e^{i b(t)·x}`. Since the phase never moves the
//! stored spectrum, evolved states are kept in the gauge frame and carry
//! `b(t)` alongside (see [`SpectralState`]).

mod opnorm;
mod state;
mod symbol;
mod trace;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::fields::{FieldError, Vec2};
use crate::modes::{integrate_mode, Dispersion, Method, ModeError, ModeTrajectory, SolverStats};

pub use opnorm::{default_window, operator_norm, operator_norm_series, OperatorNorm, OperatorNormOptions};
pub use state::{Grid, SpectralState};
pub use symbol::{assemble_symbol, symbol_at, PropagatorSymbol, Weighting};
pub(crate) use symbol::singular_values;
pub use trace::NormTrace;

/// Default local tolerance of the mode solves behind grid operations.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Largest tolerated fraction of spectral mass in the outer band `|k| ≥ 3N/8`.
pub const ALIASING_LIMIT: f64 = 1e-10;

/// Dual-grid points whose coefficients are below this fraction of the largest
/// are treated as empty and not solved.
/// Largest admissible fraction of spectral mass outside the solved modes.
pub const SUPPORT_MASS_LIMIT: f64 = 1e-16;
pub const SUPPORT_THRESHOLD: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum PropagatorError {
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("{0}")]
    Grid(String),
    #[error("trajectory has no sample at t = {t}")]
    NotSampled { t: f64 },
    #[error("spectral tail mass {tail:e} exceeds {limit:e}; the grid is too coarse", limit = ALIASING_LIMIT)]
    Aliasing { tail: f64 },
    #[error("state is tagged alpha = {found:?}, operation expects {expected:?}")]
    AlphaTag { expected: Option<f64>, found: Option<f64> },
    #[error("state has spectral mass outside the solved modes")]
    Support,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Mode trajectories for a set of frequencies, all sampled at the same times.
#[derive(Clone, Debug)]
pub struct ModeBank {
    pub times: Vec<f64>,
    pub trajectories: Vec<ModeTrajectory>,
    pub stats: SolverStats,
}

/// `times` with a leading `0` added when absent.
pub(crate) fn with_origin(times: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len() + 1);
    if times.first() != Some(&0.0) {
        out.push(0.0);
    }
    out.extend_from_slice(times);
    out
}

impl ModeBank {
    /// Solves every mode in parallel; results keep the order of `xis`.
    pub fn solve(
        disp: &Dispersion,
        xis: &[Vec2],
        times: &[f64],
        method: Method,
        tol: f64,
    ) -> Result<Self, PropagatorError> {
        let times = with_origin(times);
        let trajectories = xis
            .par_iter()
            .map(|xi| integrate_mode(method, disp, *xi, &times, tol))
            .collect::<Result<Vec<_>, _>>()?;
        let mut stats = SolverStats::default();
        for traj in &trajectories {
            stats += traj.stats;
        }
        Ok(Self {
            times,
            trajectories,
            stats,
        })
    }

    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.trajectories
            .first()
            .map_or_else(|| self.times.iter().position(|s| *s == t), |traj| traj.index_of(t))
    }
}

/// Evolves states on one grid from precomputed mode trajectories of the
/// dual-grid points where the initial data live.
#[derive(Clone, Debug)]
pub struct GridPropagator<'a> {
    disp: &'a Dispersion,
    grid: Grid,
    active: Vec<usize>,
    bank: ModeBank,
}

fn active_modes(grid: &Grid, spectra: &[Vec<Complex64>; 2]) -> Vec<usize> {
    let peak = spectra
        .iter()
        .flat_map(|s| s.iter().map(|v| v.norm()))
        .fold(0.0, f64::max);
    (0..grid.len())
        .filter(|&i| spectra[0][i].norm().max(spectra[1][i].norm()) > SUPPORT_THRESHOLD * peak)
        .collect()
}

impl<'a> GridPropagator<'a> {
    pub fn new(
        disp: &'a Dispersion,
        state0: &SpectralState,
        times: &[f64],
        method: Method,
        tol: f64,
    ) -> Result<Self, PropagatorError> {
        Self::for_states(disp, &[state0], times, method, tol)
    }

    /// One bank covering the spectral support of every state, which must
    /// share a grid.
    pub fn for_states(
        disp: &'a Dispersion,
        states: &[&SpectralState],
        times: &[f64],
        method: Method,
        tol: f64,
    ) -> Result<Self, PropagatorError> {
        let first = states
            .first()
            .ok_or_else(|| PropagatorError::Grid("at least one state is required".into()))?;
        let grid = *first.grid();
        if grid.dim() != disp.params().n {
            return Err(PropagatorError::Grid(format!(
                "grid dimension {} does not match params.n = {}",
                grid.dim(),
                disp.params().n
            )));
        }
        let mut mask = vec![false; grid.len()];
        for state in states {
            if *state.grid() != grid {
                return Err(PropagatorError::Grid("states live on different grids".into()));
            }
            let spectra = state.spectra();
            check_aliasing(&grid, &spectra)?;
            for i in active_modes(&grid, &spectra) {
                mask[i] = true;
            }
        }
        let active: Vec<usize> = (0..grid.len()).filter(|&i| mask[i]).collect();
        let xis: Vec<Vec2> = active.iter().map(|&i| grid.frequency(i)).collect();
        let bank = ModeBank::solve(disp, &xis, times, method, tol)?;
        Ok(Self {
            disp,
            grid,
            active,
            bank,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.bank.times
    }

    pub fn active_modes(&self) -> &[usize] {
        &self.active
    }

    pub fn bank(&self) -> &ModeBank {
        &self.bank
    }

    pub fn time_index(&self, t: f64) -> Result<usize, PropagatorError> {
        self.bank.time_index(t).ok_or(PropagatorError::NotSampled { t })
    }

    fn check_state(&self, state: &SpectralState, weighting: Weighting) -> Result<[Vec<Complex64>; 2], PropagatorError> {
        if *state.grid() != self.grid {
            return Err(PropagatorError::Grid("state grid differs from the propagator grid".into()));
        }
        if state.gauge != [0.0; 2] {
            return Err(PropagatorError::Grid("initial data must be given at t = 0 (zero gauge)".into()));
        }
        if state.alpha != weighting.alpha() {
            return Err(PropagatorError::AlphaTag {
                expected: weighting.alpha(),
                found: state.alpha,
            });
        }
        let spectra = state.spectra();
        check_aliasing(&self.grid, &spectra)?;
        let total: f64 = spectra.iter().flat_map(|s| s.iter().map(|v| v.norm_sqr())).sum();
        let mut active = vec![false; self.grid.len()];
        for &i in &self.active {
            active[i] = true;
        }
        let outside: f64 = (0..self.grid.len())
            .filter(|&i| !active[i])
            .map(|i| spectra[0][i].norm_sqr() + spectra[1][i].norm_sqr())
            .sum();
        if outside > SUPPORT_MASS_LIMIT * total {
            return Err(PropagatorError::Support);
        }
        Ok(spectra)
    }

    /// Gauge-frame spectra of `U(t)Φ₀` at bank time index `index`.
    pub fn evolve_spectra(&self, spectra: &[Vec<Complex64>; 2], index: usize, weighting: Weighting) -> [Vec<Complex64>; 2] {
        let mut out = [vec![Complex64::default(); self.grid.len()], vec![Complex64::default(); self.grid.len()]];
        for (slot, &i) in self.active.iter().enumerate() {
            let sym = symbol_at(self.disp, &self.bank.trajectories[slot], index, weighting);
            let v = sym.apply([spectra[0][i], spectra[1][i]]);
            out[0][i] = v[0];
            out[1][i] = v[1];
        }
        out
    }

    pub fn evolve(&self, state0: &SpectralState, t: f64, weighting: Weighting) -> Result<SpectralState, PropagatorError> {
        let spectra = self.check_state(state0, weighting)?;
        let index = self.time_index(t)?;
        let out = self.evolve_spectra(&spectra, index, weighting);
        let gauge = self.disp.model().jet(t).b;
        Ok(SpectralState::from_spectra(self.grid, out, weighting.alpha(), gauge))
    }

    /// `‖U(t)Φ₀‖_ℋ` at every bank time, computed on the dual grid.
    pub fn norm_series(&self, state0: &SpectralState, weighting: Weighting) -> Result<Vec<f64>, PropagatorError> {
        let spectra = self.check_state(state0, weighting)?;
        let cell = self.grid.dual_cell();
        Ok((0..self.bank.times.len())
            .map(|index| {
                let out = self.evolve_spectra(&spectra, index, weighting);
                (out.iter().flat_map(|s| s.iter().map(|v| v.norm_sqr())).sum::<f64>() * cell).sqrt()
            })
            .collect())
    }
}

fn check_aliasing(grid: &Grid, spectra: &[Vec<Complex64>; 2]) -> Result<(), PropagatorError> {
    let tail = grid.tail_mass(&[&spectra[0], &spectra[1]]);
    if tail > ALIASING_LIMIT {
        return Err(PropagatorError::Aliasing { tail });
    }
    Ok(())
}

/// `Φ(t) = U₀,α(t)Φ₀` for `K_α^{1/2}`-prepared data.
pub fn apply_propagator(
    state0: &SpectralState,
    disp: &Dispersion,
    t: f64,
    alpha: f64,
) -> Result<SpectralState, PropagatorError> {
    evolve_with(state0, disp, t, Weighting::Alpha(alpha))
}

/// Raw Klein–Gordon evolution of a `(ψ, ψ₁)` pair.
pub fn evolve_kg(state0: &SpectralState, disp: &Dispersion, t: f64) -> Result<SpectralState, PropagatorError> {
    evolve_with(state0, disp, t, Weighting::Raw)
}

fn evolve_with(
    state0: &SpectralState,
    disp: &Dispersion,
    t: f64,
    weighting: Weighting,
) -> Result<SpectralState, PropagatorError> {
    if t == 0.0 {
        if state0.alpha != weighting.alpha() {
            return Err(PropagatorError::AlphaTag {
                expected: weighting.alpha(),
                found: state0.alpha,
            });
        }
        return Ok(state0.clone());
    }
    let prop = GridPropagator::new(disp, state0, &[t], Method::AmplitudePhase, DEFAULT_TOL)?;
    prop.evolve(state0, t, weighting)
}

/// `‖L(0, p)^θ φ_k‖` for component `k`, with `p = ξ + gauge` on the dual grid.
pub fn sobolev_norm(state: &SpectralState, disp: &Dispersion, theta: f64, component: usize) -> f64 {
    let grid = state.grid();
    let spec = grid.forward(&state.phi[component]);
    let g = state.gauge;
    let sum: f64 = spec
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let xi = grid.frequency(i);
            disp.l0([xi[0] + g[0], xi[1] + g[1]]).powf(2.0 * theta) * v.norm_sqr()
        })
        .sum();
    (sum * grid.dual_cell()).sqrt()
}

/// Applies `K_α^{1/2} = diag(L(0,p)^{1/4−α/2}, L(0,p)^{−1/4−α/2})` or its inverse.
pub fn k_alpha_half(
    state: &SpectralState,
    disp: &Dispersion,
    alpha: f64,
    direction: Direction,
) -> Result<SpectralState, PropagatorError> {
    let (expected, result) = match direction {
        Direction::Forward => (None, Some(alpha)),
        Direction::Inverse => (Some(alpha), None),
    };
    if state.alpha != expected {
        return Err(PropagatorError::AlphaTag {
            expected,
            found: state.alpha,
        });
    }
    let grid = *state.grid();
    let sign = if direction == Direction::Forward { 1.0 } else { -1.0 };
    let mut spectra = state.spectra();
    let g = state.gauge;
    for i in 0..grid.len() {
        let xi = grid.frequency(i);
        let l = disp.l0([xi[0] + g[0], xi[1] + g[1]]);
        spectra[0][i] *= l.powf(sign * (0.25 - 0.5 * alpha));
        spectra[1][i] *= l.powf(sign * (-0.25 - 0.5 * alpha));
    }
    check_aliasing(&grid, &spectra)?;
    Ok(SpectralState::from_spectra(grid, spectra, result, state.gauge))
}
