use std::f64::consts::PI;
use std::io::{self, Read, Write};

use byteorder::{BigEndian, LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::PropagatorError;
use crate::fields::{Vec2, MAX_DIM};

/// Periodic box `[−X, X)ⁿ` with `N` points per axis and its dual grid.
///
/// Flat indices are row-major with axis 0 slowest. Dual indices follow FFT
/// order: wavenumbers `0, 1, …, N/2 − 1, −N/2, …, −1` times `π/X`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    points: usize,
    half_width: f64,
}

impl Grid {
    pub fn new(dim: usize, points: usize, half_width: f64) -> Result<Self, PropagatorError> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(PropagatorError::Grid(format!("grid dimension {dim} not in {{1, 2}}")));
        }
        if !points.is_power_of_two() || points < 8 {
            return Err(PropagatorError::Grid(format!("grid.points {points} must be a power of two ≥ 8")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(PropagatorError::Grid("grid.half_width > 0".into()));
        }
        Ok(Self {
            dim,
            points,
            half_width,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn dxi(&self) -> f64 {
        PI / self.half_width
    }

    /// Per-point measure `dxⁿ` for position-space sums.
    pub fn cell(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Per-point measure `dξⁿ` for dual-grid sums.
    pub fn dual_cell(&self) -> f64 {
        self.dxi().powi(self.dim as i32)
    }

    fn axes(&self, idx: usize) -> [usize; MAX_DIM] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.points, idx % self.points]
        }
    }

    fn wavenumber(&self, k: usize) -> i64 {
        if k < self.points / 2 {
            k as i64
        } else {
            k as i64 - self.points as i64
        }
    }

    pub fn position(&self, idx: usize) -> Vec2 {
        let j = self.axes(idx);
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim {
            x[a] = -self.half_width + j[a] as f64 * self.dx();
        }
        x
    }

    pub fn frequency(&self, idx: usize) -> Vec2 {
        let k = self.axes(idx);
        let mut xi = [0.0; MAX_DIM];
        for a in 0..self.dim {
            xi[a] = self.wavenumber(k[a]) as f64 * self.dxi();
        }
        xi
    }

    /// Largest `|wavenumber|` over the axes of a dual index.
    pub fn band(&self, idx: usize) -> usize {
        let k = self.axes(idx);
        (0..self.dim).map(|a| self.wavenumber(k[a]).unsigned_abs() as usize).max().unwrap()
    }

    fn parity(&self, idx: usize) -> f64 {
        let k = self.axes(idx);
        let s: usize = (0..self.dim).map(|a| k[a]).sum();
        if s % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// In-place unnormalized FFT along every axis.
    fn fft(&self, data: &mut [Complex64], inverse: bool) {
        let mut planner = FftPlanner::new();
        let n = self.points;
        let plan = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        plan.process(data);
        if self.dim == 2 {
            let mut column = vec![Complex64::default(); n];
            for col in 0..n {
                for row in 0..n {
                    column[row] = data[row * n + col];
                }
                plan.process(&mut column);
                for row in 0..n {
                    data[row * n + col] = column[row];
                }
            }
        }
    }

    /// Unitary forward transform `ψ ↦ ψ̂` on the dual grid.
    pub fn forward(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = psi.to_vec();
        self.fft(&mut out, false);
        let scale = (2.0 * PI).powf(-(self.dim as f64) / 2.0) * self.cell();
        for (i, v) in out.iter_mut().enumerate() {
            *v *= scale * self.parity(i);
        }
        out
    }

    /// Inverse of [`forward`](Self::forward).
    pub fn inverse(&self, spec: &[Complex64]) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = spec.iter().enumerate().map(|(i, v)| v * self.parity(i)).collect();
        self.fft(&mut out, true);
        let scale = (2.0 * PI).powf(-(self.dim as f64) / 2.0) * self.dual_cell();
        for v in out.iter_mut() {
            *v *= scale;
        }
        out
    }

    /// Fraction of `Σ|ψ̂|²` carried by wavenumbers `|k| ≥ 3N/8`.
    pub fn tail_mass(&self, spectra: &[&[Complex64]]) -> f64 {
        let cut = 3 * self.points / 8;
        let (mut tail, mut total) = (0.0, 0.0);
        for spec in spectra {
            for (i, v) in spec.iter().enumerate() {
                let w = v.norm_sqr();
                total += w;
                if self.band(i) >= cut {
                    tail += w;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }
}

/// Two-component field `Φ = (φ₁, φ₂)` on a periodic grid.
///
/// Values are stored in the gauge frame: the physical field is
/// `e^{i g·x} φ(x)` with `g = gauge`. Evolved states carry `g = b(t)`, which
/// keeps the stored spectrum where the initial data put it.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralState {
    grid: Grid,
    pub phi: [Vec<Complex64>; 2],
    /// `Some(α)` for `K_α^{1/2}`-scaled data, `None` for raw `(ψ, ψ₁)` pairs.
    pub alpha: Option<f64>,
    pub gauge: Vec2,
}

impl SpectralState {
    pub fn from_position(grid: Grid, phi1: Vec<Complex64>, phi2: Vec<Complex64>) -> Result<Self, PropagatorError> {
        if phi1.len() != grid.len() || phi2.len() != grid.len() {
            return Err(PropagatorError::Grid(format!(
                "component lengths {} and {} do not match the grid size {}",
                phi1.len(),
                phi2.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            phi: [phi1, phi2],
            alpha: None,
            gauge: [0.0; MAX_DIM],
        })
    }

    /// Synthesizes raw initial data from a spectral profile. The profile must
    /// vanish outside the central half of the dual grid (`|k| < N/4`).
    pub fn from_spectrum<F>(grid: Grid, profile: F) -> Result<Self, PropagatorError>
    where
        F: Fn(Vec2) -> [Complex64; 2],
    {
        let mut spec = [vec![Complex64::default(); grid.len()], vec![Complex64::default(); grid.len()]];
        for i in 0..grid.len() {
            let v = profile(grid.frequency(i));
            if grid.band(i) >= grid.points() / 4 && (v[0] != Complex64::default() || v[1] != Complex64::default()) {
                return Err(PropagatorError::Grid(
                    "initial spectrum must vanish outside the central half of the dual grid".into(),
                ));
            }
            spec[0][i] = v[0];
            spec[1][i] = v[1];
        }
        Ok(Self::from_spectra(grid, spec, None, [0.0; MAX_DIM]))
    }

    pub fn from_spectra(grid: Grid, spec: [Vec<Complex64>; 2], alpha: Option<f64>, gauge: Vec2) -> Self {
        let [s1, s2] = spec;
        Self {
            grid,
            phi: [grid.inverse(&s1), grid.inverse(&s2)],
            alpha,
            gauge,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Gauge-frame spectra of both components.
    pub fn spectra(&self) -> [Vec<Complex64>; 2] {
        [self.grid.forward(&self.phi[0]), self.grid.forward(&self.phi[1])]
    }

    /// `‖Φ‖²_ℋ = ‖φ₁‖² + ‖φ₂‖²` with grid weights; the gauge phase has modulus one.
    pub fn norm_sqr(&self) -> f64 {
        let cell = self.grid.cell();
        self.phi.iter().map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn component_norm(&self, k: usize) -> f64 {
        (self.phi[k].iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell()).sqrt()
    }

    pub fn tail_mass(&self) -> f64 {
        let [s1, s2] = self.spectra();
        self.grid.tail_mass(&[&s1, &s2])
    }

    /// Physical position-space values `e^{i g·x} φ(x)`.
    pub fn physical(&self) -> [Vec<Complex64>; 2] {
        let phase: Vec<Complex64> = (0..self.grid.len())
            .map(|i| {
                let x = self.grid.position(i);
                Complex64::from_polar(1.0, self.gauge[0] * x[0] + self.gauge[1] * x[1])
            })
            .collect();
        let apply = |c: &Vec<Complex64>| c.iter().zip(&phase).map(|(v, p)| v * p).collect();
        [apply(&self.phi[0]), apply(&self.phi[1])]
    }

    /// Binary container: `KGSS`, an endianness byte (`L`/`B`), `n`, `N` per axis,
    /// `X`, `α` (NaN when raw), the gauge vector, then interleaved
    /// real/imaginary parts of `φ₁` followed by `φ₂`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(b"KGSS")?;
        w.write_u8(b'L')?;
        w.write_u32::<LittleEndian>(self.grid.dim as u32)?;
        for _ in 0..self.grid.dim {
            w.write_u32::<LittleEndian>(self.grid.points as u32)?;
        }
        w.write_f64::<LittleEndian>(self.grid.half_width)?;
        w.write_f64::<LittleEndian>(self.alpha.unwrap_or(f64::NAN))?;
        for a in 0..self.grid.dim {
            w.write_f64::<LittleEndian>(self.gauge[a])?;
        }
        for comp in &self.phi {
            for v in comp {
                w.write_f64::<LittleEndian>(v.re)?;
                w.write_f64::<LittleEndian>(v.im)?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> io::Result<Self> {
        let invalid = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"KGSS" {
            return Err(invalid("not a KGSS container"));
        }
        match r.read_u8()? {
            b'L' => Self::read_body::<LittleEndian, R>(r),
            b'B' => Self::read_body::<BigEndian, R>(r),
            _ => Err(invalid("unknown endianness tag")),
        }
    }

    fn read_body<E: byteorder::ByteOrder, R: Read>(mut r: R) -> io::Result<Self> {
        let invalid = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
        let dim = r.read_u32::<E>()? as usize;
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(invalid(format!("dimension {dim}")));
        }
        let mut points = Vec::with_capacity(dim);
        for _ in 0..dim {
            points.push(r.read_u32::<E>()? as usize);
        }
        if points.iter().any(|p| *p != points[0]) {
            return Err(invalid("axes must share a point count".into()));
        }
        let half_width = r.read_f64::<E>()?;
        let grid = Grid::new(dim, points[0], half_width).map_err(|e| invalid(e.to_string()))?;
        let alpha = r.read_f64::<E>()?;
        let mut gauge = [0.0; MAX_DIM];
        for g in gauge.iter_mut().take(dim) {
            *g = r.read_f64::<E>()?;
        }
        let mut phi = [Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len())];
        for comp in phi.iter_mut() {
            for _ in 0..grid.len() {
                let re = r.read_f64::<E>()?;
                let im = r.read_f64::<E>()?;
                comp.push(Complex64::new(re, im));
            }
        }
        Ok(Self {
            grid,
            phi,
            alpha: (!alpha.is_nan()).then_some(alpha),
            gauge,
        })
    }

    /// Physical values as CSV rows `x[, y], re1, im1, re2, im2`.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["x"];
        if self.grid.dim == 2 {
            header.push("y");
        }
        header.extend(["re1", "im1", "re2", "im2"]);
        w.write_record(&header)?;
        let [p1, p2] = self.physical();
        for i in 0..self.grid.len() {
            let x = self.grid.position(i);
            let mut row: Vec<String> = (0..self.grid.dim).map(|a| format!("{:.17e}", x[a])).collect();
            for v in [p1[i].re, p1[i].im, p2[i].re, p2[i].im] {
                row.push(format!("{v:.17e}"));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
