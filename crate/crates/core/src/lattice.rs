//! Periodic real-space lattice, its Fourier grid, and the discrete
//! transforms, norms and distances defined on them.
//!
//! The real-space lattice is `X = {x_i = i Δx, i = 0..N}` on `[0, L)`. The
//! Fourier grid is `K = {n Δk, n = -N/2+1 ..= N/2}` with `Δk = 2π/L`. A
//! [`SpectralFunction`] stores its samples with `n` ascending, so storage
//! position `p` holds wavenumber index `n = p - N/2 + 1`.
//!
//! Transforms carry the continuum normalization
//!
//! ```text
//! f̂_k  = Δx Σ_x e^{-ikx} f(x)
//! f(x) = (1/L) Σ_k e^{ikx} f̂_k
//! ```
//!
//! under which `‖f̂‖²_{L²(K)} = 2π ‖f‖²_{L²(X)}`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    length: f64,
    points: usize,
}

impl GridSpec {
    /// Builds the lattice with `points` equispaced nodes on `[0, length)`.
    pub fn new(length: f64, points: usize) -> Result<Self> {
        if !length.is_finite() || length < 1.0 {
            return Err(Error::invalid(
                "L",
                format!("must be finite and ≥ 1, got {length}"),
            ));
        }
        if points < 4 || !points.is_multiple_of(2) {
            return Err(Error::invalid(
                "N",
                format!("must be even and ≥ 4, got {points}"),
            ));
        }
        if length / points as f64 > 1.0 {
            return Err(Error::invalid(
                "dx",
                format!("L/N = {} exceeds 1", length / points as f64),
            ));
        }
        Ok(Self { length, points })
    }

    /// Builds the lattice from a spacing; `length / dx` must be an even integer.
    pub fn from_spacing(length: f64, dx: f64) -> Result<Self> {
        if !dx.is_finite() || dx <= 0.0 {
            return Err(Error::invalid("dx", format!("must be positive, got {dx}")));
        }
        let ratio = length / dx;
        let points = ratio.round();
        if (ratio - points).abs() > 1e-8 * ratio.max(1.0) {
            return Err(Error::invalid(
                "dx",
                format!("L/dx = {ratio} is not an integer"),
            ));
        }
        Self::new(length, points as usize)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> f64 {
        self.length / self.points as f64
    }

    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Edge of the Fourier grid, `k_c = (N/2) Δk = π/Δx`.
    pub fn kc(&self) -> f64 {
        (self.points / 2) as f64 * self.dk()
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.x(i)).collect()
    }

    /// Wavenumber index `n` stored at canonical position `pos`.
    pub fn wavenumber_index(&self, pos: usize) -> i64 {
        pos as i64 - (self.points / 2) as i64 + 1
    }

    /// Canonical storage position of wavenumber index `n`, folded into `K`.
    pub fn position_of(&self, n: i64) -> usize {
        let big_n = self.points as i64;
        (n + big_n / 2 - 1).rem_euclid(big_n) as usize
    }

    pub fn k(&self, pos: usize) -> f64 {
        self.wavenumber_index(pos) as f64 * self.dk()
    }

    /// All wavenumbers of `K` in canonical (ascending) order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.points).map(|p| self.k(p)).collect()
    }

    /// Lattice index nearest to `x`, provided `x` is a grid point.
    pub fn grid_index(&self, x: f64) -> Option<usize> {
        let t = x / self.dx();
        let i = t.round();
        if (t - i).abs() > 1e-8 || i < 0.0 || i >= self.points as f64 {
            return None;
        }
        Some(i as usize)
    }

    // FFT slot j (0..N, rustfft order) for canonical position p.
    fn fft_slot(&self, pos: usize) -> usize {
        self.wavenumber_index(pos).rem_euclid(self.points as i64) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L2,
    Linf,
}

/// Complex samples `f(x_i)` on the lattice `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl LatticeFunction {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::invalid(
                "values",
                format!("expected {} samples, got {}", grid.n(), values.len()),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.n()).map(|i| f(grid.x(i))).collect();
        Self { grid, values }
    }

    pub fn from_real(grid: GridSpec, values: &[f64]) -> Result<Self> {
        Self::new(
            grid,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    /// Discrete Dirac delta `e_index / Δx` located at `x_index`.
    pub fn delta(grid: GridSpec, index: usize) -> Self {
        let mut f = Self::zeros(grid);
        f.values[index % grid.n()] = Complex64::new(1.0 / grid.dx(), 0.0);
        f
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Value at lattice index `i`, read periodically.
    pub fn at(&self, i: i64) -> Complex64 {
        self.values[i.rem_euclid(self.grid.n() as i64) as usize]
    }

    /// Circular shift: `result(x_i) = self(x_{i - shift})`.
    pub fn shifted(&self, shift: i64) -> Self {
        let values = (0..self.grid.n() as i64)
            .map(|i| self.at(i - shift))
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::L2 => (self.grid.dx() * sum_sq(&self.values)).sqrt(),
            NormKind::Linf => max_abs(&self.values),
        }
    }

    pub fn dft(&self) -> SpectralFunction {
        let grid = self.grid;
        let mut buf = self.values.clone();
        plan(grid.n(), FftDirection::Forward).process(&mut buf);
        let dx = grid.dx();
        let values = (0..grid.n()).map(|p| buf[grid.fft_slot(p)] * dx).collect();
        SpectralFunction { grid, values }
    }
}

/// Complex samples `f̂_k` on the Fourier grid `K`, canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl SpectralFunction {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::invalid(
                "values",
                format!("expected {} samples, got {}", grid.n(), values.len()),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.n()).map(|p| f(grid.k(p))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Value at wavenumber index `n`, folded periodically into `K`.
    pub fn at(&self, n: i64) -> Complex64 {
        self.values[self.grid.position_of(n)]
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::L2 => (self.grid.dk() * sum_sq(&self.values)).sqrt(),
            NormKind::Linf => max_abs(&self.values),
        }
    }

    pub fn idft(&self) -> LatticeFunction {
        let grid = self.grid;
        let mut buf = vec![Complex64::new(0.0, 0.0); grid.n()];
        for (p, &v) in self.values.iter().enumerate() {
            buf[grid.fft_slot(p)] = v;
        }
        plan(grid.n(), FftDirection::Inverse).process(&mut buf);
        let scale = 1.0 / grid.length();
        buf.iter_mut().for_each(|v| *v *= scale);
        LatticeFunction { grid, values: buf }
    }
}

fn sum_sq(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm_sqr()).sum()
}

fn max_abs(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction))
}

/// Periodic distance `min_k |x - y - kL|`, in `[0, L/2]`.
pub fn periodic_distance(x: f64, y: f64, length: f64) -> f64 {
    let r = (x - y).rem_euclid(length);
    r.min(length - r)
}

/// Twice-differentiable regularization of the periodic distance, with its
/// first and second derivatives in `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifiedDistance {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// `d_L(x, y) = d_max - ([d_max - (d̃² + 1)^{1/2}]² + 1)^{1/2}` with
/// `d_max = (L²/4 + 1)^{1/2}`, where `d̃` is the periodic distance.
pub fn mollified_distance(x: f64, y: f64, length: f64) -> MollifiedDistance {
    let d_max = (length * length / 4.0 + 1.0).sqrt();
    let r = (x - y).rem_euclid(length);
    // Left branch runs on [0, L/2), mirrored branch on [L/2, L).
    let (s, sign) = if r < length / 2.0 {
        (r, 1.0)
    } else {
        (length - r, -1.0)
    };
    let u = d_max - (s * s + 1.0).sqrt();
    let phi = |t: f64| t / (t * t + 1.0).sqrt();
    let dphi = |t: f64| (t * t + 1.0).powf(-1.5);
    MollifiedDistance {
        value: d_max - (u * u + 1.0).sqrt(),
        d1: sign * phi(s) * phi(u),
        d2: dphi(s) * phi(u) - phi(s) * phi(s) * dphi(u),
    }
}
