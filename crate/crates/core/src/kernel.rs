//! The unit-width convolution operator `K nu(x) = ∫_{x-1}^{x+1} nu(y) dy`
//! on a uniform periodic grid, its Fourier symbol and related spectral
//! quantities.
//!
//! On a grid with spacing `h = 1/s` the integral is replaced by the
//! trapezoid rule, which gives a symmetric circulant stencil with weight
//! `h` at offsets `|m| < s` and `h/2` at `|m| = s`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Symbol values with `|1 + u sigma_k|` below this are treated as singular.
pub const SINGULAR_SYMBOL_TOL: f64 = 1e-10;

/// Uniform periodic grid `x_j = -L + j h`, `j = 0..N-1`, `h = 2L/N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    half_length: f64,
    n: usize,
    h: f64,
    steps_per_unit: usize,
}

impl PeriodicGrid {
    pub fn new(half_length: f64, n: usize) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidGrid(format!("half-length {half_length} must be positive")));
        }
        if n < 4 {
            return Err(Error::InvalidGrid(format!("need at least 4 points, got {n}")));
        }
        let h = 2.0 * half_length / n as f64;
        if h > 1.0 + 1e-12 {
            return Err(Error::InvalidGrid(format!("spacing {h} does not resolve the unit kernel")));
        }
        let inv = 1.0 / h;
        let s = inv.round();
        if (inv - s).abs() > 1e-9 * inv {
            return Err(Error::InvalidGrid(format!("1/h = {inv} is not an integer")));
        }
        Ok(Self { half_length, n, h, steps_per_unit: s as usize })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Number of grid steps per unit length (`1/h`).
    pub fn steps_per_unit(&self) -> usize {
        self.steps_per_unit
    }

    pub fn point(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.h
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Index of the grid point at `x = 0`.
    pub fn origin_index(&self) -> usize {
        self.n / 2
    }

    /// Physical wavenumber `k pi / L` of FFT index `k` (signed frequency).
    pub fn wavenumber(&self, k: usize) -> f64 {
        let kk = if k <= self.n / 2 { k as f64 } else { k as f64 - self.n as f64 };
        kk * PI / self.half_length
    }

    fn stencil(&self) -> Vec<(isize, f64)> {
        let s = self.steps_per_unit as isize;
        (-s..=s)
            .map(|m| (m, if m.abs() == s { 0.5 * self.h } else { self.h }))
            .collect()
    }
}

/// Dense realization of the trapezoid-rule operator.
#[derive(Debug, Clone, PartialEq)]
pub struct KMatrix {
    pub matrix: DMatrix<f64>,
}

impl KMatrix {
    pub fn row_sums(&self) -> Vec<f64> {
        self.matrix.row_iter().map(|r| r.iter().sum()).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.matrix == self.matrix.transpose()
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_column_slice(v);
        (&self.matrix * v).as_slice().to_vec()
    }
}

/// Assembles the `N x N` circulant matrix of the discrete operator.
pub fn build_k_matrix(grid: &PeriodicGrid) -> KMatrix {
    let n = grid.len();
    let mut matrix = DMatrix::zeros(n, n);
    for j in 0..n {
        for (m, w) in grid.stencil() {
            let col = (j as isize + m).rem_euclid(n as isize) as usize;
            matrix[(j, col)] += w;
        }
    }
    KMatrix { matrix }
}

/// FFT-backed application of `K` and `(I + u K)^{-1}` on one grid.
///
/// The plans are immutable once built, so one operator may be shared across
/// threads.
#[derive(Clone)]
pub struct KOperator {
    grid: PeriodicGrid,
    symbol: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for KOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KOperator").field("grid", &self.grid).finish_non_exhaustive()
    }
}

impl KOperator {
    pub fn new(grid: &PeriodicGrid) -> Self {
        let n = grid.len();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let mut column = vec![Complex64::new(0.0, 0.0); n];
        for (m, w) in grid.stencil() {
            column[m.rem_euclid(n as isize) as usize].re += w;
        }
        forward.process(&mut column);
        let symbol = column.iter().map(|c| c.re).collect();
        Self { grid: *grid, symbol, forward, inverse }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    /// Eigenvalues of the circulant matrix indexed by FFT mode.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    fn filter(&self, v: &[f64], multiplier: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = self.grid.len();
        assert_eq!(v.len(), n, "sample length must match the grid");
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        for (c, &s) in buf.iter_mut().zip(&self.symbol) {
            *c *= multiplier(s);
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    pub fn apply(&self, nu: &[f64]) -> Vec<f64> {
        self.filter(nu, |s| s)
    }

    fn checked_inverse_symbol(&self, u_inf: f64) -> Result<()> {
        for (k, &s) in self.symbol.iter().enumerate() {
            let d = 1.0 + u_inf * s;
            if d.abs() < SINGULAR_SYMBOL_TOL {
                return Err(Error::SingularOperator { mode: k, symbol: d });
            }
        }
        Ok(())
    }

    /// Solves `(I + u K) v = rhs` by division in Fourier space.
    pub fn solve_i_plus_uk(&self, rhs: &[f64], u_inf: f64) -> Result<Vec<f64>> {
        self.checked_inverse_symbol(u_inf)?;
        Ok(self.filter(rhs, |s| 1.0 / (1.0 + u_inf * s)))
    }

    /// Applies `(I + u K)^{-1} K` in one pass.
    pub fn apply_resolvent_k(&self, rhs: &[f64], u_inf: f64) -> Result<Vec<f64>> {
        self.checked_inverse_symbol(u_inf)?;
        Ok(self.filter(rhs, |s| s / (1.0 + u_inf * s)))
    }

    /// Spectral derivative of periodic samples.
    pub fn derivative(&self, v: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        for (k, c) in buf.iter_mut().enumerate() {
            let xi = if 2 * k == n { 0.0 } else { self.grid.wavenumber(k) };
            *c *= Complex64::new(0.0, xi);
        }
        self.inverse.process(&mut buf);
        buf.iter().map(|c| c.re / n as f64).collect()
    }
}

/// Trapezoid-rule approximation of `∫_{x_j-1}^{x_j+1} nu` with periodic wrap.
pub fn apply_k(nu: &[f64], grid: &PeriodicGrid) -> Vec<f64> {
    KOperator::new(grid).apply(nu)
}

/// Same stencil as [`apply_k`] but with `nu` extended by zero outside the grid.
pub fn apply_k0(nu: &[f64], grid: &PeriodicGrid) -> Vec<f64> {
    let n = grid.len();
    assert_eq!(nu.len(), n);
    let stencil = grid.stencil();
    (0..n)
        .map(|j| {
            stencil
                .iter()
                .filter_map(|&(m, w)| {
                    let k = j as isize + m;
                    (0..n as isize).contains(&k).then(|| w * nu[k as usize])
                })
                .sum()
        })
        .collect()
}

/// Solves `(I + u K) v = rhs` on the periodic grid.
pub fn solve_i_plus_uk(rhs: &[f64], u_inf: f64, grid: &PeriodicGrid) -> Result<Vec<f64>> {
    KOperator::new(grid).solve_i_plus_uk(rhs, u_inf)
}

pub fn sinc(xi: f64) -> f64 {
    if xi == 0.0 {
        1.0
    } else {
        xi.sin() / xi
    }
}

/// Minimizer `xi*` of `sinc` on `[pi, 2 pi]` and `sigma0 = -2 sinc(xi*)`.
///
/// The minimizer is the root of the stationarity condition
/// `xi cos xi - sin xi = 0`, which changes sign on `[pi, 3 pi / 2]`.
pub fn min_sinc() -> (f64, f64) {
    let g = |x: f64| x * x.cos() - x.sin();
    let (mut lo, mut hi) = (PI, 1.5 * PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let xi = 0.5 * (lo + hi);
    (xi, -2.0 * sinc(xi))
}

/// Extent of the real line on which `I + u K` is considered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extent {
    Infinite,
    Periodic(f64),
}

/// Decides whether `I + u K` has a bounded inverse: `1 + 2 u sinc xi != 0`
/// over the dual domain (all real `xi`, or `xi = k pi / L`).
pub fn invertibility_check(u_inf: f64, extent: Extent) -> bool {
    if u_inf == 0.0 {
        return true;
    }
    match extent {
        Extent::Infinite => {
            let (_, sigma0) = min_sinc();
            // range of 2 sinc over R is [-sigma0, 2]
            let lo = 1.0 - u_inf * sigma0;
            let hi = 1.0 + 2.0 * u_inf;
            lo * hi > 0.0 && lo.abs() > 1e-12 && hi.abs() > 1e-12
        }
        Extent::Periodic(l) => {
            let kmax = (2.0 * u_inf.abs() * l / PI).ceil() as i64 + 1;
            (0..=kmax).all(|k| (1.0 + 2.0 * u_inf * sinc(k as f64 * PI / l)).abs() > 1e-12)
        }
    }
}

/// Bottom of the continuous spectrum of `(I + u K)^2` on the line.
pub fn min_continuous_spectrum(u_inf: f64) -> f64 {
    let (_, sigma0) = min_sinc();
    if u_inf > 0.0 {
        (1.0 - sigma0 * u_inf).powi(2)
    } else {
        (1.0 + 2.0 * u_inf).powi(2)
    }
}
