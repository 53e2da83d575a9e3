use crate::error::{Error, Result};

/// Two-point Gauss-Legendre abscissae on the reference element `[0, 1]`.
pub const GAUSS_POINTS: [f64; 2] = [
    0.5 - 0.288_675_134_594_812_9,
    0.5 + 0.288_675_134_594_812_9,
];
/// Matching weights on `[0, 1]`.
pub const GAUSS_WEIGHTS: [f64; 2] = [0.5, 0.5];

/// Uniform linear-element mesh of the extended domain `(-L-2, L+2)`.
///
/// Nodes are `x_i = -L - 2 + i dx`, `i = 0..=m`. Element `e` spans
/// `[x_e, x_{e+1}]` and carries Gauss points `g = 2e + q`, `q = 0, 1`.
/// Because `1/dx` is an integer `s`, a shift by `±1` maps element `e` to
/// element `e ± s` with the same local Gauss index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FemMesh {
    half_length: f64,
    m: usize,
    dx: f64,
    s: usize,
}

impl FemMesh {
    pub fn new(half_length: f64, m: usize) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidMesh(format!("half-length {half_length} must be positive")));
        }
        if m < 20 {
            return Err(Error::InvalidMesh(format!("need at least 20 elements, got {m}")));
        }
        let dx = (2.0 * half_length + 4.0) / m as f64;
        let inv = 1.0 / dx;
        let s = inv.round();
        if s < 1.0 || (inv - s).abs() > 1e-9 * inv {
            return Err(Error::InvalidMesh(format!("1/dx = {inv} is not a positive integer")));
        }
        let s = s as usize;
        if m <= 4 * s {
            return Err(Error::InvalidMesh("mesh has no interior nodes".into()));
        }
        Ok(Self { half_length, m, dx, s })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn elements(&self) -> usize {
        self.m
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Elements per unit length, `1/dx`.
    pub fn steps_per_unit(&self) -> usize {
        self.s
    }

    pub fn node_count(&self) -> usize {
        self.m + 1
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_length - 2.0 + i as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.m).map(|i| self.node(i)).collect()
    }

    /// Node indices with `x` strictly inside `(-L, L)`.
    pub fn interior_nodes(&self) -> std::ops::RangeInclusive<usize> {
        2 * self.s + 1..=self.m - 2 * self.s - 1
    }

    pub fn interior_count(&self) -> usize {
        self.m - 4 * self.s - 1
    }

    /// Node indices with `x` in the closed interval `[-L, L]`.
    pub fn domain_nodes(&self) -> std::ops::RangeInclusive<usize> {
        2 * self.s..=self.m - 2 * self.s
    }

    /// Elements covering `(-L, L)`.
    pub fn domain_elements(&self) -> std::ops::Range<usize> {
        2 * self.s..self.m - 2 * self.s
    }

    /// Elements covering `(-L-1, L+1)`.
    pub fn shifted_elements(&self) -> std::ops::Range<usize> {
        self.s..self.m - self.s
    }

    pub fn gauss_count(&self) -> usize {
        2 * self.m
    }

    pub fn gauss_point(&self, e: usize, q: usize) -> f64 {
        self.node(e) + GAUSS_POINTS[q] * self.dx
    }

    pub fn gauss_points(&self) -> Vec<f64> {
        (0..self.m).flat_map(|e| (0..2).map(move |q| (e, q))).map(|(e, q)| self.gauss_point(e, q)).collect()
    }

    /// Linear shape-function values `(N_left, N_right)` at local Gauss index `q`.
    pub fn shape(q: usize) -> (f64, f64) {
        let t = GAUSS_POINTS[q];
        (1.0 - t, t)
    }
}
