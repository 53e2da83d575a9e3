//! Data types shared by the solvers: sampled profiles, base states and
//! solver reports.

use serde::{Deserialize, Serialize};

/// A sampled wave profile `f(x)` with its far-field value and wave speed.
///
/// Profiles produced by the dual solvers are normalized to speed `c = -1/2`;
/// [`crate::lattice::rescale_profile`] maps them to other speeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveProfile {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub u_inf: f64,
    pub c: f64,
}

impl WaveProfile {
    pub fn new(x: Vec<f64>, f: Vec<f64>, u_inf: f64, c: f64) -> Self {
        debug_assert_eq!(x.len(), f.len());
        Self { x, f, u_inf, c }
    }

    /// Perturbation `w = f - u_inf`.
    pub fn w(&self) -> Vec<f64> {
        self.f.iter().map(|f| f - self.u_inf).collect()
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    /// Uniform spacing of the sample points, if the grid is uniform.
    pub fn spacing(&self) -> Option<f64> {
        if self.x.len() < 2 {
            return None;
        }
        let h = self.x[1] - self.x[0];
        let uniform = self
            .x
            .windows(2)
            .all(|p| ((p[1] - p[0]) - h).abs() <= 1e-9 * h.abs().max(1.0));
        uniform.then_some(h)
    }
}

/// Where a base state came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Petviashvili,
    PreviousSolution,
    Analytic,
}

/// Base-state samples: Gauss-point values for the DDE solver, grid values
/// for the NIE solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseState {
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl BaseState {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Self {
        Self { values, provenance }
    }
}

/// Iteration record of a dual solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub iterations: usize,
    pub resets: usize,
    pub alpha_halvings: usize,
    pub residual_history: Vec<f64>,
    pub alpha_history: Vec<f64>,
    pub converged: bool,
    pub status: String,
    pub wall_time_s: f64,
}

/// Cubic Lagrange interpolation on uniformly spaced samples `values[k]`
/// located at `x0 + k h`. When `periodic` is set the samples are treated as
/// one period of length `n h`; otherwise the stencil is clamped to the data.
pub fn cubic_interp(values: &[f64], x0: f64, h: f64, periodic: bool, x: f64) -> f64 {
    let n = values.len();
    debug_assert!(n >= 4);
    let s = (x - x0) / h;
    let base = s.floor();
    let t = s - base;
    let base = base as i64;
    let at = |k: i64| -> f64 {
        if periodic {
            values[k.rem_euclid(n as i64) as usize]
        } else {
            values[k.clamp(0, n as i64 - 1) as usize]
        }
    };
    let (i0, t) = if periodic {
        (base - 1, t)
    } else {
        // keep the four-point stencil inside the data
        let i0 = (base - 1).clamp(0, n as i64 - 4);
        (i0, s - i0 as f64 - 1.0)
    };
    let (p0, p1, p2, p3) = (at(i0), at(i0 + 1), at(i0 + 2), at(i0 + 3));
    // Lagrange basis on nodes -1, 0, 1, 2
    let l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    let l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    let l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    let l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
    p0 * l0 + p1 * l1 + p2 * l2 + p3 * l3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_reproduces_cubics() {
        let h = 0.25;
        let xs: Vec<f64> = (0..12).map(|k| -1.0 + k as f64 * h).collect();
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x - 0.3 * x * x * x;
        let v: Vec<f64> = xs.iter().map(|&x| p(x)).collect();
        for &x in &[-1.0, -0.9, 0.13, 1.2, 1.74] {
            assert!((cubic_interp(&v, -1.0, h, false, x) - p(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_interp_wraps() {
        let n = 64;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let v: Vec<f64> = (0..n).map(|k| (k as f64 * h).sin()).collect();
        let x = 2.0 * std::f64::consts::PI - 0.3 * h;
        assert!((cubic_interp(&v, 0.0, h, true, x) - x.sin()).abs() < 1e-5);
    }

    #[test]
    fn spacing_detects_uniform() {
        let p = WaveProfile::new(vec![0.0, 0.5, 1.0], vec![0.0; 3], 0.0, -0.5);
        assert_eq!(p.spacing(), Some(0.5));
        let q = WaveProfile::new(vec![0.0, 0.5, 1.2], vec![0.0; 3], 0.0, -0.5);
        assert_eq!(q.spacing(), None);
    }
}
