//! Petviashvili iteration for the profile integral equation.
//!
//! With `w = -g` the equation `w + u K w + K(w^2)/2 = 0` becomes
//! `g = (I + u K)^{-1} K(g^2 / 2)`. Each sweep applies the right-hand side,
//! rescales by `C = ∫g / ∫g~` raised to the power `q`, and stops once `C`
//! is within `tol_c` of one. For `u = 0` this is the plain scheme
//! `g~ = K(g^2)/2`.
//!
//! The classical optimal exponent for a quadratic nonlinearity is `q = 2`;
//! the default `q = 1.4` is kept for every `u`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{KOperator, PeriodicGrid};
use crate::profile::WaveProfile;
use crate::verify::nie_residual_with;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PvConfig {
    pub q: f64,
    pub tol_c: f64,
    pub max_iters: usize,
    /// When set, convergence also requires the residual sup-norm to fall
    /// below this value.
    pub residual_tol: Option<f64>,
    /// Residual growth factor over the input that is reported as unstable.
    pub divergence_factor: f64,
}

impl Default for PvConfig {
    fn default() -> Self {
        Self { q: 1.4, tol_c: 1e-6, max_iters: 200, residual_tol: None, divergence_factor: 10.0 }
    }
}

impl PvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 1.0 && self.q <= 2.0) {
            return Err(Error::InvalidInput(format!("q = {} must lie in (1, 2]", self.q)));
        }
        if !(self.tol_c > 0.0) || !(self.divergence_factor > 1.0) {
            return Err(Error::InvalidInput("tol_c and divergence_factor must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PvStatus {
    Converged,
    MaxIters,
    /// The residual exceeded `divergence_factor` times its input value.
    Unstable { iteration: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvOutcome {
    /// Returned iterate `g`.
    pub g: Vec<f64>,
    /// The profile `f = u - g` with `w = -g`.
    pub profile: WaveProfile,
    pub c_history: Vec<f64>,
    /// Residual sup-norm of the input followed by one entry per sweep.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub status: PvStatus,
}

impl PvOutcome {
    pub fn converged(&self) -> bool {
        self.status == PvStatus::Converged
    }

    pub fn residual(&self) -> f64 {
        let min = self.residual_history.iter().copied().fold(f64::INFINITY, f64::min);
        match self.status {
            PvStatus::Converged => *self.residual_history.last().unwrap_or(&min),
            _ => min,
        }
    }
}

/// Plain scheme `g~ = K(g^2)/2` (the case `u = 0`).
pub fn pv_basic(g0: &[f64], grid: &PeriodicGrid, config: &PvConfig) -> Result<PvOutcome> {
    iterate(g0, 0.0, &KOperator::new(grid), config)
}

/// Preconditioned scheme `g~ = (I + u K)^{-1} K(g^2 / 2)`, seeded with
/// `w0`, i.e. `g0 = -w0`.
pub fn pv_nie(w0: &[f64], u_inf: f64, grid: &PeriodicGrid, config: &PvConfig) -> Result<PvOutcome> {
    let g0: Vec<f64> = w0.iter().map(|w| -w).collect();
    iterate(&g0, u_inf, &KOperator::new(grid), config)
}

fn residual_of(g: &[f64], u_inf: f64, op: &KOperator) -> f64 {
    let w: Vec<f64> = g.iter().map(|v| -v).collect();
    nie_residual_with(&w, u_inf, op).1
}

/// Runs the iteration on a prepared operator. Non-convergence is reported in
/// the status; when not converged the lowest-residual iterate is returned.
pub fn iterate(g0: &[f64], u_inf: f64, op: &KOperator, config: &PvConfig) -> Result<PvOutcome> {
    config.validate()?;
    let grid = op.grid();
    if g0.len() != grid.len() {
        return Err(Error::InvalidInput("seed length must match the grid".into()));
    }
    let sum0: f64 = g0.iter().sum();
    if sum0 == 0.0 || !sum0.is_finite() {
        return Err(Error::InvalidInput("seed must have nonzero finite integral".into()));
    }
    let mut g = g0.to_vec();
    let r_in = residual_of(&g, u_inf, op);
    let mut residuals = vec![r_in];
    let mut c_history = Vec::new();
    let (mut best, mut best_r) = (g.clone(), r_in);
    let mut status = PvStatus::MaxIters;
    let mut iterations = 0;
    for it in 1..=config.max_iters {
        iterations = it;
        let half_sq: Vec<f64> = g.iter().map(|v| 0.5 * v * v).collect();
        let gt = op.apply_resolvent_k(&half_sq, u_inf)?;
        let st: f64 = gt.iter().sum();
        if st == 0.0 || !st.is_finite() {
            return Err(Error::DegenerateIterate(format!("integral of the update vanished at sweep {it}")));
        }
        let c = g.iter().sum::<f64>() / st;
        let scale = c.powf(config.q);
        if !scale.is_finite() {
            return Err(Error::DegenerateIterate(format!("amplitude factor {c} at sweep {it}")));
        }
        g = gt.iter().map(|v| scale * v).collect();
        c_history.push(c);
        let r = residual_of(&g, u_inf, op);
        residuals.push(r);
        if r < best_r {
            best_r = r;
            best.clone_from(&g);
        }
        let c_ok = (c - 1.0).abs() < config.tol_c;
        let r_ok = config.residual_tol.is_none_or(|t| r <= t);
        if c_ok && r_ok {
            status = PvStatus::Converged;
            break;
        }
        if !r.is_finite() || r > config.divergence_factor * r_in {
            status = PvStatus::Unstable { iteration: it };
            break;
        }
    }
    if status != PvStatus::Converged {
        g = best;
    }
    let x = grid.points();
    let f = g.iter().map(|v| u_inf - v).collect();
    Ok(PvOutcome {
        profile: WaveProfile::new(x, f, u_inf, -0.5),
        g,
        c_history,
        residual_history: residuals,
        iterations,
        status,
    })
}

/// The standard Gaussian `exp(-x^2/2)/sqrt(2 pi)` on the grid, the usual seed.
pub fn gaussian_seed(grid: &PeriodicGrid) -> Vec<f64> {
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    grid.points().iter().map(|x| norm * (-0.5 * x * x).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_is_fixed_point() {
        let grid = PeriodicGrid::new(5.0, 100).unwrap();
        let out = pv_basic(&vec![1.0; 100], &grid, &PvConfig::default()).unwrap();
        assert!(out.converged());
        assert_eq!(out.iterations, 1);
        assert!((out.c_history[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_seed_converges() {
        let grid = PeriodicGrid::new(25.0, 1000).unwrap();
        let out = pv_basic(&gaussian_seed(&grid), &grid, &PvConfig::default()).unwrap();
        assert!(out.converged(), "{:?}", out.status);
        assert!(out.iterations <= 60);
        assert!(out.residual() < 1e-6);
        // symmetric single hump centred at the origin
        let j0 = grid.origin_index();
        assert!(out.g[j0] > 0.0);
        assert!((out.g[j0 + 7] - out.g[j0 - 7]).abs() < 1e-12);
    }

    #[test]
    fn zero_seed_rejected() {
        let grid = PeriodicGrid::new(5.0, 100).unwrap();
        assert!(pv_basic(&vec![0.0; 100], &grid, &PvConfig::default()).is_err());
    }

    #[test]
    fn nie_scheme_at_zero_matches_plain() {
        let grid = PeriodicGrid::new(10.0, 400).unwrap();
        let seed = gaussian_seed(&grid);
        let cfg = PvConfig { max_iters: 5, ..PvConfig::default() };
        let a = pv_basic(&seed, &grid, &cfg).unwrap();
        let w0: Vec<f64> = seed.iter().map(|v| -v).collect();
        let b = pv_nie(&w0, 0.0, &grid, &cfg).unwrap();
        assert_eq!(a.c_history, b.c_history);
    }

    #[test]
    fn scale_of_seed_is_absorbed() {
        let grid = PeriodicGrid::new(25.0, 1000).unwrap();
        let cfg = PvConfig { residual_tol: Some(1e-12), max_iters: 400, ..PvConfig::default() };
        let seed = gaussian_seed(&grid);
        let base = pv_basic(&seed, &grid, &cfg).unwrap();
        for beta in [0.5, 2.0] {
            let s: Vec<f64> = seed.iter().map(|v| beta * v).collect();
            let out = pv_basic(&s, &grid, &cfg).unwrap();
            assert!(out.converged());
            let d = out.g.iter().zip(&base.g).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(d < 1e-10, "beta {beta}: {d}");
        }
    }
}
