//! Base-state families for the DDE solver.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::mesh::FemMesh;
use crate::error::{Error, Result};
use crate::kernel::PeriodicGrid;
use crate::petviashvili::{gaussian_seed, pv_basic, PvConfig};
use crate::profile::{cubic_interp, BaseState, Provenance};

/// Standard deviation of the Gaussian mollifier applied to the kinked
/// families (`sine`, `hat`).
pub const SMOOTHING_WIDTH: f64 = 0.2;

/// Analytic or Petviashvili-derived base states, sampled at Gauss points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BaseFamily {
    /// Petviashvili profile `f = -g` with `g = K(g^2)/2`.
    Pv,
    /// `alpha * PV + shift`.
    ScaledPv { alpha: f64, shift: f64 },
    /// `gamma * exp(-x^2/2) / sqrt(2 pi)`.
    Gaussian { gamma: f64 },
    /// `sin(omega x)` on `(-2 pi, 2 pi)`, zero outside, smoothed.
    Sine { omega: f64 },
    /// Hat of height `height` supported on `(-5, 5)`, smoothed.
    Hat { height: f64 },
    /// `slope * x`.
    Linear { slope: f64 },
}

/// Petviashvili profile on a fine periodic grid, interpolated on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct PvReference {
    grid: PeriodicGrid,
    g: Vec<f64>,
}

impl PvReference {
    /// Iterates from the standard Gaussian on a `[-half_length, half_length)`
    /// grid with `n` points until the residual falls below `1e-13`.
    pub fn compute(half_length: f64, n: usize) -> Result<Self> {
        let grid = PeriodicGrid::new(half_length, n)?;
        let cfg = PvConfig { residual_tol: Some(1e-13), max_iters: 2000, ..PvConfig::default() };
        let out = pv_basic(&gaussian_seed(&grid), &grid, &cfg)?;
        if !out.converged() {
            return Err(Error::DegenerateIterate(format!(
                "Petviashvili reference did not converge ({:?})",
                out.status
            )));
        }
        Ok(Self { grid, g: out.g })
    }

    /// Primal value `f = -g` at `x`.
    pub fn f(&self, x: f64) -> f64 {
        -cubic_interp(&self.g, -self.grid.half_length(), self.grid.spacing(), true, x)
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }
}

/// Reference on `L = 25` with `h = 1/80`.
pub fn pv_reference() -> Result<PvReference> {
    PvReference::compute(25.0, 4000)
}

fn mollify(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    // composite Simpson over ±6 sigma
    let n = 480;
    let half = 6.0 * SMOOTHING_WIDTH;
    let h = 2.0 * half / n as f64;
    let norm = 1.0 / (SMOOTHING_WIDTH * (2.0 * PI).sqrt());
    let mut acc = 0.0;
    for k in 0..=n {
        let y = -half + k as f64 * h;
        let wk = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let phi = norm * (-0.5 * (y / SMOOTHING_WIDTH).powi(2)).exp();
        acc += wk * phi * f(x - y);
    }
    acc * h / 3.0
}

fn sine(omega: f64, x: f64) -> f64 {
    if x.abs() < 2.0 * PI {
        (omega * x).sin()
    } else {
        0.0
    }
}

fn hat(height: f64, x: f64) -> f64 {
    if x > 0.0 && x <= 5.0 {
        -(x - 5.0) * height
    } else if x > -5.0 && x <= 0.0 {
        (x + 5.0) * height
    } else {
        0.0
    }
}

impl BaseFamily {
    pub fn provenance(&self) -> Provenance {
        match self {
            BaseFamily::Pv | BaseFamily::ScaledPv { .. } => Provenance::Petviashvili,
            _ => Provenance::Analytic,
        }
    }

    /// Samples the family at `x`. Petviashvili families need `pv`.
    pub fn sample(&self, x: &[f64], pv: Option<&PvReference>) -> Result<Vec<f64>> {
        let need_pv = || pv.ok_or_else(|| Error::InvalidInput("Petviashvili reference required".into()));
        Ok(match *self {
            BaseFamily::Pv => {
                let pv = need_pv()?;
                x.iter().map(|&x| pv.f(x)).collect()
            }
            BaseFamily::ScaledPv { alpha, shift } => {
                let pv = need_pv()?;
                x.iter().map(|&x| alpha * pv.f(x) + shift).collect()
            }
            BaseFamily::Gaussian { gamma } => {
                let c = gamma / (2.0 * PI).sqrt();
                x.iter().map(|&x| c * (-0.5 * x * x).exp()).collect()
            }
            BaseFamily::Sine { omega } => x.iter().map(|&x| mollify(|y| sine(omega, y), x)).collect(),
            BaseFamily::Hat { height } => x.iter().map(|&x| mollify(|y| hat(height, y), x)).collect(),
            BaseFamily::Linear { slope } => x.iter().map(|&x| slope * x).collect(),
        })
    }
}

/// Base state at every Gauss point of `mesh`. The Petviashvili reference is
/// computed only when the family needs it.
pub fn base_state(mesh: &FemMesh, family: &BaseFamily) -> Result<BaseState> {
    let pv = match family {
        BaseFamily::Pv | BaseFamily::ScaledPv { .. } => Some(pv_reference()?),
        _ => None,
    };
    Ok(BaseState::new(family.sample(&mesh.gauss_points(), pv.as_ref())?, family.provenance()))
}
