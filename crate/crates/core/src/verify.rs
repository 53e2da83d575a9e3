//! Verification instruments: finite-difference residual of nodal profiles,
//! mesh-refinement differences, the integral-equation residual, gradient
//! checks, tail oscillation frequency and the KdV residual scaling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{KOperator, PeriodicGrid};
use crate::lattice::{kdv_profile_residual, KdvParams};
use crate::profile::WaveProfile;
use crate::quasi_newton::Objective;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub err_max_interior: Option<f64>,
    /// Refinement difference in percent.
    pub d_of_m: Option<f64>,
    pub nie_residual_inf: Option<f64>,
    pub tail_wavenumber: Option<f64>,
    pub notes: Vec<String>,
}

/// Minimum number of sign changes required by [`tail_wavenumber`].
pub const MIN_CROSSINGS: usize = 6;

fn uniform_spacing(p: &WaveProfile, dx: f64) -> Result<()> {
    if p.len() < 3 {
        return Err(Error::InvalidMesh("profile has fewer than 3 nodes".into()));
    }
    let tol = 1e-9 * dx.max(1.0);
    for w in p.x.windows(2) {
        if ((w[1] - w[0]) - dx).abs() > tol {
            return Err(Error::InvalidMesh(format!("node spacing {} differs from dx = {dx}", w[1] - w[0])));
        }
    }
    Ok(())
}

/// Largest centred finite-difference residual
/// `(f[A+1] - f[A-1])/(2dx) + ((f[A+s])^2 - (f[A-s])^2)/2`, `s = 1/dx`, over
/// nodes with `|x| < L - 2.5`.
pub fn fd_residual(f_nodal: &WaveProfile, dx: f64, half_length: f64) -> Result<f64> {
    if !(dx > 0.0) {
        return Err(Error::InvalidMesh(format!("dx = {dx}")));
    }
    let s_real = 1.0 / dx;
    let s = s_real.round() as usize;
    if s == 0 || (s_real - s as f64).abs() > 1e-9 * s_real {
        return Err(Error::InvalidMesh(format!("1/dx = {s_real} is not an integer")));
    }
    uniform_spacing(f_nodal, dx)?;
    let f = &f_nodal.f;
    let n = f.len();
    let edge = half_length - 2.5;
    let mut err = 0.0_f64;
    let mut any = false;
    for (a, &x) in f_nodal.x.iter().enumerate() {
        if x.abs() >= edge - 1e-12 {
            continue;
        }
        if a < s || a + s >= n {
            return Err(Error::InvalidMesh(format!("node {a} at x = {x} lacks shifted neighbours")));
        }
        let d = (f[a + 1] - f[a - 1]) / (2.0 * dx);
        let r = d + 0.5 * (f[a + s] * f[a + s] - f[a - s] * f[a - s]);
        err = err.max(r.abs());
        any = true;
    }
    if !any {
        return Err(Error::InvalidMesh("no nodes inside the residual window".into()));
    }
    Ok(err)
}

/// Largest difference between consecutive refinements at their common
/// nodes, in percent of the RMS value of `f_ref`.
pub fn refinement_diff(f_m: &WaveProfile, f_2m: &WaveProfile, f_ref: &WaveProfile) -> Result<f64> {
    if f_m.len() < 2 || f_2m.len() != 2 * f_m.len() - 1 {
        return Err(Error::InvalidMesh(format!(
            "{} and {} nodes are not consecutive refinements",
            f_m.len(),
            f_2m.len()
        )));
    }
    let h = f_2m.spacing().ok_or_else(|| Error::InvalidMesh("fine profile is not uniform".into()))?;
    let mut d = 0.0_f64;
    for (k, (&x, &v)) in f_m.x.iter().zip(&f_m.f).enumerate() {
        if (f_2m.x[2 * k] - x).abs() > 1e-9 * h {
            return Err(Error::InvalidMesh(format!("node {k} at x = {x} is not a fine node")));
        }
        d = d.max((f_2m.f[2 * k] - v).abs());
    }
    if f_ref.is_empty() {
        return Err(Error::InvalidMesh("empty reference".into()));
    }
    let rms = (f_ref.f.iter().map(|v| v * v).sum::<f64>() / f_ref.len() as f64).sqrt();
    if !(rms > 0.0) {
        return Err(Error::InvalidInput("reference has zero RMS value".into()));
    }
    Ok(100.0 * d / rms)
}

/// Residual `w + u K w + K(w^2)/2` and its sup-norm.
pub fn nie_residual(w: &[f64], u_inf: f64, grid: &PeriodicGrid) -> (Vec<f64>, f64) {
    nie_residual_with(w, u_inf, &KOperator::new(grid))
}

pub fn nie_residual_with(w: &[f64], u_inf: f64, op: &KOperator) -> (Vec<f64>, f64) {
    let inner: Vec<f64> = w.iter().map(|&v| u_inf * v + 0.5 * v * v).collect();
    let kw = op.apply(&inner);
    let rho: Vec<f64> = w.iter().zip(&kw).map(|(a, b)| a + b).collect();
    let inf = rho.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    (rho, inf)
}

/// Lobes whose peak falls below this fraction of `‖w‖∞` are treated as
/// solver noise by [`tail_wavenumber`].
pub const TAIL_NOISE_FLOOR: f64 = 1e-6;

/// Oscillation wavenumber `pi / mean crossing spacing` of `w = f - u_inf`
/// within `window`, with crossings located by linear interpolation.
///
/// Counting stops at the first lobe between crossings whose peak is below
/// `TAIL_NOISE_FLOOR ‖w‖∞`, so a decayed tail at roundoff level does not
/// contribute spurious crossings.
pub fn tail_wavenumber(profile: &WaveProfile, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::InvalidInput(format!("window ({lo}, {hi}) is empty")));
    }
    let w = profile.w();
    let floor = TAIL_NOISE_FLOOR * w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut crossings = Vec::new();
    let mut lobe_peak = 0.0_f64;
    for j in 1..w.len() {
        let (x0, x1) = (profile.x[j - 1], profile.x[j]);
        if x0 < lo || x1 > hi {
            continue;
        }
        let (a, b) = (w[j - 1], w[j]);
        lobe_peak = lobe_peak.max(a.abs());
        if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
            if !crossings.is_empty() && lobe_peak < floor {
                break;
            }
            let t = a / (a - b);
            crossings.push(x0 + t * (x1 - x0));
            lobe_peak = 0.0;
        }
    }
    if crossings.len() < MIN_CROSSINGS {
        return Err(Error::TooFewCrossings { found: crossings.len(), needed: MIN_CROSSINGS });
    }
    let mean = (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
    Ok(std::f64::consts::PI / mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    /// Largest `|g_i - fd_i|` divided by `max(‖g‖∞, 1e-300)`.
    pub max_rel_error: f64,
    /// A difference stencil point returned the penalty value.
    pub penalty_hit: bool,
}

/// Compares the analytic gradient with central differences of step `step`.
pub fn gradient_check<O: Objective + ?Sized>(obj: &O, x: &[f64], step: f64) -> Result<GradientCheck> {
    if x.len() != obj.dim() {
        return Err(Error::InvalidInput("point has the wrong dimension".into()));
    }
    if !obj.admissible(obj.value(x)) {
        return Err(Error::InvalidStart);
    }
    let g = obj.gradient(x);
    let scale = g.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut xp = x.to_vec();
    let mut worst = 0.0_f64;
    let mut penalty_hit = false;
    for i in 0..x.len() {
        xp[i] = x[i] + step;
        let fp = obj.value(&xp);
        xp[i] = x[i] - step;
        let fm = obj.value(&xp);
        xp[i] = x[i];
        if !obj.admissible(fp) || !obj.admissible(fm) {
            penalty_hit = true;
            continue;
        }
        let fd = (fp - fm) / (2.0 * step);
        worst = worst.max((g[i] - fd).abs() / scale);
    }
    Ok(GradientCheck { max_rel_error: worst, penalty_hit })
}

/// Least-squares slope of `log residual` against `log gamma` for KdV
/// profiles sampled on `x`. The leading-order theory predicts `3.5`.
pub fn kdv_residual_exponent(u_star: f64, gammas: &[f64], x: &[f64]) -> Result<f64> {
    if gammas.len() < 2 {
        return Err(Error::InvalidInput("need at least two amplitudes".into()));
    }
    let mut pts = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let r = kdv_profile_residual(KdvParams { u_star, gamma }, x)?;
        pts.push((gamma.ln(), r.ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
