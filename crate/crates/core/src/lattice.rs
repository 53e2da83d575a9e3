//! The semi-discrete Burgers lattice `du_j/dt = -(u_{j+1}^2 - u_{j-1}^2)/4`:
//! right-hand side, RK4 time stepping, the phase-speed condition, speed
//! rescaling of profiles and the KdV long-wave profile.

use crate::error::{Error, Result};
use crate::kernel::min_sinc;
use crate::profile::{cubic_interp, WaveProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    /// End values are held constant in time.
    FixedEnds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub u: Vec<f64>,
    pub boundary: Boundary,
    pub t: f64,
}

impl LatticeState {
    pub fn new(u: Vec<f64>, boundary: Boundary) -> Result<Self> {
        let state = Self { u, boundary, t: 0.0 };
        state.validate()?;
        Ok(state)
    }

    fn validate(&self) -> Result<()> {
        if self.u.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "lattice needs at least 3 sites, got {}",
                self.u.len()
            )));
        }
        if let Some(j) = self.u.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value at site {j}")));
        }
        Ok(())
    }
}

/// Parameters of the KdV approximation around a background state `u*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdvParams {
    pub u_star: f64,
    pub gamma: f64,
}

impl KdvParams {
    pub fn speed(&self) -> f64 {
        self.u_star + self.gamma
    }
}

fn rhs_into(u: &[f64], boundary: Boundary, out: &mut [f64]) {
    let n = u.len();
    for j in 1..n - 1 {
        out[j] = -0.25 * (u[j + 1] * u[j + 1] - u[j - 1] * u[j - 1]);
    }
    match boundary {
        Boundary::Periodic => {
            out[0] = -0.25 * (u[1] * u[1] - u[n - 1] * u[n - 1]);
            out[n - 1] = -0.25 * (u[0] * u[0] - u[n - 2] * u[n - 2]);
        }
        Boundary::FixedEnds => {
            out[0] = 0.0;
            out[n - 1] = 0.0;
        }
    }
}

pub fn burgers_rhs(state: &LatticeState) -> Result<Vec<f64>> {
    if state.u.len() < 3 {
        return Err(Error::InvalidInput("lattice needs at least 3 sites".into()));
    }
    let mut out = vec![0.0; state.u.len()];
    rhs_into(&state.u, state.boundary, &mut out);
    Ok(out)
}

/// Classical fourth-order Runge-Kutta integration of the lattice.
pub fn rk4_evolve(state: &LatticeState, dt: f64, steps: usize) -> Result<LatticeState> {
    state.validate()?;
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step {dt} must be positive")));
    }
    let umax = state.u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if dt * umax >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "dt * max|u| = {} violates the step guard",
            dt * umax
        )));
    }
    let n = state.u.len();
    let b = state.boundary;
    let mut u = state.u.clone();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for step in 0..steps {
        rhs_into(&u, b, &mut k1);
        for j in 0..n {
            tmp[j] = u[j] + 0.5 * dt * k1[j];
        }
        rhs_into(&tmp, b, &mut k2);
        for j in 0..n {
            tmp[j] = u[j] + 0.5 * dt * k2[j];
        }
        rhs_into(&tmp, b, &mut k3);
        for j in 0..n {
            tmp[j] = u[j] + dt * k3[j];
        }
        rhs_into(&tmp, b, &mut k4);
        for j in 0..n {
            u[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step });
        }
    }
    Ok(LatticeState { u, boundary: b, t: state.t + dt * steps as f64 })
}

/// True when `c != u_bar sinc xi` for every real `xi`, i.e. the wave speed
/// matches the phase speed of no linear harmonic wave at `u_bar`.
pub fn phase_speed_nonmatching(c: f64, u_bar: f64) -> bool {
    if u_bar == 0.0 {
        return c != 0.0;
    }
    let (xi, _) = min_sinc();
    let ratio = c / u_bar;
    let smin = xi.sin() / xi;
    !(smin..=1.0).contains(&ratio)
}

/// Maps a profile traveling at speed `profile.c` to speed `c_target`.
///
/// A solution at speed `c` is `-2 c` times the `c = -1/2` solution, so the
/// map is multiplication by `c_target / c`.
pub fn rescale_profile(profile: &WaveProfile, c_target: f64) -> Result<WaveProfile> {
    if c_target == 0.0 || !c_target.is_finite() {
        return Err(Error::InvalidInput(format!("target speed {c_target} must be nonzero")));
    }
    if profile.c == 0.0 {
        return Err(Error::InvalidInput("source profile has zero speed".into()));
    }
    let factor = c_target / profile.c;
    Ok(WaveProfile {
        x: profile.x.clone(),
        f: profile.f.iter().map(|v| v * factor).collect(),
        u_inf: profile.u_inf * factor,
        c: c_target,
    })
}

/// Samples `u* + 3 gamma sech^2(x/2 sqrt(6 gamma / u*))` at the points `x`.
pub fn kdv_profile(params: KdvParams, x: &[f64]) -> Result<WaveProfile> {
    let KdvParams { u_star, gamma } = params;
    if u_star == 0.0 {
        return Err(Error::InvalidInput("background state must be nonzero".into()));
    }
    let ratio = 6.0 * gamma / u_star;
    if ratio < 0.0 {
        return Err(Error::InvalidInput(format!(
            "gamma = {gamma} and u* = {u_star} must have the same sign"
        )));
    }
    let kappa = 0.5 * ratio.sqrt();
    let f = x
        .iter()
        .map(|&x| {
            let s = 1.0 / (kappa * x).cosh();
            u_star + 3.0 * gamma * s * s
        })
        .collect();
    Ok(WaveProfile::new(x.to_vec(), f, u_star, params.speed()))
}

/// Sup-norm residual of the KdV profile in `-c f' + (f(x+1)^2 - f(x-1)^2)/4`,
/// using the exact derivative of the sech^2 profile, over the points `x`.
pub fn kdv_profile_residual(params: KdvParams, x: &[f64]) -> Result<f64> {
    let KdvParams { u_star, gamma } = params;
    let ratio = 6.0 * gamma / u_star;
    if u_star == 0.0 || ratio < 0.0 {
        return Err(Error::InvalidInput("invalid KdV parameters".into()));
    }
    let kappa = 0.5 * ratio.sqrt();
    let f = |x: f64| {
        let s = 1.0 / (kappa * x).cosh();
        u_star + 3.0 * gamma * s * s
    };
    let df = |x: f64| {
        let s = 1.0 / (kappa * x).cosh();
        -6.0 * gamma * kappa * s * s * (kappa * x).tanh()
    };
    let c = params.speed();
    Ok(x.iter()
        .map(|&x| {
            let (fp, fm) = (f(x + 1.0), f(x - 1.0));
            (-c * df(x) + 0.25 * (fp * fp - fm * fm)).abs()
        })
        .fold(0.0, f64::max))
}

/// Sup-norm distance between lattice values `u_j` at sites `sites[j]` and the
/// profile translated by `shift`, evaluated by periodic cubic interpolation
/// on the profile's own uniform grid.
pub fn translation_error(profile: &WaveProfile, sites: &[f64], u: &[f64], shift: f64) -> Result<f64> {
    let h = profile
        .spacing()
        .ok_or_else(|| Error::InvalidInput("profile grid must be uniform".into()))?;
    if profile.len() < 4 {
        return Err(Error::InvalidInput("profile needs at least 4 samples".into()));
    }
    let x0 = profile.x[0];
    Ok(sites
        .iter()
        .zip(u)
        .map(|(&s, &v)| (v - cubic_interp(&profile.f, x0, h, true, s - shift)).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_state_is_equilibrium() {
        for b in [Boundary::Periodic, Boundary::FixedEnds] {
            let s = LatticeState::new(vec![0.7; 4], b).unwrap();
            assert!(burgers_rhs(&s).unwrap().iter().all(|&r| r == 0.0));
            let e = rk4_evolve(&s, 0.1, 25).unwrap();
            assert_eq!(e.u, s.u);
            assert!((e.t - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_rhs_arithmetic() {
        let s = LatticeState::new(vec![1.0, 2.0, 3.0, 4.0], Boundary::Periodic).unwrap();
        let r = burgers_rhs(&s).unwrap();
        assert_eq!(r[0], 3.0);
        assert_eq!(r.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn short_lattice_rejected() {
        assert!(LatticeState::new(vec![1.0, 2.0], Boundary::Periodic).is_err());
    }

    #[test]
    fn rhs_matches_linear_dispersion() {
        let n = 64;
        let xi = 2.0 * PI * 5.0 / n as f64;
        let (ubar, delta) = (0.8, 1e-6);
        let u: Vec<f64> = (0..n).map(|j| ubar + delta * (xi * j as f64).cos()).collect();
        let r = burgers_rhs(&LatticeState::new(u, Boundary::Periodic).unwrap()).unwrap();
        for (j, rj) in r.iter().enumerate() {
            let lin = delta * ubar * xi.sin() * (xi * j as f64).sin();
            assert!((rj - lin).abs() < 10.0 * delta * delta);
        }
    }

    #[test]
    fn fixed_ends_hold_values() {
        let u: Vec<f64> = (0..10).map(|j| 0.1 * j as f64).collect();
        let s = LatticeState::new(u.clone(), Boundary::FixedEnds).unwrap();
        let e = rk4_evolve(&s, 0.05, 10).unwrap();
        assert_eq!(e.u[0], u[0]);
        assert_eq!(e.u[9], u[9]);
    }

    #[test]
    fn step_guard_and_divergence() {
        let s = LatticeState::new(vec![10.0, 1.0, 1.0, 1.0], Boundary::Periodic).unwrap();
        assert!(rk4_evolve(&s, 0.2, 1).is_err());
    }

    #[test]
    fn phase_speed_cases() {
        assert!(!phase_speed_nonmatching(1.3, 1.3));
        assert!(phase_speed_nonmatching(-0.5, 1.0));
        assert!(!phase_speed_nonmatching(0.0, 0.0));
        assert!(phase_speed_nonmatching(0.3, 0.0));
        assert!(!phase_speed_nonmatching(-0.2, 1.0));
        assert!(phase_speed_nonmatching(1.2, 1.0));
    }

    #[test]
    fn rescale_identity_and_constants() {
        let x: Vec<f64> = (0..8).map(|j| j as f64).collect();
        let p = WaveProfile::new(x.clone(), vec![-1.0; 8], -1.0, -0.5);
        assert_eq!(rescale_profile(&p, -0.5).unwrap(), p);
        let c = 0.8;
        let q = rescale_profile(&p, c).unwrap();
        // -c F + 1/4 ∫_{x-1}^{x+1} F^2 = C0 with C0 = 0 for this constant
        let f = q.f[3];
        assert!((-c * f + 0.25 * 2.0 * f * f).abs() < 1e-12);
        assert!(rescale_profile(&p, 0.0).is_err());
    }

    #[test]
    fn kdv_peak_and_flat_limit() {
        let x: Vec<f64> = (-20..=20).map(|j| j as f64).collect();
        let p = kdv_profile(KdvParams { u_star: 1.0, gamma: 0.04 }, &x).unwrap();
        assert!((p.f[20] - 1.12).abs() < 1e-14);
        assert!((p.c - 1.04).abs() < 1e-14);
        let flat = kdv_profile(KdvParams { u_star: 1.0, gamma: 0.0 }, &x).unwrap();
        assert!(flat.f.iter().all(|&v| v == 1.0));
        assert!(kdv_profile(KdvParams { u_star: 1.0, gamma: -0.1 }, &x).is_err());
    }
}
