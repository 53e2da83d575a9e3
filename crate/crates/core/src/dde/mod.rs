//! Dual solver for the advance-delay profile equation
//! `f' + (f(x+1)^2 - f(x-1)^2)/2 = 0` on `(-L, L)`.
//!
//! The dual field `lambda` lives on the extended domain `(-L-2, L+2)` and
//! vanishes outside `(-L, L)`. The primal field is recovered pointwise by
//! the dual-to-primal map
//! `f = (a fbar + lambda') / (a + lambda(x-1) - lambda(x+1))`,
//! and the weak residual is driven to zero by a Newton iteration whose step
//! length keeps the denominator above `T a`.

mod assembly;
mod base;
mod mesh;
mod solve;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use assembly::{assemble_jacobian, assemble_residual, convexity_check, fhat_at_gauss, ConvexityCheck};
pub use base::{base_state, pv_reference, BaseFamily, PvReference, SMOOTHING_WIDTH};
pub use mesh::{FemMesh, GAUSS_POINTS, GAUSS_WEIGHTS};
pub use solve::{l2_project, newton_step, solve_dde, DdeSolution, DdeStatus, StepOutcome};

/// Nodal coefficients of the piecewise-linear dual field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualFieldDDE {
    pub lambda: Vec<f64>,
}

impl DualFieldDDE {
    pub fn zeros(mesh: &FemMesh) -> Self {
        Self { lambda: vec![0.0; mesh.node_count()] }
    }

    /// Builds a field from values on the interior node set, zero elsewhere.
    pub fn from_interior(mesh: &FemMesh, values: &[f64]) -> Result<Self> {
        if values.len() != mesh.interior_count() {
            return Err(Error::InvalidInput(format!(
                "expected {} interior values, got {}",
                mesh.interior_count(),
                values.len()
            )));
        }
        let mut f = Self::zeros(mesh);
        let start = *mesh.interior_nodes().start();
        f.lambda[start..start + values.len()].copy_from_slice(values);
        Ok(f)
    }

    /// Samples `g` at the interior nodes.
    pub fn from_fn(mesh: &FemMesh, g: impl Fn(f64) -> f64) -> Self {
        let mut f = Self::zeros(mesh);
        for i in mesh.interior_nodes() {
            f.lambda[i] = g(mesh.node(i));
        }
        f
    }

    pub fn interior(&self, mesh: &FemMesh) -> &[f64] {
        let r = mesh.interior_nodes();
        &self.lambda[*r.start()..=*r.end()]
    }

    pub fn validate(&self, mesh: &FemMesh) -> Result<()> {
        if self.lambda.len() != mesh.node_count() {
            return Err(Error::InvalidInput("dual field length does not match the mesh".into()));
        }
        let inside = mesh.interior_nodes();
        for (i, v) in self.lambda.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite dual value at node {i}")));
            }
            if !inside.contains(&i) && *v != 0.0 {
                return Err(Error::InvalidInput(format!("dual field nonzero outside (-L, L) at node {i}")));
            }
        }
        Ok(())
    }
}

/// Solver parameters. `plain_newton` disables the convexity test, the step
/// control and the abort test, giving the undamped Newton iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DdeConfig {
    pub a: f64,
    pub threshold: f64,
    pub tol: f64,
    pub alpha_min: f64,
    pub max_newton: usize,
    pub max_resets: usize,
    pub plain_newton: bool,
    /// Restart every Newton step at `alpha = 1` instead of carrying the
    /// reduced step length forward within a base-state epoch.
    pub alpha_reset_each_step: bool,
}

impl Default for DdeConfig {
    fn default() -> Self {
        Self {
            a: 1e6,
            threshold: 0.95,
            tol: 1e-12,
            alpha_min: 0.01,
            max_newton: 500,
            max_resets: 50,
            plain_newton: false,
            alpha_reset_each_step: false,
        }
    }
}

impl DdeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidInput(format!("a = {} must be positive", self.a)));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidInput(format!("T = {} must lie in [0, 1]", self.threshold)));
        }
        if !(self.tol > 0.0) || !(self.alpha_min > 0.0 && self.alpha_min <= 1.0) {
            return Err(Error::InvalidInput("tol and alpha_min must be positive".into()));
        }
        Ok(())
    }
}

/// Dual-to-primal map at one point.
///
/// A zero denominator with zero numerator maps to `0`; with a nonzero
/// numerator the map is undefined and `DtpSingular` is returned (with
/// `x = NaN`, since the caller alone knows the location).
pub fn dtp_map(lambda_prime: f64, lam_minus: f64, lam_plus: f64, a: f64, fbar: f64) -> Result<f64> {
    let num = a * fbar + lambda_prime;
    let den = a + lam_minus - lam_plus;
    if den == 0.0 {
        if num == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::DtpSingular { x: f64::NAN, numerator: num });
    }
    Ok(num / den)
}

/// Value and derivative of the piecewise-linear field at `x`. At a node the
/// derivative of the element to the right is returned (left at `x = L + 2`).
pub fn eval_dual_at(mesh: &FemMesh, field: &DualFieldDDE, x: f64) -> Result<(f64, f64)> {
    let lo = mesh.node(0);
    let hi = mesh.node(mesh.elements());
    if !(x >= lo - 1e-12 && x <= hi + 1e-12) {
        return Err(Error::OutOfRange { x, lo, hi });
    }
    let t = (x - lo) / mesh.dx();
    let e = (t.floor().max(0.0) as usize).min(mesh.elements() - 1);
    let local = t - e as f64;
    let (l0, l1) = (field.lambda[e], field.lambda[e + 1]);
    Ok((l0 + (l1 - l0) * local, (l1 - l0) / mesh.dx()))
}
