//! Step-controlled Newton iteration with base-state resets.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::assembly::{convexity_check, gauss_state, jacobian_from, residual_from};
use super::mesh::{FemMesh, GAUSS_WEIGHTS};
use super::{DdeConfig, DualFieldDDE};
use crate::error::{Error, Result};
use crate::profile::{BaseState, Provenance, SolverReport, WaveProfile};

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Step lengths below this are not tried; the step is reported as stalled.
pub const ALPHA_FLOOR: f64 = 1e-12;

/// Result of one controlled Newton step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Accepted iterate, or the unchanged input when `stalled`.
    pub lambda: DualFieldDDE,
    /// Step length that passed the convexity test.
    pub alpha: f64,
    pub halvings: usize,
    /// `alpha` fell below `alpha_min`: the base state should be reset after
    /// this iterate.
    pub reset_needed: bool,
    /// No step length down to [`ALPHA_FLOOR`] passed the test.
    pub stalled: bool,
    /// Residual at the returned iterate.
    pub residual: Vec<f64>,
}

fn trial_residual(mesh: &FemMesh, lam: &DualFieldDDE, fbar: &[f64], cfg: &DdeConfig) -> Option<Vec<f64>> {
    // a singular DtP map is treated like a convexity failure
    let st = gauss_state(mesh, lam, fbar, cfg.a).ok()?;
    let r = residual_from(mesh, &st);
    r.iter().all(|v| v.is_finite()).then_some(r)
}

/// Solves `J d = -R` at `lambda_k` and returns the first iterate
/// `lambda_k + alpha d` that passes the convexity test, halving `alpha` as
/// needed. The iterate is returned even when `alpha < alpha_min`, flagged
/// with `reset_needed`. In plain-Newton mode the full step is always taken.
pub fn newton_step(
    mesh: &FemMesh,
    lambda_k: &DualFieldDDE,
    fbar: &BaseState,
    alpha: f64,
    config: &DdeConfig,
) -> Result<StepOutcome> {
    let st = gauss_state(mesh, lambda_k, &fbar.values, config.a)?;
    let r = residual_from(mesh, &st);
    let lu = jacobian_from(mesh, &st).factorize()?;
    let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
    let d = lu.solve(&rhs);
    let first = *mesh.interior_nodes().start();
    let trial = |alpha: f64| {
        let mut lam = lambda_k.clone();
        for (k, dk) in d.iter().enumerate() {
            lam.lambda[first + k] += alpha * dk;
        }
        lam
    };
    if config.plain_newton {
        let lam = trial(1.0);
        let residual = residual_from(mesh, &gauss_state(mesh, &lam, &fbar.values, config.a)?);
        return Ok(StepOutcome { lambda: lam, alpha: 1.0, halvings: 0, reset_needed: false, stalled: false, residual });
    }
    let mut alpha = alpha;
    let mut halvings = 0;
    loop {
        let lam = trial(alpha);
        if convexity_check(mesh, &lam, config).ok {
            if let Some(residual) = trial_residual(mesh, &lam, &fbar.values, config) {
                let reset_needed = alpha < config.alpha_min;
                return Ok(StepOutcome { lambda: lam, alpha, halvings, reset_needed, stalled: false, residual });
            }
        }
        alpha *= 0.5;
        halvings += 1;
        if alpha < ALPHA_FLOOR {
            return Ok(StepOutcome {
                lambda: lambda_k.clone(),
                alpha,
                halvings,
                reset_needed: true,
                stalled: true,
                residual: r,
            });
        }
    }
}

/// Termination of the DDE solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DdeStatus {
    Converged,
    /// The first step of an epoch increased the residual.
    Aborted,
    MaxResets,
    MaxNewton,
    /// A plain-Newton iterate left the domain of the DtP map or produced
    /// non-finite values.
    Diverged,
}

impl DdeStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            DdeStatus::Converged => "converged",
            DdeStatus::Aborted => "aborted",
            DdeStatus::MaxResets => "max_resets",
            DdeStatus::MaxNewton => "max_newton",
            DdeStatus::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdeSolution {
    /// L2-projected primal field at the nodes of `[-L, L]`.
    pub profile: WaveProfile,
    pub lambda: DualFieldDDE,
    /// Primal field at every Gauss point for the final iterate.
    pub fhat_gauss: Vec<f64>,
    /// Base state in effect at termination.
    pub base: BaseState,
    pub status: DdeStatus,
    pub report: SolverReport,
}

impl DdeSolution {
    pub fn converged(&self) -> bool {
        self.status == DdeStatus::Converged
    }
}

/// Runs the modified Newton scheme from `lambda = 0` (or `lambda0` in the
/// first epoch).
///
/// Each epoch starts from `lambda = 0` with the current base state. The
/// step length `alpha` is halved until the convexity test passes and is
/// carried to the next step. Once an accepted iterate needed
/// `alpha < alpha_min`, the base state is replaced by the primal field of
/// that iterate at the Gauss points and a new epoch begins. An epoch whose
/// first step raises the residual aborts the solve. An iterate already
/// below `tol` at the start of an epoch is accepted without a step.
pub fn solve_dde(
    mesh: &FemMesh,
    fbar0: &BaseState,
    lambda0: Option<&DualFieldDDE>,
    config: &DdeConfig,
) -> Result<DdeSolution> {
    config.validate()?;
    if fbar0.values.len() != mesh.gauss_count() {
        return Err(Error::InvalidInput(format!(
            "base state needs {} Gauss values, got {}",
            mesh.gauss_count(),
            fbar0.values.len()
        )));
    }
    if let Some(l0) = lambda0 {
        l0.validate(mesh)?;
    }
    let start = Instant::now();
    let mut fbar = fbar0.clone();
    let mut report = SolverReport::default();
    let mut lambda = lambda0.cloned().unwrap_or_else(|| DualFieldDDE::zeros(mesh));
    let mut alpha = 1.0;
    let status = 'outer: loop {
        let st = match gauss_state(mesh, &lambda, &fbar.values, config.a) {
            Ok(st) => st,
            Err(Error::DtpSingular { .. }) => break DdeStatus::Diverged,
            Err(e) => return Err(e),
        };
        let mut rmax = sup(&residual_from(mesh, &st));
        report.residual_history.push(rmax);
        let mut first_step = true;
        let r_start = rmax;
        loop {
            if rmax < config.tol {
                break 'outer DdeStatus::Converged;
            }
            if !rmax.is_finite() {
                break 'outer DdeStatus::Diverged;
            }
            if !first_step && alpha < config.alpha_min {
                // replace the base state by the current primal field
                let st = gauss_state(mesh, &lambda, &fbar.values, config.a)?;
                fbar = BaseState::new(st.fhat, Provenance::PreviousSolution);
                report.resets += 1;
                if report.resets > config.max_resets {
                    break 'outer DdeStatus::MaxResets;
                }
                lambda = DualFieldDDE::zeros(mesh);
                alpha = 1.0;
                continue 'outer;
            }
            if report.iterations >= config.max_newton {
                break 'outer DdeStatus::MaxNewton;
            }
            if config.alpha_reset_each_step {
                alpha = 1.0;
            }
            let step = match newton_step(mesh, &lambda, &fbar, alpha, config) {
                Ok(s) => s,
                Err(Error::DtpSingular { .. }) if config.plain_newton => break 'outer DdeStatus::Diverged,
                Err(Error::LinearSolve { .. }) if config.plain_newton => break 'outer DdeStatus::Diverged,
                Err(e) => return Err(e),
            };
            report.alpha_halvings += step.halvings;
            alpha = step.alpha;
            if step.stalled {
                // no admissible step at all: reset around the current iterate
                first_step = false;
                continue;
            }
            report.iterations += 1;
            lambda = step.lambda;
            rmax = sup(&step.residual);
            report.residual_history.push(rmax);
            report.alpha_history.push(step.alpha);
            if first_step && !config.plain_newton && rmax > r_start {
                break 'outer DdeStatus::Aborted;
            }
            first_step = false;
        }
    };
    let fhat_gauss = gauss_state(mesh, &lambda, &fbar.values, config.a).map(|s| s.fhat).unwrap_or_else(|_| fbar.values.clone());
    let nodal = l2_project(mesh, &fhat_gauss)?;
    let x: Vec<f64> = mesh.domain_nodes().map(|i| mesh.node(i)).collect();
    let u_inf = 0.5 * (nodal[0] + nodal[nodal.len() - 1]);
    report.converged = status == DdeStatus::Converged;
    report.status = status.as_str().to_string();
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(DdeSolution {
        profile: WaveProfile::new(x, nodal, u_inf, -0.5),
        lambda,
        fhat_gauss,
        base: fbar,
        status,
        report,
    })
}

/// L2 projection of Gauss-point data onto the linear elements of `[-L, L]`:
/// solves `M q = b` with the consistent mass matrix. Returns values at the
/// nodes `-L, ..., L`.
pub fn l2_project(mesh: &FemMesh, gauss_values: &[f64]) -> Result<Vec<f64>> {
    if gauss_values.len() != mesh.gauss_count() {
        return Err(Error::InvalidInput("projection needs values at every Gauss point".into()));
    }
    let first = *mesh.domain_nodes().start();
    let n = mesh.domain_nodes().count();
    let dx = mesh.dx();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1];
    let mut b = vec![0.0; n];
    for e in mesh.domain_elements() {
        let k = e - first;
        for q in 0..2 {
            let w = GAUSS_WEIGHTS[q] * dx;
            let (n0, n1) = FemMesh::shape(q);
            let v = gauss_values[2 * e + q];
            diag[k] += w * n0 * n0;
            diag[k + 1] += w * n1 * n1;
            off[k] += w * n0 * n1;
            b[k] += w * n0 * v;
            b[k + 1] += w * n1 * v;
        }
    }
    // Thomas algorithm; the mass matrix is SPD and diagonally dominant
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off[0] / diag[0];
    d[0] = b[0] / diag[0];
    for i in 1..n {
        let lower = off[i - 1];
        let denom = diag[i] - lower * c[i - 1];
        if i < n - 1 {
            c[i] = off[i] / denom;
        }
        d[i] = (b[i] - lower * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}
