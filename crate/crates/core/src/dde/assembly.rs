//! Residual, Jacobian and convexity test of the discrete dual problem.

use super::mesh::{FemMesh, GAUSS_WEIGHTS};
use super::{dtp_map, DdeConfig, DualFieldDDE};
use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::profile::BaseState;

/// Primal field and DtP denominator at every Gauss point.
pub(crate) struct GaussState {
    pub fhat: Vec<f64>,
    pub delta: Vec<f64>,
}

/// Value of the dual field at local Gauss index `q` of element `e`; zero
/// for elements outside the mesh.
#[inline]
fn lam_at(mesh: &FemMesh, lambda: &[f64], e: isize, q: usize) -> f64 {
    if e < 0 || e as usize >= mesh.elements() {
        return 0.0;
    }
    let e = e as usize;
    let (n0, n1) = FemMesh::shape(q);
    n0 * lambda[e] + n1 * lambda[e + 1]
}

fn check_inputs(mesh: &FemMesh, field: &DualFieldDDE, fbar: &[f64]) -> Result<()> {
    if field.lambda.len() != mesh.node_count() {
        return Err(Error::InvalidInput("dual field length does not match the mesh".into()));
    }
    if fbar.len() != mesh.gauss_count() {
        return Err(Error::InvalidInput(format!(
            "base state needs {} Gauss values, got {}",
            mesh.gauss_count(),
            fbar.len()
        )));
    }
    Ok(())
}

pub(crate) fn gauss_state(mesh: &FemMesh, field: &DualFieldDDE, fbar: &[f64], a: f64) -> Result<GaussState> {
    check_inputs(mesh, field, fbar)?;
    let (m, s) = (mesh.elements(), mesh.steps_per_unit() as isize);
    let lam = &field.lambda;
    let mut fhat = vec![0.0; 2 * m];
    let mut delta = vec![0.0; 2 * m];
    for e in 0..m {
        let dl = (lam[e + 1] - lam[e]) / mesh.dx();
        for q in 0..2 {
            let g = 2 * e + q;
            let lm = lam_at(mesh, lam, e as isize - s, q);
            let lp = lam_at(mesh, lam, e as isize + s, q);
            delta[g] = a + lm - lp;
            fhat[g] = dtp_map(dl, lm, lp, a, fbar[g]).map_err(|err| match err {
                Error::DtpSingular { numerator, .. } => {
                    Error::DtpSingular { x: mesh.gauss_point(e, q), numerator }
                }
                other => other,
            })?;
        }
    }
    Ok(GaussState { fhat, delta })
}

/// Primal field recovered by the DtP map at all Gauss points of the mesh.
pub fn fhat_at_gauss(mesh: &FemMesh, field: &DualFieldDDE, fbar: &BaseState, a: f64) -> Result<Vec<f64>> {
    Ok(gauss_state(mesh, field, &fbar.values, a)?.fhat)
}

pub(crate) fn residual_from(mesh: &FemMesh, st: &GaussState) -> Vec<f64> {
    let s = mesh.steps_per_unit();
    let first = *mesh.interior_nodes().start();
    let n = mesh.interior_count();
    let inside = |node: usize| node >= first && node < first + n;
    let mut r = vec![0.0; n];
    let dx = mesh.dx();
    let (d0, d1) = (-1.0 / dx, 1.0 / dx);
    for e in mesh.domain_elements() {
        for q in 0..2 {
            let w = GAUSS_WEIGHTS[q] * dx;
            let (n0, n1) = FemMesh::shape(q);
            let f0 = st.fhat[2 * e + q];
            let fp = st.fhat[2 * (e + s) + q];
            let fm = st.fhat[2 * (e - s) + q];
            let jump = 0.5 * (fp * fp - fm * fm);
            if inside(e) {
                r[e - first] += w * (-d0 * f0 + n0 * jump);
            }
            if inside(e + 1) {
                r[e + 1 - first] += w * (-d1 * f0 + n1 * jump);
            }
        }
    }
    r
}

/// Weak residual `R^A` for every interior node `A`.
pub fn assemble_residual(
    mesh: &FemMesh,
    field: &DualFieldDDE,
    fbar: &BaseState,
    config: &DdeConfig,
) -> Result<Vec<f64>> {
    let st = gauss_state(mesh, field, &fbar.values, config.a)?;
    Ok(residual_from(mesh, &st))
}

/// Sparse gradient of `fhat` at Gauss point `(e, q)` with respect to the
/// nodal coefficients, as up to six `(node, coefficient)` pairs.
fn fhat_gradient(mesh: &FemMesh, st: &GaussState, e: usize, q: usize) -> [(isize, f64); 6] {
    let s = mesh.steps_per_unit() as isize;
    let g = 2 * e + q;
    let inv = 1.0 / st.delta[g];
    let f = st.fhat[g];
    let (n0, n1) = FemMesh::shape(q);
    let e = e as isize;
    let dd = inv / mesh.dx();
    [
        (e, -dd),
        (e + 1, dd),
        (e - s, -f * inv * n0),
        (e - s + 1, -f * inv * n1),
        (e + s, f * inv * n0),
        (e + s + 1, f * inv * n1),
    ]
}

pub(crate) fn jacobian_from(mesh: &FemMesh, st: &GaussState) -> BandMatrix {
    let s = mesh.steps_per_unit();
    let first = *mesh.interior_nodes().start() as isize;
    let n = mesh.interior_count();
    let bw = 2 * s + 1;
    let mut jac = BandMatrix::zeros(n, bw, bw);
    let dx = mesh.dx();
    let dn = [-1.0 / dx, 1.0 / dx];
    for e in mesh.domain_elements() {
        for q in 0..2 {
            let w = GAUSS_WEIGHTS[q] * dx;
            let (n0, n1) = FemMesh::shape(q);
            let nv = [n0, n1];
            let fp = st.fhat[2 * (e + s) + q];
            let fm = st.fhat[2 * (e - s) + q];
            let g0 = fhat_gradient(mesh, st, e, q);
            let gp = fhat_gradient(mesh, st, e + s, q);
            let gm = fhat_gradient(mesh, st, e - s, q);
            for (k, (&na, &dna)) in nv.iter().zip(&dn).enumerate() {
                let row = (e + k) as isize - first;
                if row < 0 || row >= n as isize {
                    continue;
                }
                let row = row as usize;
                let mut put = |node: isize, v: f64| {
                    let col = node - first;
                    if col >= 0 && (col as usize) < n {
                        jac.add(row, col as usize, w * v);
                    }
                };
                for &(b, c) in &g0 {
                    put(b, -dna * c);
                }
                for &(b, c) in &gp {
                    put(b, na * fp * c);
                }
                for &(b, c) in &gm {
                    put(b, -na * fm * c);
                }
            }
        }
    }
    jac
}

/// Exact Jacobian `dR^A / d lambda_B` on the interior nodes, in banded
/// storage with bandwidth `2/dx + 1` on each side.
pub fn assemble_jacobian(
    mesh: &FemMesh,
    field: &DualFieldDDE,
    fbar: &BaseState,
    config: &DdeConfig,
) -> Result<BandMatrix> {
    let st = gauss_state(mesh, field, &fbar.values, config.a)?;
    Ok(jacobian_from(mesh, &st))
}

/// Outcome of the discrete convexity test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityCheck {
    /// `min_ratio > T` and the denominator is positive on `(-L-1, L+1)`.
    pub ok: bool,
    /// Minimum of `Delta / a` over the Gauss points of `(-L, L)`.
    pub min_ratio: f64,
    /// Minimum of `Delta / a` over the Gauss points of `(-L-1, L+1)`.
    pub min_ratio_extended: f64,
}

/// Evaluates `Delta / a = (a + lambda(x-1) - lambda(x+1)) / a` at the Gauss
/// points and compares its minimum over `(-L, L)` with `T`.
///
/// The residual also evaluates the primal field at `x ± 1`, so the
/// denominator is additionally required to stay positive there.
pub fn convexity_check(mesh: &FemMesh, field: &DualFieldDDE, config: &DdeConfig) -> ConvexityCheck {
    let s = mesh.steps_per_unit() as isize;
    let lam = &field.lambda;
    let ratio = |e: usize, q: usize| {
        let lm = lam_at(mesh, lam, e as isize - s, q);
        let lp = lam_at(mesh, lam, e as isize + s, q);
        (config.a + lm - lp) / config.a
    };
    let mut min_ratio = f64::INFINITY;
    let mut min_ext = f64::INFINITY;
    let dom = mesh.domain_elements();
    for e in mesh.shifted_elements() {
        for q in 0..2 {
            let r = ratio(e, q);
            min_ext = min_ext.min(r);
            if dom.contains(&e) {
                min_ratio = min_ratio.min(r);
            }
        }
    }
    ConvexityCheck {
        ok: min_ratio > config.threshold && min_ext > 0.0,
        min_ratio,
        min_ratio_extended: min_ext,
    }
}
