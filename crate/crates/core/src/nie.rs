//! Dual solver for the periodic integral equation `w + u K w + K(w^2)/2 = 0`.
//!
//! For a base state `w̄` the dual field `ν` determines
//! `ŵ = (a w̄ - ν - u K ν) / (a + K ν)`, and the concave objective
//! `S_h(ν) = -½ Σ (a + Kν) ŵ² h` has gradient `h ρ` where `ρ` is the
//! residual of `ŵ`. Maximizing `S_h` therefore solves the equation.

use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{build_k_matrix, min_continuous_spectrum, KOperator, PeriodicGrid};
use crate::profile::{SolverReport, WaveProfile};
use crate::quasi_newton::{minimize, Objective, QnReport, Termination};
use crate::verify::nie_residual_with;

/// Dual field samples on the periodic grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualFieldNIE {
    pub nu: Vec<f64>,
}

impl DualFieldNIE {
    pub fn zeros(n: usize) -> Self {
        Self { nu: vec![0.0; n] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NieConfig {
    pub a: f64,
    /// Guard `a + Kν > eps_a`; `None` means `1e-3 a`.
    pub eps_a: Option<f64>,
    pub grad_tol: f64,
    pub penalty_value: f64,
    pub u_inf_step: f64,
    pub min_u_inf_step: f64,
    pub max_qn_iters: usize,
}

impl Default for NieConfig {
    fn default() -> Self {
        Self {
            a: 10.0,
            eps_a: None,
            grad_tol: 2e-9,
            penalty_value: -1e30,
            u_inf_step: 0.025,
            min_u_inf_step: 0.003125,
            max_qn_iters: 10_000,
        }
    }
}

impl NieConfig {
    pub fn guard(&self) -> f64 {
        self.eps_a.unwrap_or(1e-3 * self.a)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::InvalidInput(format!("a = {} must be positive", self.a)));
        }
        let eps = self.guard();
        if !(eps > 0.0 && eps < self.a) {
            return Err(Error::InvalidInput(format!("eps_a = {eps} must lie in (0, a)")));
        }
        if !(self.grad_tol > 0.0) || !(self.penalty_value < 0.0) {
            return Err(Error::InvalidInput("grad_tol must be positive and penalty_value negative".into()));
        }
        if !(self.u_inf_step > 0.0 && self.min_u_inf_step > 0.0 && self.min_u_inf_step <= self.u_inf_step) {
            return Err(Error::InvalidInput("need 0 < min_u_inf_step <= u_inf_step".into()));
        }
        Ok(())
    }
}

fn check_len(v: &[f64], grid: &PeriodicGrid, what: &str) -> Result<()> {
    if v.len() != grid.len() {
        return Err(Error::InvalidInput(format!("{what} has {} samples, grid has {}", v.len(), grid.len())));
    }
    Ok(())
}

/// Precomputed pieces shared by the value, gradient and Hessian.
struct Eval {
    knu: Vec<f64>,
    bnu: Vec<f64>,
}

struct Problem<'a> {
    op: &'a KOperator,
    wbar: &'a [f64],
    u_inf: f64,
    a: f64,
    eps: f64,
    penalty: f64,
}

impl Problem<'_> {
    fn eval(&self, nu: &[f64]) -> std::result::Result<Eval, Vec<usize>> {
        let knu = self.op.apply(nu);
        let bad: Vec<usize> = (0..knu.len()).filter(|&j| !(self.a + knu[j] > self.eps)).collect();
        if !bad.is_empty() {
            return Err(bad);
        }
        let bnu = nu.iter().zip(&knu).map(|(n, k)| n + self.u_inf * k).collect();
        Ok(Eval { knu, bnu })
    }

    fn w_hat(&self, e: &Eval) -> Vec<f64> {
        (0..e.knu.len()).map(|j| (self.a * self.wbar[j] - e.bnu[j]) / (self.a + e.knu[j])).collect()
    }

    fn h(&self) -> f64 {
        self.op.grid().spacing()
    }

    /// `S(ν) - S(0)`, written without the cancelling `a² w̄²` terms.
    fn shifted_value(&self, e: &Eval) -> f64 {
        let a = self.a;
        let mut acc = 0.0;
        for j in 0..e.knu.len() {
            let w = self.wbar[j];
            let b = e.bnu[j];
            acc += (-a * w * w * e.knu[j] - 2.0 * a * w * b + b * b) / (a + e.knu[j]);
        }
        -0.5 * self.h() * acc
    }

    fn gradient_from(&self, e: &Eval) -> Vec<f64> {
        let w = self.w_hat(e);
        let (rho, _) = nie_residual_with(&w, self.u_inf, self.op);
        let h = self.h();
        rho.iter().map(|r| h * r).collect()
    }
}

/// Objective handed to the minimizer: `-(S(ν) - S(0))`.
struct Negated<'a>(Problem<'a>);

impl Objective for Negated<'_> {
    fn dim(&self) -> usize {
        self.0.wbar.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self.0.eval(x) {
            Ok(e) => -self.0.shifted_value(&e),
            Err(_) => -self.0.penalty,
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self.0.eval(x) {
            Ok(e) => self.0.gradient_from(&e).iter().map(|g| -g).collect(),
            Err(_) => vec![f64::NAN; x.len()],
        }
    }

    fn penalty(&self) -> Option<f64> {
        Some(-self.0.penalty)
    }
}

/// The negated objective `-S_h` as a standalone [`Objective`], for use with
/// the gradient checker and minimizer.
pub struct NieObjective {
    op: KOperator,
    wbar: Vec<f64>,
    u_inf: f64,
    config: NieConfig,
}

impl NieObjective {
    pub fn new(wbar: &[f64], u_inf: f64, config: &NieConfig, grid: &PeriodicGrid) -> Result<Self> {
        config.validate()?;
        check_len(wbar, grid, "base state")?;
        Ok(Self { op: KOperator::new(grid), wbar: wbar.to_vec(), u_inf, config: config.clone() })
    }

    fn problem(&self) -> Problem<'_> {
        problem(&self.op, &self.wbar, self.u_inf, &self.config)
    }
}

impl Objective for NieObjective {
    fn dim(&self) -> usize {
        self.wbar.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let p = self.problem();
        match p.eval(x) {
            Ok(e) => -(s_at_zero(&p) + p.shifted_value(&e)),
            Err(_) => -self.config.penalty_value,
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        Negated(self.problem()).gradient(x)
    }

    fn penalty(&self) -> Option<f64> {
        Some(-self.config.penalty_value)
    }
}

fn problem<'a>(op: &'a KOperator, wbar: &'a [f64], u_inf: f64, config: &NieConfig) -> Problem<'a> {
    Problem { op, wbar, u_inf, a: config.a, eps: config.guard(), penalty: config.penalty_value }
}

fn s_at_zero(p: &Problem<'_>) -> f64 {
    -0.5 * p.a * p.h() * p.wbar.iter().map(|w| w * w).sum::<f64>()
}

/// Primal samples `ŵ` for dual field `nu`.
pub fn dtp_w(nu: &[f64], wbar: &[f64], u_inf: f64, config: &NieConfig, grid: &PeriodicGrid) -> Result<Vec<f64>> {
    check_len(nu, grid, "dual field")?;
    check_len(wbar, grid, "base state")?;
    let op = KOperator::new(grid);
    let p = problem(&op, wbar, u_inf, config);
    let e = p.eval(nu).map_err(|indices| Error::DomainViolation { indices })?;
    Ok(p.w_hat(&e))
}

/// `S_h(ν)`, or `penalty_value` when the guard fails.
pub fn objective(nu: &[f64], wbar: &[f64], u_inf: f64, config: &NieConfig, grid: &PeriodicGrid) -> Result<f64> {
    check_len(nu, grid, "dual field")?;
    check_len(wbar, grid, "base state")?;
    let op = KOperator::new(grid);
    let p = problem(&op, wbar, u_inf, config);
    Ok(match p.eval(nu) {
        Ok(e) => s_at_zero(&p) + p.shifted_value(&e),
        Err(_) => config.penalty_value,
    })
}

/// `∇S_h = h ρ` with `ρ` the residual of `ŵ`.
pub fn gradient(nu: &[f64], wbar: &[f64], u_inf: f64, config: &NieConfig, grid: &PeriodicGrid) -> Result<Vec<f64>> {
    check_len(nu, grid, "dual field")?;
    check_len(wbar, grid, "base state")?;
    let op = KOperator::new(grid);
    let p = problem(&op, wbar, u_inf, config);
    let e = p.eval(nu).map_err(|indices| Error::DomainViolation { indices })?;
    Ok(p.gradient_from(&e))
}

/// `I + K diag(d)`.
fn i_plus_k_diag(k: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let n = d.len();
    let mut a = k.clone();
    for (j, mut col) in a.column_iter_mut().enumerate() {
        col *= d[j];
    }
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    a
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn hessian_unsymmetrized(
    nu: &[f64],
    wbar: &[f64],
    u_inf: f64,
    config: &NieConfig,
    grid: &PeriodicGrid,
) -> Result<DMatrix<f64>> {
    let op = KOperator::new(grid);
    let p = problem(&op, wbar, u_inf, config);
    let e = p.eval(nu).map_err(|indices| Error::DomainViolation { indices })?;
    let fhat: Vec<f64> = p.w_hat(&e).iter().map(|w| u_inf + w).collect();
    let k = build_k_matrix(grid).matrix;
    let a = i_plus_k_diag(&k, &fhat);
    let mut b = a.clone();
    for (j, mut col) in b.column_iter_mut().enumerate() {
        col /= config.a + e.knu[j];
    }
    Ok((b * a.transpose()) * (-grid.spacing()))
}

/// Dense Hessian `-h (I + K F̂) D⁻¹ (I + F̂ K)`, symmetrized.
pub fn hessian(nu: &[f64], wbar: &[f64], u_inf: f64, config: &NieConfig, grid: &PeriodicGrid) -> Result<DMatrix<f64>> {
    check_len(nu, grid, "dual field")?;
    check_len(wbar, grid, "base state")?;
    Ok(symmetrize(&hessian_unsymmetrized(nu, wbar, u_inf, config, grid)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub u_inf: f64,
    /// Full spectrum of `(I + K F̄)(I + F̄ K)`, ascending.
    pub kappa: Vec<f64>,
    /// Eigenvalue nearest zero (the translation mode).
    pub kappa1: f64,
    /// The four smallest eigenvalues after `kappa1`, ignoring `|κ| < 1e-10`.
    pub lowest: Vec<f64>,
    pub min_sigma_c: f64,
}

const NEGLIGIBLE: f64 = 1e-10;

/// Spectrum of `-M(w̄) = (I + K F̄)(I + F̄ K)`, `F̄ = diag(u + w̄)`, which is
/// `-a/h` times the Hessian at `ν = 0`.
pub fn stability_matrix(wbar: &[f64], u_inf: f64, grid: &PeriodicGrid) -> Result<SpectralReport> {
    check_len(wbar, grid, "base state")?;
    let fbar: Vec<f64> = wbar.iter().map(|w| u_inf + w).collect();
    let k = build_k_matrix(grid).matrix;
    let a = i_plus_k_diag(&k, &fbar);
    let m = symmetrize(&(&a * a.transpose()));
    let mut kappa: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    kappa.sort_by(f64::total_cmp);
    let i1 = (0..kappa.len()).min_by(|&i, &j| kappa[i].abs().total_cmp(&kappa[j].abs())).unwrap_or(0);
    let lowest = kappa
        .iter()
        .enumerate()
        .filter(|&(i, v)| i != i1 && v.abs() >= NEGLIGIBLE)
        .map(|(_, &v)| v)
        .take(4)
        .collect();
    Ok(SpectralReport { u_inf, kappa1: kappa[i1], lowest, min_sigma_c: min_continuous_spectrum(u_inf), kappa })
}

/// Relative size of `(I + f̂ K)(f̂ ⊙ f̂')`, which vanishes for an exact
/// solution by translation invariance.
pub fn translation_mode_residual(w_hat: &[f64], u_inf: f64, grid: &PeriodicGrid) -> Result<f64> {
    check_len(w_hat, grid, "profile")?;
    let op = KOperator::new(grid);
    let fhat: Vec<f64> = w_hat.iter().map(|w| u_inf + w).collect();
    let d = op.derivative(w_hat);
    let v: Vec<f64> = fhat.iter().zip(&d).map(|(f, d)| f * d).collect();
    let kv = op.apply(&v);
    let r = (0..v.len()).map(|j| (v[j] + fhat[j] * kv[j]).abs()).fold(0.0, f64::max);
    let scale = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::InvalidInput("profile has no translation mode".into()));
    }
    Ok(r / scale)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NieSolution {
    pub u_inf: f64,
    /// `f = u + ŵ` on the grid.
    pub profile: WaveProfile,
    pub w_hat: Vec<f64>,
    pub nu: DualFieldNIE,
    pub residual_inf: f64,
    /// Smallest value of `a + Kν` at the solution.
    pub min_margin: f64,
    pub qn: QnReport,
    pub report: SolverReport,
}

/// Maximizes `S_h` from `ν = 0` for base state `wbar0`.
pub fn solve_nie(wbar0: &[f64], u_inf: f64, config: &NieConfig, grid: &PeriodicGrid) -> Result<NieSolution> {
    config.validate()?;
    check_len(wbar0, grid, "base state")?;
    if wbar0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("base state must be finite".into()));
    }
    let start = Instant::now();
    let op = KOperator::new(grid);
    let obj = Negated(problem(&op, wbar0, u_inf, config));
    let (nu, qn) = minimize(&obj, &vec![0.0; grid.len()], config.grad_tol, config.max_qn_iters)?;
    if qn.reason != Termination::Gtol {
        let reason = match qn.reason {
            Termination::MaxIters => "max_iters",
            _ => "line_search_failure",
        };
        return Err(Error::NotConverged { reason: reason.into(), iterations: qn.iterations, grad_inf: qn.grad_inf });
    }
    let p = &obj.0;
    let e = p.eval(&nu).map_err(|indices| Error::DomainViolation { indices })?;
    let w_hat = p.w_hat(&e);
    let min_margin = e.knu.iter().map(|k| config.a + k).fold(f64::INFINITY, f64::min);
    let (_, residual_inf) = nie_residual_with(&w_hat, u_inf, &op);
    let f = w_hat.iter().map(|w| u_inf + w).collect();
    let report = SolverReport {
        iterations: qn.iterations,
        residual_history: vec![residual_inf],
        converged: true,
        status: "converged".into(),
        wall_time_s: start.elapsed().as_secs_f64(),
        ..SolverReport::default()
    };
    Ok(NieSolution {
        u_inf,
        profile: WaveProfile::new(grid.points(), f, u_inf, -0.5),
        w_hat,
        nu: DualFieldNIE { nu },
        residual_inf,
        min_margin,
        qn,
        report,
    })
}

/// Which sweep points get a full spectral decomposition.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectraPolicy {
    #[default]
    All,
    Never,
    At(Vec<f64>),
}

impl SpectraPolicy {
    fn wants(&self, u: f64) -> bool {
        match self {
            SpectraPolicy::All => true,
            SpectraPolicy::Never => false,
            SpectraPolicy::At(list) => list.iter().any(|v| (v - u).abs() < 1e-9),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub solution: NieSolution,
    pub spectral: Option<SpectralReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SweepStatus {
    Completed,
    /// The solver failed at `u_inf` even with the smallest step.
    Stopped { u_inf: f64, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    pub status: SweepStatus,
}

impl SweepOutcome {
    pub fn at(&self, u_inf: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| (p.solution.u_inf - u_inf).abs() < 1e-9)
    }
}

/// Path-following in `u`: each step re-solves with the previous `ŵ` as base
/// state. Steps never skip a multiple of `u_inf_step` from `u_start` and are
/// halved on failure down to `min_u_inf_step`.
pub fn sweep_u_infinity(
    u_start: f64,
    u_end: f64,
    config: &NieConfig,
    grid: &PeriodicGrid,
    wbar0: &[f64],
    spectra: &SpectraPolicy,
) -> Result<SweepOutcome> {
    config.validate()?;
    if !u_start.is_finite() || !u_end.is_finite() {
        return Err(Error::InvalidInput("sweep endpoints must be finite".into()));
    }
    let mut points = Vec::new();
    let record = |sol: NieSolution, points: &mut Vec<SweepPoint>| -> Result<()> {
        let spectral = if spectra.wants(sol.u_inf) { Some(stability_matrix(&sol.w_hat, sol.u_inf, grid)?) } else { None };
        points.push(SweepPoint { solution: sol, spectral });
        Ok(())
    };
    let first = match solve_nie(wbar0, u_start, config, grid) {
        Ok(s) => s,
        Err(e) => {
            return Ok(SweepOutcome {
                points,
                status: SweepStatus::Stopped { u_inf: u_start, message: e.to_string() },
            })
        }
    };
    let mut wbar = first.w_hat.clone();
    record(first, &mut points)?;
    let dir = if u_end >= u_start { 1.0 } else { -1.0 };
    let (major, minor) = (config.u_inf_step, config.min_u_inf_step);
    let mut u = u_start;
    let mut step = major;
    while (u_end - u) * dir > 1e-12 {
        let done = (u - u_start) * dir;
        let next_major = u_start + dir * major * ((done / major + 1e-9).floor() + 1.0);
        let mut target = u + dir * step;
        if (target - next_major) * dir > 0.0 {
            target = next_major;
        }
        if (target - u_end) * dir >= -1e-12 {
            target = u_end;
        } else {
            target = u_start + ((target - u_start) / minor).round() * minor;
        }
        match solve_nie(&wbar, target, config, grid) {
            Ok(sol) => {
                wbar.clone_from(&sol.w_hat);
                record(sol, &mut points)?;
                u = target;
                step = major;
            }
            Err(e) => {
                step *= 0.5;
                if step < minor * (1.0 - 1e-12) {
                    return Ok(SweepOutcome {
                        points,
                        status: SweepStatus::Stopped { u_inf: target, message: e.to_string() },
                    });
                }
            }
        }
    }
    Ok(SweepOutcome { points, status: SweepStatus::Completed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petviashvili::{gaussian_seed, pv_basic, PvConfig};
    use crate::verify::gradient_check;

    fn small_grid() -> PeriodicGrid {
        PeriodicGrid::new(10.0, 200).unwrap()
    }

    fn bump(grid: &PeriodicGrid, amp: f64) -> Vec<f64> {
        grid.points().iter().map(|x| amp * (-0.5 * x * x).exp()).collect()
    }

    #[test]
    fn dtp_trivial_cases() {
        let grid = small_grid();
        let cfg = NieConfig::default();
        let wbar = bump(&grid, -0.7);
        let n = grid.len();
        let w0 = dtp_w(&vec![0.0; n], &wbar, 0.3, &cfg, &grid).unwrap();
        assert!(w0.iter().zip(&wbar).all(|(p, q)| (p - q).abs() < 1e-15));
        let c = 0.1;
        let w = dtp_w(&vec![c; n], &vec![0.0; n], 0.0, &cfg, &grid).unwrap();
        assert!(w.iter().all(|v| (v + c / (cfg.a + 2.0 * c)).abs() < 1e-14));
    }

    #[test]
    fn dtp_matches_dense_formula() {
        let grid = small_grid();
        let cfg = NieConfig::default();
        let wbar = bump(&grid, -0.7);
        let nu: Vec<f64> = grid.points().iter().map(|x| 0.3 * (0.8 * x).sin() * (-0.1 * x * x).exp()).collect();
        let k = build_k_matrix(&grid);
        let knu = k.matvec(&nu);
        let w = dtp_w(&nu, &wbar, 0.4, &cfg, &grid).unwrap();
        for j in 0..nu.len() {
            let expect = (cfg.a * wbar[j] - nu[j] - 0.4 * knu[j]) / (cfg.a + knu[j]);
            assert!((w[j] - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn objective_at_zero_and_penalty() {
        let grid = small_grid();
        let cfg = NieConfig::default();
        let n = grid.len();
        let wbar = bump(&grid, -0.7);
        let s0 = objective(&vec![0.0; n], &wbar, 0.2, &cfg, &grid).unwrap();
        let expect = -0.5 * cfg.a * wbar.iter().map(|w| w * w).sum::<f64>() * grid.spacing();
        assert!((s0 - expect).abs() < 1e-14 * expect.abs());
        assert_eq!(objective(&vec![0.0; n], &vec![0.0; n], 0.2, &cfg, &grid).unwrap(), 0.0);
        assert_eq!(objective(&vec![-10.0; n], &wbar, 0.2, &cfg, &grid).unwrap(), cfg.penalty_value);
        assert!(matches!(gradient(&vec![-10.0; n], &wbar, 0.2, &cfg, &grid), Err(Error::DomainViolation { .. })));
    }

    #[test]
    fn shifted_value_matches_direct_formula() {
        let grid = small_grid();
        let cfg = NieConfig::default();
        let wbar = bump(&grid, -0.7);
        let nu: Vec<f64> = grid.points().iter().map(|x| 0.5 * (-0.2 * x * x).exp()).collect();
        let w = dtp_w(&nu, &wbar, 0.3, &cfg, &grid).unwrap();
        let knu = KOperator::new(&grid).apply(&nu);
        let direct: f64 = -0.5 * grid.spacing() * (0..nu.len()).map(|j| (cfg.a + knu[j]) * w[j] * w[j]).sum::<f64>();
        let s = objective(&nu, &wbar, 0.3, &cfg, &grid).unwrap();
        assert!((s - direct).abs() < 1e-12 * direct.abs());
    }

    #[test]
    fn constant_solution_has_zero_gradient() {
        let grid = small_grid();
        let cfg = NieConfig::default();
        let u = 0.35;
        let n = grid.len();
        let g = gradient(&vec![0.0; n], &vec![-(1.0 + 2.0 * u); n], u, &cfg, &grid).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn gradient_against_differences() {
        let grid = small_grid();
        let cfg = NieConfig::default();
        let wbar = bump(&grid, -0.9);
        let obj = NieObjective::new(&wbar, -0.2, &cfg, &grid).unwrap();
        let nu: Vec<f64> = grid.points().iter().map(|x| 0.2 * (1.3 * x).cos() * (-0.05 * x * x).exp()).collect();
        let chk = gradient_check(&obj, &nu, 1e-6).unwrap();
        assert!(!chk.penalty_hit);
        assert!(chk.max_rel_error < 1e-6, "{}", chk.max_rel_error);
    }

    #[test]
    fn hessian_at_trivial_state() {
        let grid = PeriodicGrid::new(5.0, 50).unwrap();
        let cfg = NieConfig::default();
        let n = grid.len();
        let h = hessian(&vec![0.0; n], &vec![0.0; n], 0.0, &cfg, &grid).unwrap();
        let scaled = h * (cfg.a / grid.spacing());
        assert!((scaled + DMatrix::<f64>::identity(n, n)).amax() < 1e-15);
    }

    #[test]
    fn hessian_vector_products_and_sign() {
        let grid = PeriodicGrid::new(5.0, 100).unwrap();
        let cfg = NieConfig::default();
        let u = 0.3;
        let wbar = bump(&grid, -1.1);
        let nu: Vec<f64> = grid.points().iter().map(|x| 0.4 * (-0.3 * x * x).exp()).collect();
        let raw = hessian_unsymmetrized(&nu, &wbar, u, &cfg, &grid).unwrap();
        let asym = (&raw - raw.transpose()).amax() / raw.amax();
        assert!(asym < 1e-10);
        let h = symmetrize(&raw);
        let v: Vec<f64> = grid.points().iter().map(|x| (0.7 * x).sin()).collect();
        let hv = &h * nalgebra::DVector::from_column_slice(&v);
        let eps = 1e-6;
        let shift = |s: f64| -> Vec<f64> { nu.iter().zip(&v).map(|(a, b)| a + s * b).collect() };
        let gp = gradient(&shift(eps), &wbar, u, &cfg, &grid).unwrap();
        let gm = gradient(&shift(-eps), &wbar, u, &cfg, &grid).unwrap();
        let scale = hv.amax();
        for j in 0..v.len() {
            let fd = (gp[j] - gm[j]) / (2.0 * eps);
            assert!((fd - hv[j]).abs() < 1e-5 * scale);
        }
        let top = SymmetricEigen::new(h).eigenvalues.max();
        assert!(top <= 1e-10);
    }

    #[test]
    fn stability_of_zero_state() {
        let grid = PeriodicGrid::new(5.0, 50).unwrap();
        let rep = stability_matrix(&vec![0.0; 50], 0.0, &grid).unwrap();
        assert!(rep.kappa.iter().all(|k| (k - 1.0).abs() < 1e-12));
        assert_eq!(rep.min_sigma_c, 1.0);
    }

    #[test]
    fn solution_is_a_fixed_point() {
        let grid = PeriodicGrid::new(25.0, 500).unwrap();
        let cfg_pv = PvConfig { residual_tol: Some(1e-12), max_iters: 500, ..PvConfig::default() };
        let pv = pv_basic(&gaussian_seed(&grid), &grid, &cfg_pv).unwrap();
        let w: Vec<f64> = pv.g.iter().map(|g| -g).collect();
        let sol = solve_nie(&w, 0.0, &NieConfig::default(), &grid).unwrap();
        assert!(sol.qn.iterations <= 2);
        assert!(sol.nu.nu.iter().all(|v| v.abs() < 1e-8));
        assert!(sol.residual_inf < 1e-7);
    }

    #[test]
    fn short_sweep_moves_along_branch() {
        let grid = PeriodicGrid::new(25.0, 500).unwrap();
        let pv = pv_basic(&gaussian_seed(&grid), &grid, &PvConfig::default()).unwrap();
        let w: Vec<f64> = pv.g.iter().map(|g| -g).collect();
        let cfg = NieConfig::default();
        let out = sweep_u_infinity(0.0, -0.05, &cfg, &grid, &w, &SpectraPolicy::Never).unwrap();
        assert_eq!(out.status, SweepStatus::Completed);
        let us: Vec<f64> = out.points.iter().map(|p| p.solution.u_inf).collect();
        assert_eq!(us.len(), 3);
        assert!((us[1] + 0.025).abs() < 1e-12 && (us[2] + 0.05).abs() < 1e-12);
        assert!(out.points.iter().all(|p| p.solution.residual_inf < 1e-7));
        let single = sweep_u_infinity(0.0, 0.0, &cfg, &grid, &w, &SpectraPolicy::Never).unwrap();
        let direct = solve_nie(&w, 0.0, &cfg, &grid).unwrap();
        assert_eq!(single.points.len(), 1);
        assert_eq!(single.points[0].solution.w_hat, direct.w_hat);
    }
}
