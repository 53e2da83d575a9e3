//! Subcommand implementations. Each returns `Ok(true)` on success and
//! `Ok(false)` when a bundle was written for a run that did not converge.

use std::path::Path;

use dualwave::dde::{base_state, l2_project, solve_dde, DdeSolution, FemMesh};
use dualwave::kernel::PeriodicGrid;
use dualwave::lattice::{rescale_profile, rk4_evolve, translation_error, Boundary, LatticeState};
use dualwave::nie::{solve_nie, stability_matrix, sweep_u_infinity, SpectralReport, SweepOutcome, SweepStatus};
use dualwave::petviashvili::{gaussian_seed, pv_basic, pv_nie, PvConfig, PvStatus};
use dualwave::verify::{fd_residual, nie_residual, refinement_diff, tail_wavenumber, VerificationReport};
use dualwave::{BaseState, Provenance, SolverReport, WaveProfile};
use serde::Serialize;
use serde_json::json;

use crate::bundle::{read_columns, read_profile, write_columns, Bundle};
use crate::config::{self, BaseSpec, DdeRun, EvolveRun, GridSpec, NieRun, PvRun, SpectrumRun, SweepRun, VerifyRun};
use crate::error::CliError;

#[derive(Serialize)]
struct Report<'a> {
    command: &'a str,
    status: String,
    converged: bool,
    solver: Option<&'a SolverReport>,
    verification: VerificationReport,
    spectral: Option<&'a SpectralReport>,
    details: serde_json::Value,
}

/// Largest number of worker threads, from `DUALWAVE_THREADS` when set.
pub fn thread_cap() -> Result<usize, CliError> {
    match std::env::var("DUALWAVE_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Config(format!("DUALWAVE_THREADS = '{v}' must be a positive integer"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn grid_of(spec: &GridSpec) -> Result<PeriodicGrid, CliError> {
    Ok(PeriodicGrid::new(spec.half_length, spec.points)?)
}

/// Linear interpolation of tabulated data, constant beyond the ends.
fn interp_linear(x: &[f64], y: &[f64], t: f64) -> f64 {
    if t <= x[0] {
        return y[0];
    }
    if t >= x[x.len() - 1] {
        return y[y.len() - 1];
    }
    let k = x.partition_point(|&v| v <= t) - 1;
    let s = (t - x[k]) / (x[k + 1] - x[k]);
    y[k] + s * (y[k + 1] - y[k])
}

fn dde_base(mesh: &FemMesh, spec: &BaseSpec) -> Result<BaseState, CliError> {
    match spec.family() {
        Some(family) => Ok(base_state(mesh, &family)?),
        None => {
            let BaseSpec::File { path } = spec else { unreachable!() };
            let cols = read_columns(path, &["x", "f"])?;
            if cols[0].windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::Config(format!("{}: x must be increasing", path.display())));
            }
            let values = mesh.gauss_points().iter().map(|&t| interp_linear(&cols[0], &cols[1], t)).collect();
            Ok(BaseState::new(values, Provenance::PreviousSolution))
        }
    }
}

fn run_dde(run: &DdeRun, elements: usize) -> Result<(FemMesh, DdeSolution, VerificationReport), CliError> {
    let mesh = FemMesh::new(run.half_length, elements)?;
    let base = dde_base(&mesh, &run.base)?;
    let sol = solve_dde(&mesh, &base, None, &run.solver)?;
    let mut verification = VerificationReport::default();
    match fd_residual(&sol.profile, mesh.dx(), mesh.half_length()) {
        Ok(e) => verification.err_max_interior = Some(e),
        Err(e) => verification.notes.push(format!("finite-difference check skipped: {e}")),
    }
    Ok((mesh, sol, verification))
}

fn write_dde_bundle(out: &Path, name: &str, run: &DdeRun, mesh: &FemMesh, sol: &DdeSolution, verification: VerificationReport) -> Result<(), CliError> {
    let b = Bundle::new(out, name)?;
    b.profile(&sol.profile)?;
    b.dual(&mesh.nodes(), &sol.lambda.lambda, "lambda")?;
    let base_nodal = l2_project(mesh, &sol.base.values)?;
    b.json(
        "report.json",
        &Report {
            command: "solve-dde",
            status: sol.status.as_str().into(),
            converged: sol.converged(),
            solver: Some(&sol.report),
            verification,
            spectral: None,
            details: json!({
                "elements": mesh.elements(),
                "dx": mesh.dx(),
                "u_inf": sol.profile.u_inf,
                "final_base_provenance": sol.base.provenance,
                "final_base_nodal": base_nodal,
            }),
        },
    )?;
    b.json("config.json", run)?;
    let path = b.commit()?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn solve_dde_cmd(config: &Path, out: &Path) -> Result<bool, CliError> {
    let run: DdeRun = config::load(config)?;
    let (mesh, sol, verification) = run_dde(&run, run.elements)?;
    eprintln!(
        "solve-dde: {} after {} iterations, {} resets",
        sol.status.as_str(),
        sol.report.iterations,
        sol.report.resets
    );
    write_dde_bundle(out, &format!("dde_m{}", run.elements), &run, &mesh, &sol, verification)?;
    Ok(sol.converged())
}

fn pv_seed(grid: &PeriodicGrid) -> Result<Vec<f64>, CliError> {
    let out = pv_basic(&gaussian_seed(grid), grid, &PvConfig::default())?;
    if !out.converged() {
        return Err(CliError::Numerical("Petviashvili seed did not converge".into()));
    }
    Ok(out.g.iter().map(|g| -g).collect())
}

fn seed_from_file(path: &Path, grid: &PeriodicGrid) -> Result<Vec<f64>, CliError> {
    let w = read_columns(path, &["w"])?.swap_remove(0);
    if w.len() != grid.len() {
        return Err(CliError::Config(format!("{}: {} rows, grid has {} points", path.display(), w.len(), grid.len())));
    }
    Ok(w)
}

fn nie_verification(profile: &WaveProfile, residual: f64, half_length: f64) -> VerificationReport {
    let mut v = VerificationReport { nie_residual_inf: Some(residual), ..VerificationReport::default() };
    if profile.u_inf > 0.0 {
        match tail_wavenumber(profile, (5.0, half_length - 5.0)) {
            Ok(k) => v.tail_wavenumber = Some(k),
            Err(e) => v.notes.push(format!("tail wavenumber unavailable: {e}")),
        }
    }
    v
}

fn write_nie_bundle(
    out: &Path,
    name: &str,
    command: &str,
    grid: &PeriodicGrid,
    sol: &dualwave::nie::NieSolution,
    spectral: Option<&SpectralReport>,
    config: &impl Serialize,
) -> Result<(), CliError> {
    let b = Bundle::new(out, name)?;
    b.profile(&sol.profile)?;
    b.dual(&sol.profile.x, &sol.nu.nu, "nu")?;
    b.json(
        "report.json",
        &Report {
            command,
            status: "converged".into(),
            converged: true,
            solver: Some(&sol.report),
            verification: nie_verification(&sol.profile, sol.residual_inf, grid.half_length()),
            spectral,
            details: json!({ "u_inf": sol.u_inf, "min_margin": sol.min_margin, "quasi_newton": sol.qn }),
        },
    )?;
    b.json("config.json", config)?;
    b.commit()?;
    Ok(())
}

fn nie_name(u: f64) -> String {
    format!("nie_u{u:+.6}")
}

pub fn solve_nie_cmd(config: &Path, out: &Path) -> Result<bool, CliError> {
    let run: NieRun = config::load(config)?;
    let grid = grid_of(&run.grid)?;
    run.solver.validate()?;
    let seed = match &run.seed {
        Some(p) => seed_from_file(p, &grid)?,
        None => pv_seed(&grid)?,
    };
    let sol = solve_nie(&seed, run.u_inf, &run.solver, &grid)?;
    let spectral = if run.spectrum { Some(stability_matrix(&sol.w_hat, run.u_inf, &grid)?) } else { None };
    eprintln!("solve-nie: u = {} residual {:.3e} after {} iterations", run.u_inf, sol.residual_inf, sol.qn.iterations);
    write_nie_bundle(out, &nie_name(run.u_inf), "solve-nie", &grid, &sol, spectral.as_ref(), &run)?;
    Ok(true)
}

pub fn sweep_cmd(config: &Path, out: &Path) -> Result<bool, CliError> {
    let run: SweepRun = config::load(config)?;
    let grid = grid_of(&run.grid)?;
    run.solver.validate()?;
    if run.u_end.is_empty() {
        return Err(CliError::Config("u_end must list at least one end point".into()));
    }
    let seed = pv_seed(&grid)?;
    let threads = thread_cap()?;
    // independent directions run in parallel, at most `threads` at a time
    let mut outcomes: Vec<(f64, SweepOutcome)> = Vec::new();
    for chunk in run.u_end.chunks(threads) {
        let results: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&end| {
                    let (run, grid, seed) = (&run, &grid, &seed);
                    s.spawn(move || sweep_u_infinity(run.u_start, end, &run.solver, grid, seed, &run.spectra))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("sweep thread panicked")).collect()
        });
        for (&end, r) in chunk.iter().zip(results) {
            outcomes.push((end, r?));
        }
    }
    let mut written = std::collections::BTreeSet::new();
    let mut summary = Vec::new();
    let mut complete = true;
    for (end, outcome) in &outcomes {
        for p in &outcome.points {
            let name = nie_name(p.solution.u_inf);
            if written.insert(name.clone()) {
                write_nie_bundle(out, &name, "sweep", &grid, &p.solution, p.spectral.as_ref(), &run)?;
            }
        }
        complete &= outcome.status == SweepStatus::Completed;
        let reached: Vec<f64> = outcome.points.iter().map(|p| p.solution.u_inf).collect();
        eprintln!("sweep to {end}: {} points, {:?}", reached.len(), outcome.status);
        summary.push(json!({ "u_end": end, "status": outcome.status, "u_inf": reached }));
    }
    let b = Bundle::new(out, "sweep_summary")?;
    b.json("report.json", &json!({ "command": "sweep", "converged": complete, "directions": summary }))?;
    b.json("config.json", &run)?;
    b.commit()?;
    Ok(complete)
}

pub fn pv_cmd(config: &Path, out: &Path) -> Result<bool, CliError> {
    let run: PvRun = config::load(config)?;
    let grid = grid_of(&run.grid)?;
    let result = match &run.seed {
        Some(p) => pv_nie(&seed_from_file(p, &grid)?, run.u_inf, &grid, &run.pv)?,
        None if run.u_inf == 0.0 => pv_basic(&gaussian_seed(&grid), &grid, &run.pv)?,
        None => {
            let w0: Vec<f64> = gaussian_seed(&grid).iter().map(|g| -g).collect();
            pv_nie(&w0, run.u_inf, &grid, &run.pv)?
        }
    };
    let status = match result.status {
        PvStatus::Converged => "converged".to_string(),
        PvStatus::MaxIters => "max_iters".to_string(),
        PvStatus::Unstable { iteration } => format!("unstable at iteration {iteration}"),
    };
    eprintln!("pv: {status}, residual {:.3e}", result.residual());
    let b = Bundle::new(out, "pv")?;
    b.profile(&result.profile)?;
    let n = result.c_history.len().min(result.residual_history.len().saturating_sub(1));
    let iters: Vec<f64> = (1..=n).map(|k| k as f64).collect();
    write_columns(
        &b.path("history.csv"),
        &["iteration", "c_tilde", "residual"],
        &[&iters, &result.c_history[..n], &result.residual_history[1..=n]],
    )?;
    let (_, residual) = nie_residual(&result.profile.w(), run.u_inf, &grid);
    b.json(
        "report.json",
        &Report {
            command: "pv",
            status,
            converged: result.converged(),
            solver: None,
            verification: VerificationReport { nie_residual_inf: Some(residual), ..VerificationReport::default() },
            spectral: None,
            details: json!({
                "iterations": result.iterations,
                "pv_status": result.status,
                "c_history": result.c_history,
                "residual_history": result.residual_history,
            }),
        },
    )?;
    b.json("config.json", &run)?;
    b.commit()?;
    Ok(result.converged())
}

/// Uniform spacing of `x`, or a configuration error.
fn uniform_spacing(path: &Path, x: &[f64]) -> Result<f64, CliError> {
    if x.len() < 4 {
        return Err(CliError::Config(format!("{}: need at least 4 rows", path.display())));
    }
    let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    if x.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0)) {
        return Err(CliError::Config(format!("{}: x is not uniformly spaced", path.display())));
    }
    Ok(h)
}

pub fn evolve_cmd(config: &Path, out: &Path) -> Result<bool, CliError> {
    let run: EvolveRun = config::load(config)?;
    if !(run.dt > 0.0 && run.t_end > 0.0) {
        return Err(CliError::Config("dt and t_end must be positive".into()));
    }
    let stored = read_profile(&run.profile, run.c_profile)?;
    uniform_spacing(&run.profile, &stored.x)?;
    let wave = rescale_profile(&stored, run.c_target)?;
    let on_site: Vec<usize> = (0..wave.len()).filter(|&i| (wave.x[i] - wave.x[i].round()).abs() < 1e-9).collect();
    let sites: Vec<f64> = on_site.iter().map(|&i| wave.x[i].round()).collect();
    if sites.windows(2).any(|w| (w[1] - w[0] - 1.0).abs() > 1e-9) {
        return Err(CliError::Config("profile grid must contain every integer site in its range".into()));
    }
    let u0: Vec<f64> = on_site.iter().map(|&i| wave.f[i]).collect();
    let steps = (run.t_end / run.dt).round() as usize;
    let state = LatticeState::new(u0.clone(), Boundary::Periodic)?;
    let end = rk4_evolve(&state, run.dt, steps)?;
    let shift = run.c_target * end.t;
    let err = translation_error(&wave, &sites, &end.u, shift)?;
    eprintln!("evolve: {} sites to t = {:.3}, translation error {err:.3e}", sites.len(), end.t);
    let b = Bundle::new(out, "evolve")?;
    b.profile(&WaveProfile::new(sites.clone(), end.u.clone(), wave.u_inf, wave.c))?;
    write_columns(&b.path("lattice.csv"), &["site", "u0", "u_final"], &[&sites, &u0, &end.u])?;
    b.json(
        "report.json",
        &Report {
            command: "evolve",
            status: "completed".into(),
            converged: true,
            solver: None,
            verification: VerificationReport::default(),
            spectral: None,
            details: json!({ "t_end": end.t, "steps": steps, "shift": shift, "translation_error": err, "c": wave.c }),
        },
    )?;
    b.json("config.json", &run)?;
    b.commit()?;
    Ok(true)
}

pub fn verify_cmd(config: &Path, out: &Path) -> Result<bool, CliError> {
    let run: VerifyRun = config::load(config)?;
    if run.meshes.len() < 2 || run.meshes.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(CliError::Config("meshes must list at least two sizes, each double the previous".into()));
    }
    let mut sols = Vec::new();
    for &m in &run.meshes {
        let (mesh, sol, verification) = run_dde(&run.run, m)?;
        eprintln!("verify: m = {m} {} ({} iterations)", sol.status.as_str(), sol.report.iterations);
        write_dde_bundle(out, &format!("dde_m{m}"), &DdeRun { elements: m, ..run.run.clone() }, &mesh, &sol, verification.clone())?;
        sols.push((sol, verification));
    }
    let reference = &sols[sols.len() - 1].0.profile;
    let mut d = Vec::new();
    for k in 0..sols.len() - 1 {
        d.push(refinement_diff(&sols[k].0.profile, &sols[k + 1].0.profile, reference)?);
    }
    let all_converged = sols.iter().all(|(s, _)| s.converged());
    let ms: Vec<f64> = run.meshes.iter().map(|&m| m as f64).collect();
    let errs: Vec<f64> = sols.iter().map(|(_, v)| v.err_max_interior.unwrap_or(f64::NAN)).collect();
    let mut d_col = d.clone();
    d_col.push(f64::NAN);
    let b = Bundle::new(out, "verify")?;
    write_columns(&b.path("refinement.csv"), &["elements", "err_max_interior", "d_percent"], &[&ms, &errs, &d_col])?;
    b.json(
        "report.json",
        &Report {
            command: "verify",
            status: if all_converged { "converged".into() } else { "not_converged".into() },
            converged: all_converged,
            solver: None,
            verification: VerificationReport { d_of_m: d.first().copied(), err_max_interior: errs.last().copied(), ..VerificationReport::default() },
            spectral: None,
            details: json!({ "meshes": run.meshes, "d_percent": d, "err_max_interior": errs }),
        },
    )?;
    b.json("config.json", &run)?;
    b.commit()?;
    Ok(all_converged)
}

pub fn spectrum_cmd(config: &Path, out: &Path) -> Result<bool, CliError> {
    let run: SpectrumRun = config::load(config)?;
    let p = read_profile(&run.profile, -0.5)?;
    let h = uniform_spacing(&run.profile, &p.x)?;
    let half_length = -p.x[0];
    if ((p.x[0] + p.len() as f64 * h) - half_length).abs() > 1e-9 {
        return Err(CliError::Config("profile must cover one period [-L, L) of a periodic grid".into()));
    }
    let grid = PeriodicGrid::new(half_length, p.len())?;
    let report = stability_matrix(&p.w(), p.u_inf, &grid)?;
    eprintln!("spectrum: u = {} kappa1 {:.2e} lowest {:.5?}", p.u_inf, report.kappa1, report.lowest);
    let b = Bundle::new(out, "spectrum")?;
    let idx: Vec<f64> = (0..report.kappa.len()).map(|k| k as f64).collect();
    write_columns(&b.path("kappa.csv"), &["index", "kappa"], &[&idx, &report.kappa])?;
    b.json(
        "report.json",
        &Report {
            command: "spectrum",
            status: "completed".into(),
            converged: true,
            solver: None,
            verification: VerificationReport::default(),
            spectral: Some(&report),
            details: json!({ "u_inf": p.u_inf, "points": p.len() }),
        },
    )?;
    b.json("config.json", &run)?;
    b.commit()?;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_interpolation_clamps() {
        let x = [0.0, 1.0, 3.0];
        let y = [1.0, 3.0, -1.0];
        assert_eq!(interp_linear(&x, &y, -5.0), 1.0);
        assert_eq!(interp_linear(&x, &y, 0.5), 2.0);
        assert_eq!(interp_linear(&x, &y, 2.0), 1.0);
        assert_eq!(interp_linear(&x, &y, 9.0), -1.0);
    }
}
