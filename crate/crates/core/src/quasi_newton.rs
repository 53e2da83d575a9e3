//! BFGS minimization with a dense inverse-Hessian approximation and an
//! Armijo backtracking line search that rejects penalty-valued trials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smooth objective with a value oracle and an analytic gradient.
pub trait Objective {
    fn dim(&self) -> usize;

    /// Objective value; may return the penalty sentinel outside the domain.
    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Values at or above this sentinel mark points outside the domain.
    fn penalty(&self) -> Option<f64> {
        None
    }

    fn admissible(&self, v: f64) -> bool {
        v.is_finite() && self.penalty().is_none_or(|p| v < p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Gtol,
    MaxIters,
    LineSearchFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QnReport {
    pub iterations: usize,
    pub evaluations: usize,
    pub grad_inf: f64,
    pub value: f64,
    pub reason: Termination,
    pub skipped_updates: usize,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense symmetric inverse-Hessian approximation.
struct InverseHessian {
    n: usize,
    h: Vec<f64>,
}

impl InverseHessian {
    fn scaled_identity(n: usize, scale: f64) -> Self {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = scale;
        }
        Self { n, h }
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.h.chunks_exact(self.n).map(|row| dot(row, v)).collect()
    }

    /// `H <- (I - r s y') H (I - r y s') + r s s'` with `r = 1 / s'y`.
    fn update(&mut self, s: &[f64], y: &[f64], sy: f64) {
        let n = self.n;
        let r = 1.0 / sy;
        let hy = self.apply(y);
        let yhy = dot(y, &hy);
        let c = r * r * yhy + r;
        for i in 0..n {
            let row = &mut self.h[i * n..(i + 1) * n];
            let (si, hyi) = (s[i], hy[i]);
            for j in 0..n {
                row[j] += c * si * s[j] - r * (hyi * s[j] + si * hy[j]);
            }
        }
    }
}

/// Minimizes `obj` from `x0` until `‖grad‖∞ <= gtol`.
///
/// The first direction is the unit-sup-norm steepest descent step; after
/// the first accepted step the inverse Hessian starts from
/// `(s'y / y'y) I`. Pairs failing `s'y > 1e-12 ‖s‖‖y‖` are skipped. When the
/// line search fails the approximation is reset once before giving up.
pub fn minimize<O: Objective + ?Sized>(obj: &O, x0: &[f64], gtol: f64, max_iters: usize) -> Result<(Vec<f64>, QnReport)> {
    let n = obj.dim();
    if x0.len() != n {
        return Err(Error::InvalidInput(format!("start has length {}, expected {n}", x0.len())));
    }
    let mut x = x0.to_vec();
    let mut f = obj.value(&x);
    let mut evaluations = 1;
    if !obj.admissible(f) {
        return Err(Error::InvalidStart);
    }
    let mut g = obj.gradient(&x);
    let mut hinv: Option<InverseHessian> = None;
    let mut skipped = 0;
    let mut iterations = 0;
    let mut reason = Termination::MaxIters;
    let mut fresh_reset = false;
    loop {
        let gn = inf_norm(&g);
        if gn <= gtol {
            reason = Termination::Gtol;
            break;
        }
        if iterations >= max_iters {
            break;
        }
        let mut p: Vec<f64> = match &hinv {
            Some(h) => h.apply(&g).iter().map(|v| -v).collect(),
            None => g.iter().map(|v| -v / gn).collect(),
        };
        let mut slope = dot(&g, &p);
        if !(slope < 0.0) {
            // not a descent direction: fall back to steepest descent
            hinv = None;
            p = g.iter().map(|v| -v / gn).collect();
            slope = dot(&g, &p);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let xt: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + t * b).collect();
            let ft = obj.value(&xt);
            evaluations += 1;
            if obj.admissible(ft) && ft <= f + ARMIJO_C1 * t * slope {
                accepted = Some((xt, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fn_)) = accepted else {
            if hinv.is_some() && !fresh_reset {
                hinv = None;
                fresh_reset = true;
                continue;
            }
            reason = Termination::LineSearchFailure;
            break;
        };
        fresh_reset = false;
        let gnew = obj.gradient(&xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let (ns, ny) = (dot(&s, &s).sqrt(), dot(&y, &y).sqrt());
        if sy > 1e-12 * ns * ny {
            let h = hinv.get_or_insert_with(|| InverseHessian::scaled_identity(n, sy / (ny * ny)));
            h.update(&s, &y, sy);
        } else {
            skipped += 1;
        }
        x = xn;
        f = fn_;
        g = gnew;
        iterations += 1;
    }
    let grad_inf = inf_norm(&g);
    Ok((x, QnReport { iterations, evaluations, grad_inf, value: f, reason, skipped_updates: skipped }))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        b: Vec<f64>,
        scale: f64,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.b.len()
        }
        fn value(&self, x: &[f64]) -> f64 {
            0.5 * self.scale * x.iter().zip(&self.b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            x.iter().zip(&self.b).map(|(a, b)| self.scale * (a - b)).collect()
        }
    }

    struct Rosenbrock;

    impl Objective for Rosenbrock {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> f64 {
            (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            let t = x[1] - x[0] * x[0];
            vec![-2.0 * (1.0 - x[0]) - 400.0 * x[0] * t, 200.0 * t]
        }
    }

    /// Quadratic bowl with a wall at `x0 > 1`.
    struct Walled;

    impl Objective for Walled {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64]) -> f64 {
            if x[0] > 1.0 {
                1e30
            } else {
                (x[0] - 0.9).powi(2)
            }
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            vec![2.0 * (x[0] - 0.9)]
        }
        fn penalty(&self) -> Option<f64> {
            Some(1e30)
        }
    }

    #[test]
    fn quadratic_is_solved_quickly() {
        let b = vec![1.0, -2.0, 0.5, 3.0, 0.0];
        let q = Quadratic { b: b.clone(), scale: 1.0 };
        let (x, rep) = minimize(&q, &[0.0; 5], 1e-10, 100).unwrap();
        assert_eq!(rep.reason, Termination::Gtol);
        assert!(rep.iterations <= 7);
        assert!(x.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-9));
    }

    #[test]
    fn rosenbrock_from_standard_start() {
        let (x, rep) = minimize(&Rosenbrock, &[-1.2, 1.0], 1e-9, 100).unwrap();
        assert_eq!(rep.reason, Termination::Gtol, "{rep:?}");
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn penalty_trials_are_never_accepted() {
        let (x, rep) = minimize(&Walled, &[-3.0], 1e-10, 100).unwrap();
        assert_eq!(rep.reason, Termination::Gtol);
        assert!((x[0] - 0.9).abs() < 1e-9);
        assert!(matches!(minimize(&Walled, &[2.0], 1e-10, 10), Err(Error::InvalidStart)));
    }

    #[test]
    fn scaling_the_objective_keeps_the_iterates() {
        let b = vec![1.0, -2.0, 0.5];
        let x0 = [0.3, 0.1, -0.7];
        for iters in 1..4 {
            let (x1, _) = minimize(&Quadratic { b: b.clone(), scale: 1.0 }, &x0, 0.0, iters).unwrap();
            let (x4, _) = minimize(&Quadratic { b: b.clone(), scale: 4.0 }, &x0, 0.0, iters).unwrap();
            assert!(x1.iter().zip(&x4).all(|(p, q)| (p - q).abs() < 1e-14));
        }
    }
}
