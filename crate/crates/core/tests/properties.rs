use dualwave::dde::{convexity_check, fhat_at_gauss, DdeConfig, DualFieldDDE, FemMesh};
use dualwave::kernel::{build_k_matrix, KOperator, PeriodicGrid};
use dualwave::lattice::{rescale_profile, rk4_evolve, Boundary, LatticeState};
use dualwave::nie::{NieConfig, NieObjective};
use dualwave::petviashvili::{gaussian_seed, pv_basic, PvConfig};
use dualwave::verify::gradient_check;
use dualwave::{BaseState, Provenance, WaveProfile};
use proptest::prelude::*;

fn grid() -> PeriodicGrid {
    PeriodicGrid::new(5.0, 100).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn k_is_self_adjoint(v in prop::collection::vec(-2.0..2.0f64, 100), w in prop::collection::vec(-2.0..2.0f64, 100)) {
        let op = KOperator::new(&grid());
        let lhs = dot(&op.apply(&v), &w);
        let rhs = dot(&v, &op.apply(&w));
        prop_assert!((lhs - rhs).abs() < 1e-11);
    }

    #[test]
    fn fft_matches_dense_matrix(v in prop::collection::vec(-2.0..2.0f64, 100)) {
        let g = grid();
        let dense = build_k_matrix(&g).matvec(&v);
        let fast = KOperator::new(&g).apply(&v);
        for (a, b) in dense.iter().zip(&fast) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn resolvent_inverts_i_plus_uk(v in prop::collection::vec(-1.0..1.0f64, 100), u in -0.45..2.0f64) {
        let op = KOperator::new(&grid());
        let x = op.solve_i_plus_uk(&v, u).unwrap();
        let kx = op.apply(&x);
        for j in 0..v.len() {
            prop_assert!((x[j] + u * kx[j] - v[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn rescaling_composes(c1 in prop_oneof![-3.0..-0.1f64, 0.1..3.0f64], c2 in prop_oneof![-3.0..-0.1f64, 0.1..3.0f64]) {
        let p = WaveProfile::new(vec![0.0, 1.0, 2.0], vec![0.3, -1.2, 0.7], 0.3, -0.5);
        let two_step = rescale_profile(&rescale_profile(&p, c1).unwrap(), c2).unwrap();
        let direct = rescale_profile(&p, c2).unwrap();
        for (a, b) in two_step.f.iter().zip(&direct.f) {
            prop_assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn periodic_lattice_conserves_mass(u in prop::collection::vec(-1.0..1.0f64, 8..40)) {
        let mass: f64 = u.iter().sum();
        let s = LatticeState::new(u, Boundary::Periodic).unwrap();
        let e = rk4_evolve(&s, 0.01, 50).unwrap();
        prop_assert!((e.u.iter().sum::<f64>() - mass).abs() < 1e-12);
    }

    #[test]
    fn zero_dual_field_returns_the_base_state(vals in prop::collection::vec(-2.0..2.0f64, 1..8), a in 1e-3..1e6f64) {
        let mesh = FemMesh::new(3.0, 30).unwrap();
        let n = mesh.gauss_count();
        let base: Vec<f64> = (0..n).map(|k| vals[k % vals.len()]).collect();
        let fbar = BaseState::new(base.clone(), Provenance::Analytic);
        let zero = DualFieldDDE::zeros(&mesh);
        let fhat = fhat_at_gauss(&mesh, &zero, &fbar, a).unwrap();
        for (p, q) in fhat.iter().zip(&base) {
            prop_assert!((p - q).abs() < 1e-12 * (1.0 + q.abs()));
        }
        let chk = convexity_check(&mesh, &zero, &DdeConfig { a, ..DdeConfig::default() });
        prop_assert!(chk.ok && (chk.min_ratio - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nie_gradient_matches_differences(nu in prop::collection::vec(-0.5..0.5f64, 100), u in -0.4..1.5f64) {
        let g = grid();
        let pv = pv_basic(&gaussian_seed(&g), &g, &PvConfig::default()).unwrap();
        let wbar: Vec<f64> = pv.g.iter().map(|v| -v).collect();
        let obj = NieObjective::new(&wbar, u, &NieConfig::default(), &g).unwrap();
        let chk = gradient_check(&obj, &nu, 1e-5).unwrap();
        prop_assert!(!chk.penalty_hit && chk.max_rel_error < 1e-6);
    }
}
