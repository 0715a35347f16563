//! Property-based invariants for the temporal and functional layers.

use proptest::prelude::*;
use wed_core::functional::{embed, eval_functional, FreeVariables, WedProblem};
use wed_core::spatial::{Nonlinearity, SpatialDomain, StateVector};
use wed_core::temporal::{discrete_derivative, InterpMode, TimeGrid, Trajectory, WeightVector};

fn scalars(vals: &[f64]) -> Vec<StateVector> {
    vals.iter().map(|&v| StateVector::scalar(v)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn delta_commutes_with_linear_combinations(
        v in prop::collection::vec(-10.0f64..10.0, 6..20),
        w_seed in prop::collection::vec(-10.0f64..10.0, 6..20),
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
        k in 1usize..4,
    ) {
        let len = v.len().min(w_seed.len());
        prop_assume!(len > k);
        let tau = 0.125;
        let v = &v[..len];
        let w = &w_seed[..len];
        let combo: Vec<f64> = v.iter().zip(w).map(|(x, y)| a * x + b * y).collect();
        let d_combo = discrete_derivative(&scalars(&combo), tau, k).unwrap();
        let dv = discrete_derivative(&scalars(v), tau, k).unwrap();
        let dw = discrete_derivative(&scalars(w), tau, k).unwrap();
        let scale: f64 = combo.iter().fold(1.0_f64, |m, x| m.max(x.abs())) / tau.powi(k as i32);
        for i in 0..d_combo.len() {
            let expect = a * dv[i].dofs()[0] + b * dw[i].dofs()[0];
            prop_assert!((d_combo[i].dofs()[0] - expect).abs() <= 64.0 * f64::EPSILON * scale.max(1.0));
        }
    }

    #[test]
    fn interpolants_reproduce_nodes(
        vals in prop::collection::vec(-10.0f64..10.0, 5..15),
        t_final in 0.5f64..5.0,
    ) {
        let n = vals.len() - 1;
        let grid = TimeGrid::new(t_final, n.max(4)).unwrap();
        prop_assume!(n >= 4);
        let traj = Trajectory::new(grid, scalars(&vals)).unwrap();
        for i in 0..=n {
            let t = grid.node(i);
            let a = traj.interpolate(t, InterpMode::Affine).unwrap();
            let c = traj.interpolate(t, InterpMode::BackwardConstant).unwrap();
            prop_assert_eq!(a.dofs()[0], vals[i]);
            prop_assert_eq!(c.dofs()[0], vals[i]);
        }
    }

    #[test]
    fn weight_recurrence_over_random_parameters(
        n in 4usize..400,
        eps in 0.01f64..0.49,
        t_final in 0.5f64..5.0,
    ) {
        let grid = TimeGrid::new(t_final, n).unwrap();
        let w = WeightVector::new(&grid, eps).unwrap();
        prop_assert_eq!(w.get(0), 1.0);
        for i in 1..=n {
            let r = (w.get(i) - w.get(i - 1)) / grid.tau() + w.get(i) / eps;
            prop_assert!(r.abs() <= 1e-12, "residual {} at i={}", r, i);
            prop_assert!(w.get(i) > 0.0 && w.get(i) < w.get(i - 1));
        }
    }

    #[test]
    fn embedding_pins_constraints_exactly(
        u0 in -3.0f64..3.0,
        u1 in -3.0f64..3.0,
        free in prop::collection::vec(-3.0f64..3.0, 7),
        eps in 0.05f64..0.45,
    ) {
        let prob = WedProblem::new(
            SpatialDomain::scalar(),
            Nonlinearity::power(4.0).unwrap(),
            StateVector::scalar(u0),
            StateVector::scalar(u1),
            TimeGrid::new(2.0, 8).unwrap(),
            eps,
        ).unwrap();
        let traj = embed(&FreeVariables::new(scalars(&free)), &prob).unwrap();
        prop_assert_eq!(traj.state(0).dofs()[0], u0);
        let tau = prob.grid().tau();
        let du1 = (traj.state(1).dofs()[0] - traj.state(0).dofs()[0]) / tau;
        // u_1 = u0 + tau * u1 makes the first discrete velocity exact up to
        // one rounding of the fused expression
        prop_assert!((du1 - u1).abs() <= 4.0 * f64::EPSILON * (1.0 + u1.abs() + u0.abs() / tau));
    }

    #[test]
    fn functional_nonnegative_and_convex(
        a_vals in prop::collection::vec(-2.0f64..2.0, 9),
        b_vals in prop::collection::vec(-2.0f64..2.0, 9),
        eps in 0.05f64..0.45,
        lam in 0.0f64..1.0,
    ) {
        let prob = WedProblem::new(
            SpatialDomain::scalar(),
            Nonlinearity::power(4.0).unwrap(),
            StateVector::scalar(0.5),
            StateVector::scalar(-0.25),
            TimeGrid::new(2.0, 10).unwrap(),
            eps,
        ).unwrap();
        let fa = FreeVariables::new(scalars(&a_vals));
        let fb = FreeVariables::new(scalars(&b_vals));
        let ia = eval_functional(&embed(&fa, &prob).unwrap(), &prob);
        let ib = eval_functional(&embed(&fb, &prob).unwrap(), &prob);
        prop_assert!(ia >= 0.0 && ib >= 0.0);
        let mut mix = FreeVariables::new(scalars(&vec![0.0; 9]));
        mix.axpy(lam, &fa);
        mix.axpy(1.0 - lam, &fb);
        let im = eval_functional(&embed(&mix, &prob).unwrap(), &prob);
        prop_assert!(im <= lam * ia + (1.0 - lam) * ib + 1e-10 * (ia + ib + 1.0));
    }
}
