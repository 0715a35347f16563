//! Independent-oracle cross checks: dense normal-equation solve for the
//! quadratic potential, path equivalence between the two trajectory solvers,
//! recovery-sequence gap decay against fine quadrature, finite-difference
//! gradient checks on random probes, and scaling invariance of the argmin.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wed_core::diagnostics::{continuous_functional, recovery_trajectory};
use wed_core::functional::{embed, eval_functional, gradient, hessian_apply, FreeVariables, Objective, WedProblem};
use wed_core::solver::{minimize, minimize_objective, solve_el, SolverOptions};
use wed_core::spatial::{InitialDatum, Nonlinearity, SpatialDomain, StateVector};
use wed_core::temporal::TimeGrid;

fn scalar_problem(nl: Nonlinearity, n: usize, t_final: f64, eps: f64, u0: f64, u1: f64) -> WedProblem {
    WedProblem::new(
        SpatialDomain::scalar(),
        nl,
        StateVector::scalar(u0),
        StateVector::scalar(u1),
        TimeGrid::new(t_final, n).unwrap(),
        eps,
    )
    .unwrap()
}

/// Dense Gaussian elimination with partial pivoting, local to the oracle.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if a[i][k].abs() > a[p][k].abs() {
                p = i;
            }
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    for k in (0..n).rev() {
        for j in k + 1..n {
            b[k] -= a[k][j] * b[j];
        }
        b[k] /= a[k][k];
    }
    b
}

/// With the quadratic potential the objective is a quadratic form; assemble
/// its normal equations directly from the definition and solve densely.
#[test]
fn quadratic_minimizer_matches_dense_normal_equations() {
    let n = 40;
    let t_final = 3.0;
    let eps = 0.3;
    let (u0, u1) = (1.0, 0.0);
    let prob = scalar_problem(Nonlinearity::Quadratic, n, t_final, eps, u0, u1);
    let tau = prob.grid().tau();
    let rho = prob.weights().rho();

    // I = sum_i tau rho_i/2 (c . u)^2 + sum_i tau/eps^2 rho_{i+2} u_i^2 / 2
    // with c = (1, -2, 1)/tau^2 over (u_i, u_{i-1}, u_{i-2}).
    let nf = n - 1; // free states u_2..u_n
    let mut q = vec![vec![0.0; nf]; nf];
    let mut b = vec![0.0; nf];
    let fixed = [u0, u0 + tau * u1]; // u_0, u_1
    let c = [1.0 / (tau * tau), -2.0 / (tau * tau), 1.0 / (tau * tau)];
    for i in 2..=n {
        let w = tau * rho[i];
        let idx = [i as isize, i as isize - 1, i as isize - 2];
        for (a_pos, &ja) in idx.iter().enumerate() {
            for (b_pos, &jb) in idx.iter().enumerate() {
                let coeff = w * c[a_pos] * c[b_pos];
                match (ja >= 2, jb >= 2) {
                    (true, true) => q[ja as usize - 2][jb as usize - 2] += coeff,
                    (true, false) => b[ja as usize - 2] += coeff * fixed[jb as usize],
                    _ => {}
                }
            }
        }
    }
    for i in 2..=n - 2 {
        q[i - 2][i - 2] += tau / (eps * eps) * rho[i + 2];
    }
    let neg_b: Vec<f64> = b.iter().map(|v| -v).collect();
    let x = dense_solve(q, neg_b);

    let mut opts = SolverOptions::default();
    opts.tol_grad = 1e-12;
    let res = minimize(&prob, &opts, None).unwrap();
    assert!(res.converged);
    let mut worst = 0.0_f64;
    for (k, xv) in x.iter().enumerate() {
        worst = worst.max((res.traj.state(k + 2).dofs()[0] - xv).abs());
    }
    assert!(worst <= 1e-10, "dense oracle differs by {worst}");

    // the Euler-Lagrange route must land on the same point
    let res_el = solve_el(&prob, &SolverOptions::default().with_tol(1e-11)).unwrap();
    assert!(res_el.converged);
    let mut worst = 0.0_f64;
    for (k, xv) in x.iter().enumerate() {
        worst = worst.max((res_el.traj.state(k + 2).dofs()[0] - xv).abs());
    }
    assert!(worst <= 1e-10, "EL route differs from dense oracle by {worst}");
}

#[test]
fn path_equivalence_on_interval_domain() {
    let domain = SpatialDomain::interval(8.0, 15).unwrap();
    let u0 = InitialDatum::Bump { radius: 2.0 }.build(domain).unwrap();
    let u1 = InitialDatum::Zero.build(domain).unwrap();
    let grid = TimeGrid::new(3.0, 24).unwrap();
    for &eps in &[0.4, 0.1] {
        let prob = WedProblem::new(
            domain,
            Nonlinearity::power(4.0).unwrap(),
            u0.clone(),
            u1.clone(),
            grid,
            eps,
        )
        .unwrap();
        let opts = SolverOptions::default_for(&domain);
        let a = minimize(&prob, &opts, None).unwrap();
        let b = solve_el(&prob, &opts).unwrap();
        assert!(a.converged, "minimize failed to converge at eps={eps}");
        assert!(b.converged, "solve_el failed to converge at eps={eps}");
        let mut sup = 0.0_f64;
        for (x, y) in a.traj.states().iter().zip(b.traj.states()) {
            sup = sup.max(x.sub(y).norm());
        }
        assert!(sup <= 1e-6, "paths differ by {sup} at eps={eps}");
    }
}

#[test]
fn recovery_gap_decays_with_order_near_one() {
    let eps = 0.2;
    let t_final = 3.0;
    let nl = Nonlinearity::power(4.0).unwrap();
    let candidate = |t: f64| StateVector::scalar((2.0 * t).cos());
    let accel = |t: f64| StateVector::scalar(-4.0 * (2.0 * t).cos());
    let exact = continuous_functional(candidate, accel, &nl, eps, t_final, 60001);

    let mut gaps = Vec::new();
    for &n in &[96usize, 192, 384, 768] {
        let prob = scalar_problem(nl.clone(), n, t_final, eps, 1.0, 0.0);
        let traj = recovery_trajectory(candidate, &prob, 5).unwrap();
        gaps.push(eval_functional(&traj, &prob) - exact);
    }
    for w in gaps.windows(2) {
        assert!(
            w[1].abs() < w[0].abs(),
            "recovery gap not decreasing: {:?}",
            gaps
        );
    }
    let orders: Vec<f64> = gaps
        .windows(2)
        .map(|w| (w[0].abs() / w[1].abs()).log2())
        .collect();
    let mean = orders.iter().sum::<f64>() / orders.len() as f64;
    assert!(mean >= 0.8, "empirical order {mean} from {orders:?}");
}

#[test]
fn functional_gradient_fd_on_random_probes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    // scalar probes
    let prob = scalar_problem(Nonlinearity::power(4.0).unwrap(), 25, 2.0, 0.3, 0.8, -0.2);
    for trial in 0..5 {
        let free = FreeVariables::new(
            (0..prob.free_states())
                .map(|_| StateVector::scalar(rng.gen_range(-1.0..1.0)))
                .collect(),
        );
        let dir = FreeVariables::new(
            (0..prob.free_states())
                .map(|_| StateVector::scalar(rng.gen_range(-1.0..1.0)))
                .collect(),
        );
        let traj = embed(&free, &prob).unwrap();
        let g = gradient(&traj, &prob);
        let s = 1e-5;
        let mut fp = free.clone();
        fp.axpy(s, &dir);
        let mut fm = free.clone();
        fm.axpy(-s, &dir);
        let fd = (eval_functional(&embed(&fp, &prob).unwrap(), &prob)
            - eval_functional(&embed(&fm, &prob).unwrap(), &prob))
            / (2.0 * s);
        let gv = g.weighted_dot(&dir, prob.grid().tau());
        let rel = (fd - gv).abs() / gv.abs().max(1e-300);
        assert!(rel <= 1e-6, "trial {trial}: rel error {rel}");
    }

    // interval probes with Hessian symmetry and nonnegativity
    let domain = SpatialDomain::interval(4.0, 8).unwrap();
    let grid = TimeGrid::new(1.5, 12).unwrap();
    let u0 = InitialDatum::Bump { radius: 2.0 }.build(domain).unwrap();
    let u1 = InitialDatum::Zero.build(domain).unwrap();
    let prob =
        WedProblem::new(domain, Nonlinearity::power(4.0).unwrap(), u0, u1, grid, 0.25).unwrap();
    let tau = prob.grid().tau();
    let mut rand_free = |rng: &mut ChaCha8Rng| {
        FreeVariables::new(
            (0..prob.free_states())
                .map(|_| {
                    StateVector::new(
                        domain,
                        (0..domain.dof()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    )
                    .unwrap()
                })
                .collect(),
        )
    };
    for trial in 0..5 {
        let free = rand_free(&mut rng);
        let dir = rand_free(&mut rng);
        let other = rand_free(&mut rng);
        let traj = embed(&free, &prob).unwrap();
        let g = gradient(&traj, &prob);
        let s = 1e-5;
        let mut fp = free.clone();
        fp.axpy(s, &dir);
        let mut fm = free.clone();
        fm.axpy(-s, &dir);
        let fd = (eval_functional(&embed(&fp, &prob).unwrap(), &prob)
            - eval_functional(&embed(&fm, &prob).unwrap(), &prob))
            / (2.0 * s);
        let gv = g.weighted_dot(&dir, tau);
        let rel = (fd - gv).abs() / gv.abs().max(1e-300);
        assert!(rel <= 1e-6, "interval trial {trial}: rel error {rel}");

        let ha = hessian_apply(&traj, &dir, &prob);
        let hb = hessian_apply(&traj, &other, &prob);
        let sym = (ha.weighted_dot(&other, tau) - hb.weighted_dot(&dir, tau)).abs();
        let scale = ha.weighted_norm(tau) * other.weighted_norm(tau);
        assert!(sym <= 1e-12 * scale.max(1.0), "symmetry defect {sym}");
        assert!(ha.weighted_dot(&dir, tau) >= -1e-12 * scale.max(1.0));
    }
}

/// The implemented sum equals half the Riemann-sum form of the conjectured
/// integrand; the argmin must be invariant under that positive rescaling.
#[test]
fn argmin_invariant_under_objective_scaling() {
    let prob = scalar_problem(Nonlinearity::power(4.0).unwrap(), 50, 3.0, 0.2, 1.0, 0.0);
    let mut opts = SolverOptions::default();
    opts.tol_grad = 1e-11;
    let base = minimize(&prob, &opts, None).unwrap();
    assert!(base.converged);

    let doubled = Objective::with_scale(&prob, 2.0);
    let mut opts2 = SolverOptions::default();
    opts2.tol_grad = 2e-11; // gradient scale doubles with the objective
    let scaled = minimize_objective(&doubled, &opts2, None).unwrap();
    assert!(scaled.converged);
    assert!((scaled.objective - base.objective).abs() <= 1e-12 * base.objective.max(1.0));

    let mut sup = 0.0_f64;
    for (x, y) in base.traj.states().iter().zip(scaled.traj.states()) {
        sup = sup.max(x.sub(y).sup_norm());
    }
    assert!(sup <= 1e-8, "argmin moved by {sup} under scaling");

    // and the doubled objective is indeed pointwise twice the base one
    let traj = prob.affine_trajectory();
    let v1 = eval_functional(&traj, &prob);
    let v2 = Objective::with_scale(&prob, 2.0).value(&traj);
    assert!((v2 - 2.0 * v1).abs() <= 1e-14 * v2.abs());
}

#[test]
fn two_random_starts_share_the_argmin() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let prob = scalar_problem(Nonlinearity::power(4.0).unwrap(), 60, 3.0, 0.15, 1.0, 0.0);
    let opts = SolverOptions::default();
    let mut runs = Vec::new();
    for _ in 0..2 {
        let start = FreeVariables::new(
            (0..prob.free_states())
                .map(|_| StateVector::scalar(rng.gen_range(-1.0..1.0)))
                .collect(),
        );
        let res = minimize(&prob, &opts, Some(start)).unwrap();
        assert!(res.converged);
        runs.push(res.traj);
    }
    let mut sup = 0.0_f64;
    for (x, y) in runs[0].states().iter().zip(runs[1].states()) {
        sup = sup.max(x.sub(y).sup_norm());
    }
    assert!(sup <= 1e-8, "starts disagree by {sup}");
}
