//! Cross-module invariant suite behind `wed validate`.
//!
//! Each check computes a measured value against a pinned threshold; the
//! command prints one verdict line per check, writes the same table as CSV,
//! and exits nonzero if anything fails. `--fault-grad` flips the sign of the
//! functional gradient inside the finite-difference check, proving that the
//! validator catches a broken gradient rather than rubber-stamping it.

use std::path::Path;

use wed_core::diagnostics::{
    continuous_functional, el_residual, final_bc_residual, recovery_trajectory,
};
use wed_core::functional::{
    embed, eval_functional, FreeVariables, Objective, WedProblem,
};
use wed_core::solver::{
    minimize, minimize_objective, rk4_energy_drift, solve_el, solve_limit, SolverOptions,
};
use wed_core::spatial::{
    grad_phi, hess_phi_apply, phi, InitialDatum, Nonlinearity, SpatialDomain, StateVector,
};
use wed_core::temporal::{backward_mean, discrete_derivative, InterpMode, TimeGrid, TimeSampled, Trajectory, WeightVector};

use crate::commands::CliError;
use crate::output::{fmt_float, out_path, write_file};

pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub threshold: String,
    pub pass: bool,
}

fn upper(name: &'static str, measured: f64, threshold: f64) -> Check {
    Check { name, measured, threshold: format!("<= {threshold:e}"), pass: measured <= threshold }
}

fn lower(name: &'static str, measured: f64, threshold: f64) -> Check {
    Check { name, measured, threshold: format!(">= {threshold:e}"), pass: measured >= threshold }
}

fn in_range(name: &'static str, measured: f64, lo: f64, hi: f64) -> Check {
    Check {
        name,
        measured,
        threshold: format!("in [{lo}, {hi}]"),
        pass: (lo..=hi).contains(&measured),
    }
}

struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 20) as f64 / (1u64 << 44) as f64) * 2.0 - 1.0
    }
}

fn scalar_problem(nl: Nonlinearity, n: usize, t_final: f64, eps: f64, u0: f64, u1: f64) -> WedProblem {
    WedProblem::new(
        SpatialDomain::scalar(),
        nl,
        StateVector::scalar(u0),
        StateVector::scalar(u1),
        TimeGrid::new(t_final, n).unwrap(),
        eps,
    )
    .expect("validation problem is well formed")
}

fn random_free(prob: &WedProblem, rng: &mut Lcg) -> FreeVariables {
    let d = prob.domain();
    FreeVariables::new(
        (0..prob.free_states())
            .map(|_| StateVector::new(d, (0..d.dof()).map(|_| rng.next()).collect()).unwrap())
            .collect(),
    )
}

fn sup_distance(a: &Trajectory, b: &Trajectory) -> f64 {
    a.states()
        .iter()
        .zip(b.states())
        .fold(0.0_f64, |m, (x, y)| m.max(x.sub(y).sup_norm()))
}

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

pub fn run_checks(fault_grad: bool) -> Vec<Check> {
    let mut checks = Vec::new();
    let p4 = Nonlinearity::power(4.0).unwrap();

    // --- temporal layer -------------------------------------------------
    {
        let mut worst = 0.0_f64;
        for &(n, eps) in &[(600usize, 0.05), (600, 0.4), (150, 0.0125)] {
            let grid = TimeGrid::new(3.0, n).unwrap();
            let w = WeightVector::new(&grid, eps).unwrap();
            for i in 1..=n {
                let r = (w.get(i) - w.get(i - 1)) / grid.tau() + w.get(i) / eps;
                worst = worst.max(r.abs());
            }
        }
        checks.push(upper("weight_recurrence", worst, 1e-12));
    }
    {
        let eps = 0.3;
        let mut errs = Vec::new();
        for k in 0..5 {
            let n = 8 << k;
            let grid = TimeGrid::new(1.0, n).unwrap();
            let w = WeightVector::new(&grid, eps).unwrap();
            errs.push((w.get(n) - (-1.0_f64 / eps).exp()).abs());
        }
        let min_order = errs
            .windows(2)
            .map(|w| (w[0] / w[1]).log2())
            .fold(f64::INFINITY, f64::min);
        checks.push(lower("weight_convergence_order", min_order, 1.0));
    }
    {
        let mut rng = Lcg(12);
        let tau = 0.125;
        let v: Vec<StateVector> = (0..12).map(|_| StateVector::scalar(rng.next())).collect();
        let w: Vec<StateVector> = (0..12).map(|_| StateVector::scalar(rng.next())).collect();
        let (a, b) = (1.7, -0.6);
        let combo: Vec<StateVector> = v
            .iter()
            .zip(&w)
            .map(|(x, y)| x.scale(a).add(&y.scale(b)))
            .collect();
        let mut worst = 0.0_f64;
        for k in 1..=3 {
            let dc = discrete_derivative(&combo, tau, k).unwrap();
            let dv = discrete_derivative(&v, tau, k).unwrap();
            let dw = discrete_derivative(&w, tau, k).unwrap();
            let scale = tau.powi(-(k as i32));
            for i in 0..dc.len() {
                let expect = a * dv[i].dofs()[0] + b * dw[i].dofs()[0];
                worst = worst.max((dc[i].dofs()[0] - expect).abs() / scale.max(1.0));
            }
        }
        checks.push(upper("delta_linearity", worst, 1e-13));
    }
    {
        let mut rng = Lcg(5);
        let grid = TimeGrid::new(2.0, 9).unwrap();
        let states: Vec<StateVector> = (0..10).map(|_| StateVector::scalar(rng.next())).collect();
        let traj = Trajectory::new(grid, states.clone()).unwrap();
        let mut worst = 0.0_f64;
        for i in 0..=9usize {
            let t = grid.node(i);
            for mode in [InterpMode::Affine, InterpMode::BackwardConstant] {
                let v = traj.interpolate(t, mode).unwrap();
                worst = worst.max((v.dofs()[0] - states[i].dofs()[0]).abs());
            }
        }
        checks.push(upper("interpolant_nodes", worst, 1e-15));
    }
    {
        let exact = 1.0 - 0.1 + 0.01 / 3.0;
        let m = backward_mean(|s| StateVector::scalar(s * s), 0.1, 1.0, 5).unwrap();
        checks.push(upper("backward_mean_quadratic", (m.dofs()[0] - exact).abs(), 1e-14));
    }

    // --- spatial layer ---------------------------------------------------
    let domain = SpatialDomain::interval(4.0, 8).unwrap();
    {
        let mut rng = Lcg(77);
        let mut worst_g = 0.0_f64;
        let mut worst_h = 0.0_f64;
        for _ in 0..5 {
            let u = StateVector::new(domain, (0..8).map(|_| rng.next()).collect()).unwrap();
            let v = StateVector::new(domain, (0..8).map(|_| rng.next()).collect()).unwrap();
            let s = 1e-6;
            let mut up = u.clone();
            up.axpy(s, &v);
            let mut um = u.clone();
            um.axpy(-s, &v);
            let fd = (phi(&up, &p4) - phi(&um, &p4)) / (2.0 * s);
            let gv = grad_phi(&u, &p4).inner(&v);
            worst_g = worst_g.max((fd - gv).abs() / gv.abs().max(1e-12));
            // directional finite difference of grad_phi against the Hessian action
            let gp = grad_phi(&up, &p4);
            let gm = grad_phi(&um, &p4);
            let fd_h = gp.sub(&gm).scale(1.0 / (2.0 * s));
            let hv = hess_phi_apply(&u, &v, &p4);
            worst_h = worst_h.max(fd_h.sub(&hv).norm() / hv.norm().max(1e-12));
        }
        checks.push(upper("phi_gradient_fd", worst_g, 1e-6));
        checks.push(upper("hess_phi_fd", worst_h, 1e-5));
    }

    // --- functional layer -------------------------------------------------
    let prob = scalar_problem(p4.clone(), 25, 2.0, 0.3, 0.8, -0.2);
    {
        let mut rng = Lcg(2024);
        let objective = if fault_grad {
            Objective::with_gradient_fault(&prob)
        } else {
            Objective::new(&prob)
        };
        let mut worst = 0.0_f64;
        for _ in 0..5 {
            let free = random_free(&prob, &mut rng);
            let dir = random_free(&prob, &mut rng);
            let traj = embed(&free, &prob).unwrap();
            let g = objective.gradient(&traj);
            let s = 1e-5;
            let mut fp = free.clone();
            fp.axpy(s, &dir);
            let mut fm = free.clone();
            fm.axpy(-s, &dir);
            let fd = (objective.value(&embed(&fp, &prob).unwrap())
                - objective.value(&embed(&fm, &prob).unwrap()))
                / (2.0 * s);
            let gv = g.weighted_dot(&dir, prob.grid().tau());
            worst = worst.max((fd - gv).abs() / gv.abs().max(1e-300));
        }
        checks.push(upper("functional_gradient_fd", worst, 1e-6));
    }
    {
        let mut rng = Lcg(303);
        let tau = prob.grid().tau();
        let free = random_free(&prob, &mut rng);
        let traj = embed(&free, &prob).unwrap();
        let mut worst_sym = 0.0_f64;
        let mut min_quad = f64::INFINITY;
        for _ in 0..5 {
            let a = random_free(&prob, &mut rng);
            let b = random_free(&prob, &mut rng);
            let ha = wed_core::functional::hessian_apply(&traj, &a, &prob);
            let hb = wed_core::functional::hessian_apply(&traj, &b, &prob);
            let scale = ha.weighted_norm(tau) * b.weighted_norm(tau);
            worst_sym = worst_sym
                .max((ha.weighted_dot(&b, tau) - hb.weighted_dot(&a, tau)).abs() / scale.max(1.0));
            min_quad = min_quad
                .min(ha.weighted_dot(&a, tau) / (a.weighted_norm(tau).powi(2)).max(1e-300));
        }
        checks.push(upper("hessian_symmetry", worst_sym, 1e-12));
        checks.push(lower("hessian_psd", min_quad, -1e-12));
    }
    {
        let mut rng = Lcg(404);
        let fa = random_free(&prob, &mut rng);
        let fb = random_free(&prob, &mut rng);
        let ia = eval_functional(&embed(&fa, &prob).unwrap(), &prob);
        let ib = eval_functional(&embed(&fb, &prob).unwrap(), &prob);
        let mut worst = -f64::INFINITY;
        for &lam in &[0.25, 0.5, 0.75] {
            let mut mix = FreeVariables::zeros(&prob);
            mix.axpy(lam, &fa);
            mix.axpy(1.0 - lam, &fb);
            let im = eval_functional(&embed(&mix, &prob).unwrap(), &prob);
            worst = worst.max((im - lam * ia - (1.0 - lam) * ib) / (ia + ib).max(1.0));
        }
        checks.push(upper("functional_convexity", worst.max(0.0), 1e-10));
    }

    // --- solver oracles ----------------------------------------------------
    {
        let prob = scalar_problem(p4.clone(), 60, 3.0, 0.1, 1.0, 0.0);
        let opts = SolverOptions::default().with_tol(1e-11);
        let a = minimize(&prob, &opts, None);
        let b = solve_el(&prob, &opts);
        let measured = match (&a, &b) {
            (Ok(x), Ok(y)) if x.converged && y.converged => sup_distance(&x.traj, &y.traj),
            _ => f64::INFINITY,
        };
        checks.push(upper("path_equivalence", measured, 1e-8));
        if let Ok(x) = a {
            let (b2, b3) = final_bc_residual(&x.traj).unwrap();
            checks.push(upper("minimizer_final_conditions", b2.max(b3), 1e-6));
            checks.push(upper(
                "el_residual_at_minimizer",
                el_residual(&x.traj, &prob).unwrap(),
                10.0 * opts.tol_grad,
            ));
        } else {
            checks.push(upper("minimizer_final_conditions", f64::INFINITY, 1e-6));
            checks.push(upper("el_residual_at_minimizer", f64::INFINITY, 1e-10));
        }
    }
    {
        // dense normal-equation oracle for the quadratic potential
        let n = 40;
        let eps = 0.3;
        let prob = scalar_problem(Nonlinearity::Quadratic, n, 3.0, eps, 1.0, 0.0);
        let tau = prob.grid().tau();
        let rho = prob.weights().rho();
        let nf = n - 1;
        let mut q = vec![vec![0.0; nf]; nf];
        let mut b = vec![0.0; nf];
        let fixed = [1.0, 1.0];
        let c = [1.0 / (tau * tau), -2.0 / (tau * tau), 1.0 / (tau * tau)];
        for i in 2..=n {
            let w = tau * rho[i];
            let idx = [i as isize, i as isize - 1, i as isize - 2];
            for (ap, &ja) in idx.iter().enumerate() {
                for (bp, &jb) in idx.iter().enumerate() {
                    let coeff = w * c[ap] * c[bp];
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
        let x = dense_solve(q, b.iter().map(|v| -v).collect());
        let res = minimize(&prob, &SolverOptions::default().with_tol(1e-12), None);
        let measured = match res {
            Ok(r) if r.converged => x
                .iter()
                .enumerate()
                .fold(0.0_f64, |m, (k, xv)| m.max((r.traj.state(k + 2).dofs()[0] - xv).abs())),
            _ => f64::INFINITY,
        };
        checks.push(upper("quadratic_dense_oracle", measured, 1e-10));
    }
    {
        let prob = scalar_problem(Nonlinearity::Zero, 40, 3.0, 0.2, 1.0, 0.5);
        let res = minimize(&prob, &SolverOptions::default(), None);
        let (obj, dist) = match res {
            Ok(r) if r.converged => (r.objective.abs(), sup_distance(&r.traj, &prob.affine_trajectory())),
            _ => (f64::INFINITY, f64::INFINITY),
        };
        checks.push(upper("wzero_objective", obj, 1e-18));
        checks.push(upper("wzero_affine_distance", dist, 1e-10));
    }
    {
        // recovery gap under three tau-halvings
        let eps = 0.2;
        let candidate = |t: f64| StateVector::scalar((2.0 * t).cos());
        let accel = |t: f64| StateVector::scalar(-4.0 * (2.0 * t).cos());
        let exact = continuous_functional(candidate, accel, &p4, eps, 3.0, 60001);
        let mut gaps = Vec::new();
        for &n in &[96usize, 192, 384, 768] {
            let prob = scalar_problem(p4.clone(), n, 3.0, eps, 1.0, 0.0);
            let traj = recovery_trajectory(candidate, &prob, 5).unwrap();
            gaps.push(eval_functional(&traj, &prob) - exact);
        }
        let decreasing = gaps.windows(2).all(|w| w[1].abs() < w[0].abs());
        let orders: Vec<f64> =
            gaps.windows(2).map(|w| (w[0].abs() / w[1].abs()).log2()).collect();
        let mean = orders.iter().sum::<f64>() / orders.len() as f64;
        checks.push(Check {
            name: "recovery_gap_order",
            measured: if decreasing { mean } else { f64::NEG_INFINITY },
            threshold: ">= 8e-1".into(),
            pass: decreasing && mean >= 0.8,
        });
    }
    {
        let prob = scalar_problem(p4.clone(), 60, 3.0, 0.15, 1.0, 0.0);
        let mut rng = Lcg(7);
        let opts = SolverOptions::default();
        let runs: Vec<_> = (0..2)
            .map(|_| {
                let start = random_free(&prob, &mut rng);
                minimize(&prob, &opts, Some(start))
            })
            .collect();
        let measured = match (&runs[0], &runs[1]) {
            (Ok(a), Ok(b)) if a.converged && b.converged => sup_distance(&a.traj, &b.traj),
            _ => f64::INFINITY,
        };
        checks.push(upper("uniqueness_two_starts", measured, 1e-8));
    }
    {
        let prob = scalar_problem(p4.clone(), 50, 3.0, 0.2, 1.0, 0.0);
        let base = minimize(&prob, &SolverOptions::default().with_tol(1e-11), None);
        let doubled = Objective::with_scale(&prob, 2.0);
        let scaled = minimize_objective(&doubled, &SolverOptions::default().with_tol(2e-11), None);
        let measured = match (base, scaled) {
            (Ok(a), Ok(b)) if a.converged && b.converged => sup_distance(&a.traj, &b.traj),
            _ => f64::INFINITY,
        };
        checks.push(upper("scaling_argmin_shift", measured, 1e-8));
    }

    // --- limit integrators --------------------------------------------------
    {
        let drift = rk4_energy_drift(&p4, 1.0, 0.0, 3.0, 1e-4).unwrap();
        checks.push(upper("rk4_energy_drift", drift, 1e-8));
    }
    {
        let sol = |dt: f64| {
            solve_limit(
                SpatialDomain::scalar(),
                &p4,
                &StateVector::scalar(1.0),
                &StateVector::scalar(0.0),
                3.0,
                dt,
            )
            .unwrap()
        };
        let end = |s: &TimeSampled| s.states().last().unwrap().dofs()[0];
        let (a, b, c) = (sol(0.05), sol(0.025), sol(0.0125));
        let order = ((end(&a) - end(&b)).abs() / (end(&b) - end(&c)).abs()).log2();
        checks.push(in_range("rk4_self_order", order, 3.5, 4.5));
    }
    {
        let d = SpatialDomain::interval(4.0, 31).unwrap();
        let u0 = InitialDatum::Bump { radius: 1.5 }.build(d).unwrap();
        let u1 = InitialDatum::Zero.build(d).unwrap();
        let sol = |dt: f64| solve_limit(d, &p4, &u0, &u1, 2.0, dt).unwrap();
        let (a, b, c) = (sol(0.1), sol(0.05), sol(0.025));
        let dist = |x: &TimeSampled, y: &TimeSampled| {
            x.states()
                .last()
                .unwrap()
                .sub(y.states().last().unwrap())
                .norm()
        };
        let order = (dist(&a, &b) / dist(&b, &c)).log2();
        checks.push(in_range("leapfrog_self_order", order, 1.8, 2.2));
    }

    checks
}

pub fn run_validate(out_dir: &Path, precision: usize, fault_grad: bool) -> Result<(), CliError> {
    let checks = run_checks(fault_grad);
    let mut csv = String::from("check,measured,threshold,verdict\n");
    println!("{:<28} {:>16} {:>14}  verdict", "check", "measured", "threshold");
    let mut all_pass = true;
    for c in &checks {
        let verdict = if c.pass { "pass" } else { "FAIL" };
        all_pass &= c.pass;
        println!(
            "{:<28} {:>16} {:>14}  {verdict}",
            c.name,
            fmt_float(c.measured, 6),
            c.threshold
        );
        csv.push_str(&format!(
            "{},{},{},{verdict}\n",
            c.name,
            fmt_float(c.measured, precision),
            c.threshold.replace(',', ";")
        ));
    }
    write_file(&out_path(out_dir, "validate.csv"), &csv)
        .map_err(|e| CliError::Solver(format!("i/o failure: {e}")))?;
    if all_pass {
        println!("all {} checks passed", checks.len());
        Ok(())
    } else {
        println!("validation FAILED");
        Err(CliError::Validation)
    }
}
