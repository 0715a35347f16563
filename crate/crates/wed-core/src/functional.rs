//! The weighted discrete objective
//!
//! ```text
//! I(u_0..u_n) = Σ_{i=2}^{n}   tau rho_i     1/2 |δ²u_i|²
//!             + Σ_{i=2}^{n-2} tau rho_{i+2} phi(u_i) / eps²
//! ```
//!
//! over trajectories constrained by `u_0 = u⁰` and `δu_1 = u¹`. The two
//! pinned states are substituted out, so the problem is an unconstrained
//! strictly convex minimization in the free states `(u_2, ..., u_n)`.
//!
//! Gradients are reported per time level as Riesz representatives in the
//! spatial inner product scaled by `tau`: the gradient norm
//! `sqrt(Σ_m tau |g_m|²)` is then mesh-independent, so stopping criteria
//! carry across grid resolutions.

use crate::spatial::{
    grad_phi, hess_phi_apply, hess_phi_diagonal, phi, Nonlinearity, SpatialDomain, StateVector,
};
use crate::temporal::{discrete_derivative, TimeGrid, Trajectory, WeightVector};
use crate::{Error, Result};

/// Minimization problem description: domain, potential, initial data,
/// time grid, and the regularization parameter with its weight vector.
#[derive(Debug, Clone)]
pub struct WedProblem {
    domain: SpatialDomain,
    nl: Nonlinearity,
    u0: StateVector,
    u1: StateVector,
    grid: TimeGrid,
    weights: WeightVector,
}

impl WedProblem {
    pub fn new(
        domain: SpatialDomain,
        nl: Nonlinearity,
        u0: StateVector,
        u1: StateVector,
        grid: TimeGrid,
        eps: f64,
    ) -> Result<Self> {
        if u0.domain() != domain || u1.domain() != domain {
            return Err(Error::Dimension("initial data live on a different domain".into()));
        }
        if !u0.is_finite() || !u1.is_finite() {
            return Err(Error::NonFinite("initial data".into()));
        }
        let weights = WeightVector::new(&grid, eps)?;
        Ok(WedProblem { domain, nl, u0, u1, grid, weights })
    }

    pub fn domain(&self) -> SpatialDomain {
        self.domain
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn initial_position(&self) -> &StateVector {
        &self.u0
    }

    pub fn initial_velocity(&self) -> &StateVector {
        &self.u1
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn eps(&self) -> f64 {
        self.weights.eps()
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    /// Free-variable count: `n - 1` states, each with `domain.dof()` entries.
    pub fn free_states(&self) -> usize {
        self.grid.steps() - 1
    }

    /// Trajectory satisfying the constraints with `u_i = u⁰ + i tau u¹`:
    /// the exact minimizer when the potential is disabled, and the default
    /// Newton start.
    pub fn affine_trajectory(&self) -> Trajectory {
        let n = self.grid.steps();
        let tau = self.grid.tau();
        let states = (0..=n)
            .map(|i| {
                let mut s = self.u0.clone();
                s.axpy(i as f64 * tau, &self.u1);
                s
            })
            .collect();
        Trajectory::new(self.grid, states).expect("affine trajectory is well formed")
    }
}

/// The free states `(u_2, ..., u_n)` parametrizing the constraint set.
#[derive(Debug, Clone)]
pub struct FreeVariables {
    states: Vec<StateVector>,
}

impl FreeVariables {
    pub fn new(states: Vec<StateVector>) -> Self {
        FreeVariables { states }
    }

    pub fn zeros(prob: &WedProblem) -> Self {
        FreeVariables {
            states: vec![StateVector::zeros(prob.domain()); prob.free_states()],
        }
    }

    /// Extract the free part `(u_2, ..., u_n)` of an embedded trajectory.
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        FreeVariables { states: traj.states()[2..].to_vec() }
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn states_mut(&mut self) -> &mut [StateVector] {
        &mut self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Norm `sqrt(Σ_m tau |v_m|²)`, matching the gradient scaling.
    pub fn weighted_norm(&self, tau: f64) -> f64 {
        let sq: f64 = self.states.iter().map(|s| s.inner(s)).sum();
        (tau * sq).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.states.iter().fold(0.0_f64, |m, s| m.max(s.sup_norm()))
    }

    pub fn weighted_dot(&self, other: &FreeVariables, tau: f64) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        let sq: f64 = self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.inner(b))
            .sum();
        tau * sq
    }

    pub fn axpy(&mut self, a: f64, other: &FreeVariables) {
        debug_assert_eq!(self.len(), other.len());
        for (x, y) in self.states.iter_mut().zip(&other.states) {
            x.axpy(a, y);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.states.iter().all(|s| s.is_finite())
    }
}

/// Assemble the full trajectory from free variables:
/// `u_0 = u⁰`, `u_1 = u⁰ + tau u¹` (so `δu_1 = u¹` exactly), `u_i = free_{i-2}`.
pub fn embed(free: &FreeVariables, prob: &WedProblem) -> Result<Trajectory> {
    if free.len() != prob.free_states() {
        return Err(Error::Dimension(format!(
            "expected {} free states, got {}",
            prob.free_states(),
            free.len()
        )));
    }
    let mut states = Vec::with_capacity(prob.grid().steps() + 1);
    states.push(prob.u0.clone());
    let mut u1 = prob.u0.clone();
    u1.axpy(prob.grid().tau(), &prob.u1);
    states.push(u1);
    states.extend(free.states.iter().cloned());
    Trajectory::new(*prob.grid(), states)
}

/// Second differences `δ²u_i` for `i = 2..=n`, entry `i-2` of the result.
fn second_differences(traj: &Trajectory) -> Vec<StateVector> {
    discrete_derivative(traj.states(), traj.grid().tau(), 2)
        .expect("trajectory always has n+1 >= 5 states")
}

/// Objective evaluator with hooks used by the validation suite.
///
/// `scale` multiplies the objective (and consequently gradient and Hessian);
/// the minimizer is invariant under positive scaling, which the validator
/// exercises. `grad_sign_fault` deliberately flips the gradient sign so the
/// validator can prove its finite-difference check catches a broken gradient.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    prob: &'a WedProblem,
    scale: f64,
    grad_sign_fault: bool,
}

impl<'a> Objective<'a> {
    pub fn new(prob: &'a WedProblem) -> Self {
        Objective { prob, scale: 1.0, grad_sign_fault: false }
    }

    pub fn with_scale(prob: &'a WedProblem, scale: f64) -> Self {
        assert!(scale > 0.0, "objective scale must be positive");
        Objective { prob, scale, grad_sign_fault: false }
    }

    /// Documented test hook: flips the sign of the reported gradient.
    pub fn with_gradient_fault(prob: &'a WedProblem) -> Self {
        Objective { prob, scale: 1.0, grad_sign_fault: true }
    }

    pub fn problem(&self) -> &WedProblem {
        self.prob
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn value(&self, traj: &Trajectory) -> f64 {
        self.scale * eval_functional(traj, self.prob)
    }

    pub fn gradient(&self, traj: &Trajectory) -> FreeVariables {
        let mut g = gradient(traj, self.prob);
        let s = if self.grad_sign_fault { -self.scale } else { self.scale };
        for st in g.states_mut() {
            *st = st.scale(s);
        }
        g
    }

    pub fn hessian_apply(&self, traj: &Trajectory, dir: &FreeVariables) -> FreeVariables {
        let mut h = hessian_apply(traj, dir, self.prob);
        if self.scale != 1.0 {
            for st in h.states_mut() {
                *st = st.scale(self.scale);
            }
        }
        h
    }

    /// Diagonal of the Hessian, for Jacobi preconditioning of the inner
    /// conjugate-gradient solves.
    pub fn hessian_diagonal(&self, traj: &Trajectory) -> FreeVariables {
        let prob = self.prob;
        let n = prob.grid().steps();
        let tau = prob.grid().tau();
        let eps = prob.eps();
        let rho = prob.weights().rho();
        let tau4 = tau * tau * tau * tau;
        let mut out = Vec::with_capacity(n - 1);
        for m in 2..=n {
            let mut c = rho[m];
            if m + 1 <= n {
                c += 4.0 * rho[m + 1];
            }
            if m + 2 <= n {
                c += rho[m + 2];
            }
            let mut diag = StateVector::new(
                prob.domain(),
                vec![c / tau4; prob.domain().dof()],
            )
            .expect("diagonal shape");
            if m <= n - 2 {
                let d2 = hess_phi_diagonal(traj.state(m), &prob.nl);
                diag.axpy(rho[m + 2] / (eps * eps), &d2);
            }
            out.push(diag.scale(self.scale));
        }
        FreeVariables::new(out)
    }
}

/// The exact finite sum `I(u_0..u_n)`; nonnegative.
pub fn eval_functional(traj: &Trajectory, prob: &WedProblem) -> f64 {
    let n = prob.grid().steps();
    let tau = prob.grid().tau();
    let eps = prob.eps();
    let rho = prob.weights().rho();
    let d2 = second_differences(traj);
    let mut acc = 0.0;
    for i in 2..=n {
        let s = &d2[i - 2];
        acc += tau * rho[i] * 0.5 * s.inner(s);
    }
    for i in 2..=n - 2 {
        acc += tau / (eps * eps) * rho[i + 2] * phi(traj.state(i), &prob.nl);
    }
    acc
}

/// Gradient of [`eval_functional`] with respect to the free states, as the
/// tau-scaled Riesz representative per time level. Weight factors are applied
/// after differencing; see the module notes in [`crate::temporal`].
pub fn gradient(traj: &Trajectory, prob: &WedProblem) -> FreeVariables {
    let n = prob.grid().steps();
    let tau = prob.grid().tau();
    let eps = prob.eps();
    let rho = prob.weights().rho();
    let d2 = second_differences(traj);
    let tau2 = tau * tau;
    let mut out = Vec::with_capacity(n - 1);
    for m in 2..=n {
        let mut g = d2[m - 2].scale(rho[m]);
        if m + 1 <= n {
            g.axpy(-2.0 * rho[m + 1], &d2[m - 1]);
        }
        if m + 2 <= n {
            g.axpy(rho[m + 2], &d2[m]);
        }
        let mut g = g.scale(1.0 / tau2);
        if m <= n - 2 {
            g.axpy(rho[m + 2] / (eps * eps), &grad_phi(traj.state(m), &prob.nl));
        }
        out.push(g);
    }
    FreeVariables::new(out)
}

/// Action of the Hessian of [`eval_functional`] at `traj` on a free-variable
/// direction (with `v_0 = v_1 = 0`). Linear, symmetric, positive definite on
/// the constrained space.
pub fn hessian_apply(traj: &Trajectory, dir: &FreeVariables, prob: &WedProblem) -> FreeVariables {
    let n = prob.grid().steps();
    let tau = prob.grid().tau();
    let eps = prob.eps();
    let rho = prob.weights().rho();
    debug_assert_eq!(dir.len(), n - 1);

    // Second differences of the zero-padded direction (v_0 = v_1 = 0).
    let mut padded = Vec::with_capacity(n + 1);
    padded.push(StateVector::zeros(prob.domain()));
    padded.push(StateVector::zeros(prob.domain()));
    padded.extend(dir.states().iter().cloned());
    let d2 = discrete_derivative(&padded, tau, 2).expect("padded direction length");

    let tau2 = tau * tau;
    let mut out = Vec::with_capacity(n - 1);
    for m in 2..=n {
        let mut g = d2[m - 2].scale(rho[m]);
        if m + 1 <= n {
            g.axpy(-2.0 * rho[m + 1], &d2[m - 1]);
        }
        if m + 2 <= n {
            g.axpy(rho[m + 2], &d2[m]);
        }
        let mut g = g.scale(1.0 / tau2);
        if m <= n - 2 {
            g.axpy(
                rho[m + 2] / (eps * eps),
                &hess_phi_apply(traj.state(m), &dir.states()[m - 2], &prob.nl),
            );
        }
        out.push(g);
    }
    FreeVariables::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::{InitialDatum, Nonlinearity, SpatialDomain, StateVector};
    use crate::temporal::TimeGrid;

    fn scalar_problem(n: usize, t_final: f64, eps: f64, u0: f64, u1: f64) -> WedProblem {
        WedProblem::new(
            SpatialDomain::scalar(),
            Nonlinearity::power(4.0).unwrap(),
            StateVector::scalar(u0),
            StateVector::scalar(u1),
            TimeGrid::new(t_final, n).unwrap(),
            eps,
        )
        .unwrap()
    }

    #[test]
    fn embed_pins_initial_conditions() {
        let prob = scalar_problem(4, 1.0, 0.5, 1.0, 2.0);
        let free = FreeVariables::new(vec![StateVector::scalar(0.0); 3]);
        let traj = embed(&free, &prob).unwrap();
        assert_eq!(traj.state(0).dofs()[0], 1.0);
        assert!((traj.state(1).dofs()[0] - 1.5).abs() < 1e-15);
        let du1 = (traj.state(1).dofs()[0] - traj.state(0).dofs()[0]) / 0.25;
        assert_eq!(du1, 2.0);

        let prob = scalar_problem(4, 1.0, 0.5, 1.0, 0.0);
        let traj = embed(&free, &prob).unwrap();
        assert_eq!(traj.state(1).dofs()[0], 1.0);

        let prob = scalar_problem(4, 1.0, 0.5, 0.0, 0.0);
        let traj = embed(&free, &prob).unwrap();
        for s in traj.states() {
            assert_eq!(s.dofs()[0], 0.0);
        }
    }

    #[test]
    fn embed_rejects_size_mismatch() {
        let prob = scalar_problem(6, 1.0, 0.5, 1.0, 0.0);
        let free = FreeVariables::new(vec![StateVector::scalar(0.0); 3]);
        assert!(matches!(embed(&free, &prob), Err(Error::Dimension(_))));
    }

    #[test]
    fn functional_zero_on_affine_without_potential() {
        let prob = WedProblem::new(
            SpatialDomain::scalar(),
            Nonlinearity::Zero,
            StateVector::scalar(0.7),
            StateVector::scalar(-0.4),
            TimeGrid::new(2.0, 10).unwrap(),
            0.3,
        )
        .unwrap();
        let traj = prob.affine_trajectory();
        assert!(eval_functional(&traj, &prob).abs() < 1e-26);
    }

    #[test]
    fn functional_single_bump_term() {
        // all zero except a single unit second difference at i = 3:
        // I = tau rho_3 / 2 (potential disabled).
        let prob = WedProblem::new(
            SpatialDomain::scalar(),
            Nonlinearity::Zero,
            StateVector::scalar(0.0),
            StateVector::scalar(0.0),
            TimeGrid::new(1.5, 6).unwrap(),
            0.5,
        )
        .unwrap();
        let tau = prob.grid().tau();
        // u_3 = tau^2 gives delta^2 u_3 = 1 and delta^2 u_4 = -2, delta^2 u_5 = 1.
        // Use u_i = ramp past i=3 instead so only one nonzero second difference:
        // u = (0, 0, 0, tau^2, 2 tau^2, 3 tau^2, 4 tau^2).
        let free = FreeVariables::new(
            [0.0, 1.0, 2.0, 3.0, 4.0]
                .iter()
                .map(|&k| StateVector::scalar(k * tau * tau))
                .collect(),
        );
        let traj = embed(&free, &prob).unwrap();
        let expect = tau * prob.weights().get(3) * 0.5;
        assert!((eval_functional(&traj, &prob) - expect).abs() < 1e-15 * expect.max(1.0));
    }

    #[test]
    fn functional_frozen_brute_force_value() {
        // n=6, T=1, eps=0.5, u0=1, u1=0, all free states 1: every node is 1,
        // so I = (tau/eps^2) (rho_4 + rho_5 + rho_6) / 2 = 2997/12288.
        let prob = scalar_problem(6, 1.0, 0.5, 1.0, 0.0);
        let free = FreeVariables::new(vec![StateVector::scalar(1.0); 5]);
        let traj = embed(&free, &prob).unwrap();
        let got = eval_functional(&traj, &prob);
        assert!((got - 2997.0 / 12288.0).abs() < 1e-13, "got {got}");

        // independent brute-force summation, coded from the definition
        let tau = prob.grid().tau();
        let q: f64 = 0.5 / (0.5 + tau);
        let u: Vec<f64> = vec![1.0; 7];
        let mut brute = 0.0;
        for i in 2..=6usize {
            let d2 = (u[i] - 2.0 * u[i - 1] + u[i - 2]) / (tau * tau);
            brute += tau * q.powi(i as i32) * 0.5 * d2 * d2;
        }
        for i in 2..=4usize {
            brute += tau / 0.25 * q.powi(i as i32 + 2) * 0.5 * u[i].abs().powi(4);
        }
        assert!((got - brute).abs() <= 1e-15 * brute);
    }

    #[test]
    fn gradient_zero_at_affine_minimum_without_potential() {
        let prob = WedProblem::new(
            SpatialDomain::scalar(),
            Nonlinearity::Zero,
            StateVector::scalar(1.0),
            StateVector::scalar(2.0),
            TimeGrid::new(1.0, 8).unwrap(),
            0.25,
        )
        .unwrap();
        let g = gradient(&prob.affine_trajectory(), &prob);
        assert!(g.weighted_norm(prob.grid().tau()) < 1e-10);
    }

    #[test]
    fn gradient_matches_central_difference() {
        let prob = scalar_problem(12, 1.0, 0.3, 0.8, -0.5);
        let vals = [0.31, -0.42, 0.77, 0.05, -0.6, 0.9, -0.13, 0.27, 0.44, -0.81, 0.52];
        let free = FreeVariables::new(vals.iter().map(|&v| StateVector::scalar(v)).collect());
        let traj = embed(&free, &prob).unwrap();
        let g = gradient(&traj, &prob);
        let dirv = [0.2, -0.7, 0.4, 0.9, -0.3, 0.1, 0.8, -0.5, 0.6, -0.1, 0.3];
        let dir = FreeVariables::new(dirv.iter().map(|&v| StateVector::scalar(v)).collect());
        let s = 1e-6;
        let mut fp = free.clone();
        fp.axpy(s, &dir);
        let mut fm = free.clone();
        fm.axpy(-s, &dir);
        let ip = eval_functional(&embed(&fp, &prob).unwrap(), &prob);
        let im = eval_functional(&embed(&fm, &prob).unwrap(), &prob);
        let fd = (ip - im) / (2.0 * s);
        let gv = g.weighted_dot(&dir, prob.grid().tau());
        assert!((fd - gv).abs() <= 1e-6 * gv.abs(), "fd {fd} vs <g,v> {gv}");
    }

    #[test]
    fn hessian_symmetric_and_psd() {
        let prob = scalar_problem(10, 2.0, 0.4, 1.0, 0.0);
        let vals = [0.5, -0.2, 0.8, 0.1, -0.7, 0.3, 0.9, -0.4, 0.6];
        let free = FreeVariables::new(vals.iter().map(|&v| StateVector::scalar(v)).collect());
        let traj = embed(&free, &prob).unwrap();
        let a = FreeVariables::new(
            [0.3, 0.1, -0.5, 0.7, 0.2, -0.8, 0.4, 0.6, -0.1]
                .iter()
                .map(|&v| StateVector::scalar(v))
                .collect(),
        );
        let b = FreeVariables::new(
            [-0.6, 0.4, 0.2, -0.3, 0.9, 0.5, -0.7, 0.1, 0.8]
                .iter()
                .map(|&v| StateVector::scalar(v))
                .collect(),
        );
        let tau = prob.grid().tau();
        let ha = hessian_apply(&traj, &a, &prob);
        let hb = hessian_apply(&traj, &b, &prob);
        let hab = ha.weighted_dot(&b, tau);
        let hba = hb.weighted_dot(&a, tau);
        let scale = ha.weighted_norm(tau) * b.weighted_norm(tau);
        assert!((hab - hba).abs() <= 1e-12 * scale.max(1.0));
        assert!(ha.weighted_dot(&a, tau) >= -1e-12 * scale.max(1.0));
        // zero direction maps to zero
        let z = FreeVariables::zeros(&prob);
        assert_eq!(hessian_apply(&traj, &z, &prob).sup_norm(), 0.0);
    }

    #[test]
    fn functional_convex_along_embedded_trajectories() {
        let prob = scalar_problem(10, 2.0, 0.4, 0.5, -0.3);
        let a_vals = [0.5, -0.2, 0.8, 0.1, -0.7, 0.3, 0.9, -0.4, 0.6];
        let b_vals = [-0.3, 0.7, 0.2, -0.6, 0.4, -0.1, 0.5, 0.8, -0.9];
        let fa = FreeVariables::new(a_vals.iter().map(|&v| StateVector::scalar(v)).collect());
        let fb = FreeVariables::new(b_vals.iter().map(|&v| StateVector::scalar(v)).collect());
        let ia = eval_functional(&embed(&fa, &prob).unwrap(), &prob);
        let ib = eval_functional(&embed(&fb, &prob).unwrap(), &prob);
        for &lam in &[0.25, 0.5, 0.75] {
            let mut mix = FreeVariables::zeros(&prob);
            mix.axpy(lam, &fa);
            mix.axpy(1.0 - lam, &fb);
            let im = eval_functional(&embed(&mix, &prob).unwrap(), &prob);
            assert!(im <= lam * ia + (1.0 - lam) * ib + 1e-10 * (ia + ib));
        }
    }

    #[test]
    fn interval_problem_gradient_fd() {
        let domain = SpatialDomain::interval(4.0, 8).unwrap();
        let u0 = InitialDatum::Bump { radius: 2.0 }.build(domain).unwrap();
        let u1 = InitialDatum::Zero.build(domain).unwrap();
        let prob = WedProblem::new(
            domain,
            Nonlinearity::power(4.0).unwrap(),
            u0,
            u1,
            TimeGrid::new(1.0, 8).unwrap(),
            0.3,
        )
        .unwrap();
        // deterministic pseudo-random free states and direction
        let mut seed = 11_u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 20) as f64 / (1u64 << 44) as f64) - 0.5
        };
        let free = FreeVariables::new(
            (0..prob.free_states())
                .map(|_| {
                    StateVector::new(domain, (0..8).map(|_| next()).collect()).unwrap()
                })
                .collect(),
        );
        let dir = FreeVariables::new(
            (0..prob.free_states())
                .map(|_| {
                    StateVector::new(domain, (0..8).map(|_| next()).collect()).unwrap()
                })
                .collect(),
        );
        let traj = embed(&free, &prob).unwrap();
        let g = gradient(&traj, &prob);
        let s = 1e-6;
        let mut fp = free.clone();
        fp.axpy(s, &dir);
        let mut fm = free.clone();
        fm.axpy(-s, &dir);
        let fd = (eval_functional(&embed(&fp, &prob).unwrap(), &prob)
            - eval_functional(&embed(&fm, &prob).unwrap(), &prob))
            / (2.0 * s);
        let gv = g.weighted_dot(&dir, prob.grid().tau());
        assert!((fd - gv).abs() <= 1e-6 * gv.abs(), "fd {fd} vs {gv}");
    }

    #[test]
    fn objective_scale_and_fault_hooks() {
        let prob = scalar_problem(8, 1.0, 0.4, 1.0, 0.0);
        let traj = prob.affine_trajectory();
        let plain = Objective::new(&prob);
        let scaled = Objective::with_scale(&prob, 2.0);
        assert!((scaled.value(&traj) - 2.0 * plain.value(&traj)).abs() < 1e-15);
        let g = plain.gradient(&traj);
        let gf = Objective::with_gradient_fault(&prob).gradient(&traj);
        for (a, b) in g.states().iter().zip(gf.states()) {
            assert_eq!(a.dofs()[0], -b.dofs()[0]);
        }
    }
}
