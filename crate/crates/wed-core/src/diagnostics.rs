//! Energy estimates, residual checks, trajectory distances, the recovery
//! construction, and the vanishing-regularization convergence study.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::functional::WedProblem;
use crate::solver::{minimize, MinimizeResult, SolverOptions};
use crate::spatial::{grad_phi, Nonlinearity, SpatialDomain, StateVector};
use crate::temporal::{backward_mean, discrete_derivative, TimeGrid, TimeSampled, Trajectory};
use crate::{Error, Result};

/// The integral energy over the window `(tau, T - 2 tau)`:
/// velocity (`|∂_t u|²` of the affine interpolant, integrated exactly),
/// gradient (`|∇u|²`), and potential (`|u|^p`) contributions, the latter two
/// sampled backward-constant per interval to match the functional's own
/// sampling.
#[derive(Debug, Clone)]
pub struct EnergyReport {
    pub value: f64,
    pub window: (f64, f64),
    pub velocity: f64,
    pub gradient: f64,
    pub potential: f64,
}

/// `Σ_edges h ((u_{j+1}-u_j)/h)²`, i.e. twice the gradient part of `phi`.
fn gradient_energy(u: &StateVector) -> f64 {
    match u.domain() {
        SpatialDomain::Scalar => 0.0,
        SpatialDomain::Interval { mesh: h, .. } => {
            let d = u.dofs();
            let mut acc = d[0] * d[0];
            for w in d.windows(2) {
                let e = w[1] - w[0];
                acc += e * e;
            }
            acc += d[d.len() - 1] * d[d.len() - 1];
            acc / h
        }
    }
}

/// `h Σ |u_j|^p` with the growth exponent of the potential; zero when the
/// potential is disabled.
fn potential_energy(u: &StateVector, nl: &Nonlinearity) -> f64 {
    match nl.growth_exponent() {
        None => 0.0,
        Some(p) => {
            let sum: f64 = u.dofs().iter().map(|&r| r.abs().powf(p)).sum();
            match u.domain() {
                SpatialDomain::Scalar => sum,
                SpatialDomain::Interval { mesh: h, .. } => h * sum,
            }
        }
    }
}

pub fn energy_lhs(traj: &Trajectory, nl: &Nonlinearity) -> Result<EnergyReport> {
    let n = traj.grid().steps();
    if n < 5 {
        return Err(Error::Config(format!(
            "energy window (tau, T - 2 tau) needs n >= 5, got {n}"
        )));
    }
    let tau = traj.grid().tau();
    let t_final = traj.grid().final_time();
    let (w_lo, w_hi) = (tau, t_final - 2.0 * tau);
    let delta = discrete_derivative(traj.states(), tau, 1)?; // δu_i, i = 1..=n
    let mut velocity = 0.0;
    let mut grad = 0.0;
    let mut pot = 0.0;
    for i in 1..=n {
        let lo = (i as f64 - 1.0) * tau;
        let hi = i as f64 * tau;
        let covered = (hi.min(w_hi) - lo.max(w_lo)).max(0.0);
        if covered == 0.0 {
            continue;
        }
        let du = &delta[i - 1];
        velocity += covered * du.inner(du);
        grad += covered * gradient_energy(traj.state(i));
        pot += covered * potential_energy(traj.state(i), nl);
    }
    Ok(EnergyReport {
        value: velocity + grad + pot,
        window: (w_lo, w_hi),
        velocity,
        gradient: grad,
        potential: pot,
    })
}

/// Max over `i = 2..=n-2` of the spatial norm of the Euler-Lagrange residual
/// `eps² δ⁴u_{i+2} - 2 eps δ³u_{i+1} + δ²u_i + A u_i`, evaluated directly
/// (no weights), so it measures stationarity on the unweighted scale.
pub fn el_residual(traj: &Trajectory, prob: &WedProblem) -> Result<f64> {
    let n = prob.grid().steps();
    if traj.states().len() != n + 1 {
        return Err(Error::Dimension("trajectory size does not match problem".into()));
    }
    let tau = prob.grid().tau();
    let eps = prob.eps();
    let d2 = discrete_derivative(traj.states(), tau, 2)?;
    let d3 = discrete_derivative(&d2, tau, 1)?;
    let d4 = discrete_derivative(&d3, tau, 1)?;
    let mut worst = 0.0_f64;
    for i in 2..=n - 2 {
        let mut r = d4[i - 2].scale(eps * eps);
        r.axpy(-2.0 * eps, &d3[i - 2]);
        r.axpy(1.0, &d2[i - 2]);
        r.axpy(1.0, &grad_phi(traj.state(i), prob.nonlinearity()));
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// Spatial norms of the final conditions `(‖δ²u_n‖, ‖δ³u_n‖)`.
pub fn final_bc_residual(traj: &Trajectory) -> Result<(f64, f64)> {
    let tau = traj.grid().tau();
    let d2 = discrete_derivative(traj.states(), tau, 2)?;
    let d3 = discrete_derivative(&d2, tau, 1)?;
    Ok((d2.last().unwrap().norm(), d3.last().unwrap().norm()))
}

/// Distance notion between a trajectory and a time-sampled reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceNorm {
    /// Sup over trajectory nodes of the spatial norm of the difference.
    SupL2,
    /// Tau-weighted (trapezoid in time) L² norm of the spatial differences.
    L2L2,
}

pub fn distance(traj: &Trajectory, reference: &TimeSampled, norm: DistanceNorm) -> Result<f64> {
    let t_final = traj.grid().final_time();
    let span = t_final.max(1.0);
    if reference.start_time() > 1e-9 * span || reference.end_time() < t_final - 1e-9 * span {
        return Err(Error::Domain(format!(
            "reference covers [{}, {}], trajectory needs [0, {t_final}]",
            reference.start_time(),
            reference.end_time()
        )));
    }
    let n = traj.grid().steps();
    let tau = traj.grid().tau();
    let mut sup = 0.0_f64;
    let mut sum = 0.0_f64;
    for i in 0..=n {
        let t = traj.grid().node(i).min(reference.end_time());
        let diff = traj.state(i).sub(&reference.eval(t)?).norm();
        sup = sup.max(diff);
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        sum += w * tau * diff * diff;
    }
    Ok(match norm {
        DistanceNorm::SupL2 => sup,
        DistanceNorm::L2L2 => sum.sqrt(),
    })
}

/// Discrete trajectory whose nodes are backward means of a continuous
/// candidate: `u_0 = u⁰`, `u_1 = u⁰ + tau u¹`, and
/// `u_i = (1/tau) ∫_{(i-1)tau}^{i tau} u_ref` for `i >= 2`.
/// The result lies in the constraint set by construction.
pub fn recovery_trajectory<F>(u_ref: F, prob: &WedProblem, quad_points: usize) -> Result<Trajectory>
where
    F: Fn(f64) -> StateVector,
{
    let n = prob.grid().steps();
    let tau = prob.grid().tau();
    let at0 = u_ref(0.0);
    let u0 = prob.initial_position();
    let mismatch = at0.sub(u0).norm();
    if mismatch > 1e-6 * (1.0 + u0.norm()) {
        return Err(Error::Domain(format!(
            "candidate does not attain the initial position: |u_ref(0) - u0| = {mismatch:e}"
        )));
    }
    let mut states = Vec::with_capacity(n + 1);
    states.push(u0.clone());
    let mut u1 = u0.clone();
    u1.axpy(tau, prob.initial_velocity());
    states.push(u1);
    for i in 2..=n {
        states.push(backward_mean(&u_ref, tau, i as f64 * tau, quad_points)?);
    }
    Trajectory::new(*prob.grid(), states)
}

/// Fine composite-Simpson quadrature of the continuous weighted functional
/// `∫_0^T e^{-t/eps} ( |u_tt|²/2 + phi(u)/eps² ) dt` for a candidate given
/// with its second time derivative. `samples` is rounded up to an odd count.
pub fn continuous_functional<F, G>(
    value: F,
    accel: G,
    nl: &Nonlinearity,
    eps: f64,
    t_final: f64,
    samples: usize,
) -> f64
where
    F: Fn(f64) -> StateVector,
    G: Fn(f64) -> StateVector,
{
    let nodes = if samples % 2 == 0 { samples + 1 } else { samples.max(3) };
    let h = t_final / (nodes as f64 - 1.0);
    let integrand = |t: f64| {
        let a = accel(t);
        let u = value(t);
        (-t / eps).exp() * (0.5 * a.inner(&a) + crate::spatial::phi(&u, nl) / (eps * eps))
    };
    let mut acc = integrand(0.0) + integrand(t_final);
    for k in 1..nodes - 1 {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * integrand(k as f64 * h);
    }
    acc * h / 3.0
}

/// Per-`eps` record of the convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceRecord {
    pub eps: f64,
    pub tau: f64,
    /// Sup-in-time, L²-in-space distance to the reference.
    pub dist_sup: f64,
    /// L²-in-time distance to the reference.
    pub dist_l2: f64,
    pub energy: EnergyReport,
    /// Final-condition residuals `(‖δ²u_n‖, ‖δ³u_n‖)`.
    pub bc_res: (f64, f64),
    /// `|δu_2 - u¹|`: the first discrete velocity not pinned by the
    /// constraint. Reported as an initial-velocity attainment diagnostic,
    /// never asserted.
    pub u1_gap: f64,
    pub newton_iters: usize,
    pub converged: bool,
    pub objective: f64,
    pub grad_norm: f64,
    pub el_residual: f64,
}

/// Build the record for a single converged (or capped) minimization.
pub fn record_for(
    result: &MinimizeResult,
    prob: &WedProblem,
    reference: &TimeSampled,
) -> Result<ConvergenceRecord> {
    let traj = &result.traj;
    let tau = prob.grid().tau();
    let delta2 = traj.state(2).sub(traj.state(1)).scale(1.0 / tau);
    let u1_gap = delta2.sub(prob.initial_velocity()).norm();
    Ok(ConvergenceRecord {
        eps: prob.eps(),
        tau,
        dist_sup: distance(traj, reference, DistanceNorm::SupL2)?,
        dist_l2: distance(traj, reference, DistanceNorm::L2L2)?,
        energy: energy_lhs(traj, prob.nonlinearity())?,
        bc_res: final_bc_residual(traj)?,
        u1_gap,
        newton_iters: result.newton_iters,
        converged: result.converged,
        objective: result.objective,
        grad_norm: result.grad_norm,
        el_residual: el_residual(traj, prob)?,
    })
}

/// One converged sweep point: the summary record plus the trajectory it was
/// computed from (callers serialize the trajectory separately).
#[derive(Debug)]
pub struct StudyPoint {
    pub record: ConvergenceRecord,
    pub traj: Trajectory,
}

/// Outcome of one sweep point; solver failures are carried per record so a
/// sweep never aborts wholesale.
#[derive(Debug)]
pub struct StudyOutcome {
    pub eps: f64,
    pub outcome: Result<StudyPoint>,
}

/// Problem family for the study: everything but `eps` is shared.
#[derive(Debug, Clone)]
pub struct StudyFamily {
    pub domain: SpatialDomain,
    pub nl: Nonlinearity,
    pub u0: StateVector,
    pub u1: StateVector,
    pub grid: TimeGrid,
}

impl StudyFamily {
    pub fn problem(&self, eps: f64) -> Result<WedProblem> {
        WedProblem::new(
            self.domain,
            self.nl.clone(),
            self.u0.clone(),
            self.u1.clone(),
            self.grid,
            eps,
        )
    }
}

/// Run one fresh minimization per `eps` (descending list) against a common
/// reference. Sweep points execute on up to `jobs` worker threads; records
/// are merged back in input order, so the output is deterministic.
pub fn convergence_study(
    family: &StudyFamily,
    eps_list: &[f64],
    reference: &TimeSampled,
    opts: &SolverOptions,
    jobs: usize,
) -> Result<Vec<StudyOutcome>> {
    if eps_list.is_empty() {
        return Err(Error::Config("eps list must be nonempty".into()));
    }
    for w in eps_list.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::Config("eps list must be strictly descending".into()));
        }
    }
    if !(eps_list[eps_list.len() - 1] > 0.0) {
        return Err(Error::Config("eps values must be positive".into()));
    }

    let slots: Mutex<Vec<Option<StudyOutcome>>> =
        Mutex::new((0..eps_list.len()).map(|_| None).collect());
    let cursor = AtomicUsize::new(0);
    let workers = jobs.max(1).min(eps_list.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = cursor.fetch_add(1, Ordering::Relaxed);
                if k >= eps_list.len() {
                    break;
                }
                let eps = eps_list[k];
                let outcome = family
                    .problem(eps)
                    .and_then(|prob| {
                        minimize(&prob, opts, None).map(|result| (prob, result))
                    })
                    .and_then(|(prob, result)| {
                        record_for(&result, &prob, reference)
                            .map(|record| StudyPoint { record, traj: result.traj })
                    });
                slots.lock().unwrap()[k] = Some(StudyOutcome { eps, outcome });
            });
        }
    });

    Ok(slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|s| s.expect("every slot filled"))
        .collect())
}

/// Convert a trajectory to the sampled-function form (node samples).
pub fn trajectory_samples(traj: &Trajectory) -> TimeSampled {
    let times = (0..=traj.grid().steps()).map(|i| traj.grid().node(i)).collect();
    TimeSampled::new(times, traj.states().to_vec()).expect("trajectory nodes are uniform")
}
