//! Uniform time grids, exponential discrete weights, backward difference
//! operators, nodal interpolants, and the backward mean operator.
//!
//! The weights `rho_i = (eps/(eps+tau))^i` are the backward Euler solution of
//! `rho' + rho/eps = 0`, i.e. the discrete counterpart of `exp(-t/eps)`; the
//! recurrence `(rho_i - rho_{i-1})/tau + rho_i/eps = 0` holds to machine
//! precision by construction.
//!
//! Backward differences are evaluated as nested first differences (never as
//! expanded stencils). For smooth data the inner subtractions are exact or
//! nearly so, which keeps fourth differences of trajectories far more
//! accurate than the `eps_mach/tau^4` bound a five-point stencil would give;
//! weight factors are applied only after differencing.

use crate::spatial::StateVector;
use crate::{Error, Result};

/// Uniform partition of `[0, T]` into `n` steps of size `tau = T/n`.
///
/// `n >= 4` so that the interior index range `i = 2..n-2` of the discrete
/// functional is nonempty. `tau` is computed once and reused by every
/// index/time conversion to avoid drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    final_time: f64,
    steps: usize,
    tau: f64,
}

impl TimeGrid {
    pub fn new(final_time: f64, steps: usize) -> Result<Self> {
        if !(final_time > 0.0) || !final_time.is_finite() {
            return Err(Error::Config(format!(
                "final time must be positive and finite, got {final_time}"
            )));
        }
        if steps < 4 {
            return Err(Error::Config(format!("n too small: need n >= 4, got {steps}")));
        }
        let tau = final_time / steps as f64;
        Ok(TimeGrid { final_time, steps, tau })
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    /// Number of steps `n`; the grid carries `n + 1` nodes.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.tau
    }
}

/// Exponential discrete weights `rho_i = (eps/(eps+tau))^i`, `i = 0..=n`.
#[derive(Debug, Clone)]
pub struct WeightVector {
    rho: Vec<f64>,
    eps: f64,
}

impl WeightVector {
    pub fn new(grid: &TimeGrid, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Config(format!("eps must be positive, got {eps}")));
        }
        let q = eps / (eps + grid.tau());
        let mut rho = Vec::with_capacity(grid.steps() + 1);
        rho.push(1.0);
        for i in 1..=grid.steps() {
            rho.push(rho[i - 1] * q);
        }
        if !rho[grid.steps()].is_normal() {
            return Err(Error::Config(format!(
                "weights underflow: rho_n = {:e} for eps = {eps}, n = {}",
                rho[grid.steps()],
                grid.steps()
            )));
        }
        Ok(WeightVector { rho, eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn get(&self, i: usize) -> f64 {
        self.rho[i]
    }
}

/// Interpolation mode for trajectory evaluation between nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpMode {
    /// `u(t) = u_i` for `t` in `((i-1) tau, i tau]`.
    BackwardConstant,
    /// Piecewise affine through the nodes.
    Affine,
}

/// Discrete trajectory `(u_0, ..., u_n)` on a time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: TimeGrid,
    states: Vec<StateVector>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, states: Vec<StateVector>) -> Result<Self> {
        if states.len() != grid.steps() + 1 {
            return Err(Error::Dimension(format!(
                "trajectory needs {} states, got {}",
                grid.steps() + 1,
                states.len()
            )));
        }
        let domain = states[0].domain();
        for (i, s) in states.iter().enumerate() {
            if s.domain() != domain {
                return Err(Error::Dimension(format!("state {i} lives on a different domain")));
            }
            if !s.is_finite() {
                return Err(Error::NonFinite(format!("trajectory state {i}")));
            }
        }
        Ok(Trajectory { grid, states })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &StateVector {
        &self.states[i]
    }

    /// Evaluate the trajectory at time `t` in `[0, T]`.
    ///
    /// Both modes return `u_0` at `t = 0`. Times within one part in 1e12 of a
    /// node snap to that node, so node queries are exact in either mode.
    pub fn interpolate(&self, t: f64, mode: InterpMode) -> Result<StateVector> {
        let tau = self.grid.tau();
        let n = self.grid.steps();
        if !(0.0..=self.grid.final_time() * (1.0 + 1e-12)).contains(&t) {
            return Err(Error::Domain(format!(
                "time {t} outside [0, {}]",
                self.grid.final_time()
            )));
        }
        let s = t / tau;
        let rounded = s.round();
        let on_node = (s - rounded).abs() <= 1e-12 * (n as f64).max(1.0);
        let i = if on_node { rounded as usize } else { s.ceil() as usize };
        let i = i.min(n);
        if i == 0 || on_node {
            return Ok(self.states[i].clone());
        }
        match mode {
            InterpMode::BackwardConstant => Ok(self.states[i].clone()),
            InterpMode::Affine => {
                let alpha = (t - (i as f64 - 1.0) * tau) / tau;
                let alpha = alpha.clamp(0.0, 1.0);
                let mut out = self.states[i - 1].scale(1.0 - alpha);
                out.axpy(alpha, &self.states[i]);
                Ok(out)
            }
        }
    }
}

/// A function of time known through samples on a uniform grid, evaluated
/// between samples by local four-point (cubic Lagrange) interpolation.
///
/// Reference solutions are passed around in this form, which decouples the
/// diagnostics from any particular integrator.
#[derive(Debug, Clone)]
pub struct TimeSampled {
    times: Vec<f64>,
    states: Vec<StateVector>,
}

impl TimeSampled {
    pub fn new(times: Vec<f64>, states: Vec<StateVector>) -> Result<Self> {
        if times.len() != states.len() || times.len() < 2 {
            return Err(Error::Dimension(format!(
                "need matching times/states with at least 2 samples, got {}/{}",
                times.len(),
                states.len()
            )));
        }
        let dt = times[1] - times[0];
        if !(dt > 0.0) {
            return Err(Error::Config("sample times must increase".into()));
        }
        for w in times.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
                return Err(Error::Config("sample grid must be uniform".into()));
            }
        }
        let domain = states[0].domain();
        for s in &states {
            if s.domain() != domain {
                return Err(Error::Dimension("samples live on different domains".into()));
            }
        }
        Ok(TimeSampled { times, states })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn sample_step(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// Cubic interpolation at `t` within the sampled range (a relative slack
    /// of 1e-9 is allowed at the ends for roundoff in node times).
    pub fn eval(&self, t: f64) -> Result<StateVector> {
        let t0 = self.start_time();
        let t1 = self.end_time();
        let span = t1 - t0;
        if t < t0 - 1e-9 * span || t > t1 + 1e-9 * span {
            return Err(Error::Domain(format!("time {t} outside sampled range [{t0}, {t1}]")));
        }
        let t = t.clamp(t0, t1);
        let dt = self.sample_step();
        let last = self.times.len() - 1;
        let k = (((t - t0) / dt).floor() as usize).min(last - 1);
        // four-point stencil clamped at the ends (fewer points on very short
        // sample sets degrade gracefully to quadratic/linear interpolation)
        let width = self.times.len().min(4);
        let lo = k.saturating_sub(1).min(self.times.len() - width);
        let pts: Vec<usize> = (lo..lo + width).collect();
        let mut out = StateVector::zeros(self.states[0].domain());
        for &a in &pts {
            let mut w = 1.0;
            for &b in &pts {
                if a != b {
                    w *= (t - self.times[b]) / (self.times[a] - self.times[b]);
                }
            }
            out.axpy(w, &self.states[a]);
        }
        Ok(out)
    }
}

/// `k`-fold backward difference of a state sequence, as nested first
/// differences. Output length is `values.len() - k`; entry `j` of the result
/// is `delta^k w_{j+k}` in the original indexing.
pub fn discrete_derivative(values: &[StateVector], tau: f64, order: usize) -> Result<Vec<StateVector>> {
    if order == 0 {
        return Err(Error::Domain("difference order must be >= 1".into()));
    }
    if values.len() <= order {
        return Err(Error::Dimension(format!(
            "need at least {} values for an order-{order} difference, got {}",
            order + 1,
            values.len()
        )));
    }
    let mut cur: Vec<StateVector> = values.to_vec();
    for _ in 0..order {
        cur = first_difference(&cur, tau);
    }
    Ok(cur)
}

fn first_difference(values: &[StateVector], tau: f64) -> Vec<StateVector> {
    values
        .windows(2)
        .map(|w| w[1].sub(&w[0]).scale(1.0 / tau))
        .collect()
}

/// Backward mean `(1/tau) ∫_{t-tau}^{t} f(s) ds` by composite Simpson
/// quadrature with `quad_points` nodes (exact on quadratics for
/// `quad_points >= 3`; even counts are rounded up to the next odd;
/// `quad_points = 2` falls back to the trapezoid rule).
pub fn backward_mean<F>(f: F, tau: f64, t: f64, quad_points: usize) -> Result<StateVector>
where
    F: Fn(f64) -> StateVector,
{
    if !(t > tau) {
        return Err(Error::Domain(format!("backward mean needs t > tau, got t = {t}, tau = {tau}")));
    }
    if quad_points < 2 {
        return Err(Error::Domain("quadrature needs at least 2 nodes".into()));
    }
    let a = t - tau;
    if quad_points == 2 {
        let mut acc = f(a).scale(0.5);
        acc.axpy(0.5, &f(t));
        return Ok(acc);
    }
    let nodes = if quad_points % 2 == 0 { quad_points + 1 } else { quad_points };
    let h = tau / (nodes as f64 - 1.0);
    // Simpson weights (1,4,2,...,4,1) * h/3, then divided by tau for the mean.
    let mut acc = f(a);
    for k in 1..nodes - 1 {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc.axpy(w, &f(a + k as f64 * h));
    }
    acc.axpy(1.0, &f(t));
    Ok(acc.scale(h / (3.0 * tau)))
}
