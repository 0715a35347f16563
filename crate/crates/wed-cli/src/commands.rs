//! The `minimize`, `sweep`, and `reference` subcommands.

use std::path::Path;

use wed_core::diagnostics::{
    convergence_study, el_residual, energy_lhs, final_bc_residual, StudyFamily,
};
use wed_core::solver::{minimize, solve_limit};
use wed_core::spatial::StateVector;
use wed_core::temporal::{TimeGrid, TimeSampled};
use wed_core::Error as CoreError;

use crate::config::ExperimentConfig;
use crate::output::{
    self, out_path, summary_row, sweep_failure_row, sweep_row, trajectory_csv,
    trajectory_file_name, write_file, SummaryData, SUMMARY_HEADER, SWEEP_HEADER,
};

/// Failure modes mapped to the exit-code contract:
/// 0 success, 1 configuration, 2 solver, 3 validation.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(String),
    Validation,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Validation => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::Validation => write!(f, "validation failed"),
        }
    }
}

fn core_err(e: CoreError) -> CliError {
    match e {
        CoreError::Config(_) | CoreError::Dimension(_) | CoreError::Domain(_) => {
            CliError::Config(e.to_string())
        }
        _ => CliError::Solver(e.to_string()),
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Solver(format!("i/o failure: {e}"))
}

pub struct ProblemParts {
    pub family: StudyFamily,
    pub u0: StateVector,
    pub u1: StateVector,
}

pub fn build_parts(cfg: &ExperimentConfig) -> Result<ProblemParts, CliError> {
    let domain = cfg.domain().map_err(|e| CliError::Config(e.to_string()))?;
    let nl = cfg.nonlinearity().map_err(|e| CliError::Config(e.to_string()))?;
    let u0 = cfg.u0.build(domain).map_err(core_err)?;
    let u1 = cfg.u1.build(domain).map_err(core_err)?;
    let grid = TimeGrid::new(cfg.t_final, cfg.steps).map_err(core_err)?;
    Ok(ProblemParts {
        family: StudyFamily { domain, nl, u0: u0.clone(), u1: u1.clone(), grid },
        u0,
        u1,
    })
}

fn reference_for(parts: &ProblemParts, cfg: &ExperimentConfig) -> Result<TimeSampled, CliError> {
    solve_limit(
        parts.family.domain,
        &parts.family.nl,
        &parts.u0,
        &parts.u1,
        cfg.t_final,
        cfg.reference_dt,
    )
    .map_err(core_err)
}

/// Single-eps minimization: trajectory CSV plus a one-row summary CSV.
/// Outputs are written only after the solve succeeds, so a failure leaves
/// nothing behind.
pub fn run_minimize(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(), CliError> {
    if cfg.eps.len() != 1 {
        return Err(CliError::Config(format!(
            "minimize needs a single eps value, got {}",
            cfg.eps.len()
        )));
    }
    let eps = cfg.eps[0];
    let parts = build_parts(cfg)?;
    let prob = parts.family.problem(eps).map_err(core_err)?;
    let opts = cfg.solver_options();
    let res = minimize(&prob, &opts, None).map_err(|e| CliError::Solver(e.to_string()))?;
    if !res.converged {
        return Err(CliError::Solver(format!(
            "minimization did not converge: gradient norm {:e} after {} iterations",
            res.grad_norm, res.newton_iters
        )));
    }
    let summary = SummaryData {
        eps,
        tau: prob.grid().tau(),
        objective: res.objective,
        grad_norm: res.grad_norm,
        newton_iters: res.newton_iters,
        el_residual: el_residual(&res.traj, &prob).map_err(core_err)?,
        bc_res: final_bc_residual(&res.traj).map_err(core_err)?,
        energy_value: energy_lhs(&res.traj, prob.nonlinearity()).map_err(core_err)?.value,
    };
    let sig = cfg.precision;
    write_file(&out_path(out_dir, "trajectory.csv"), &trajectory_csv(&res.traj, sig))
        .map_err(io_err)?;
    let mut s = SUMMARY_HEADER.to_string();
    s.push_str(&summary_row(&summary, sig));
    write_file(&out_path(out_dir, "summary.csv"), &s).map_err(io_err)?;
    Ok(())
}

/// Vanishing-eps sweep: one reference solve, one minimization per eps (in
/// parallel up to `jobs`), per-eps trajectory CSVs and a summary CSV in
/// descending-eps order. Succeeds if at least one sweep point converged.
pub fn run_sweep(cfg: &ExperimentConfig, out_dir: &Path, jobs: usize) -> Result<(), CliError> {
    let parts = build_parts(cfg)?;
    let reference = reference_for(&parts, cfg)?;
    let opts = cfg.solver_options();
    let outcomes = convergence_study(&parts.family, &cfg.eps, &reference, &opts, jobs)
        .map_err(core_err)?;

    let sig = cfg.precision;
    let tau = parts.family.grid.tau();
    let mut summary = SWEEP_HEADER.to_string();
    let mut successes = 0usize;
    for o in &outcomes {
        match &o.outcome {
            Ok(point) => {
                if point.record.converged {
                    successes += 1;
                    summary.push_str(&sweep_row(&point.record, sig));
                } else {
                    let mut row = sweep_row(&point.record, sig);
                    row = row.replace(",ok\n", ",not_converged\n");
                    summary.push_str(&row);
                }
                write_file(
                    &out_path(out_dir, &trajectory_file_name(o.eps)),
                    &trajectory_csv(&point.traj, sig),
                )
                .map_err(io_err)?;
            }
            Err(e) => {
                summary.push_str(&sweep_failure_row(o.eps, tau, &e.to_string(), sig));
            }
        }
    }
    write_file(&out_path(out_dir, "sweep_summary.csv"), &summary).map_err(io_err)?;
    write_file(&out_path(out_dir, "reference.csv"), &output::sampled_csv(&reference, sig))
        .map_err(io_err)?;
    if successes == 0 {
        return Err(CliError::Solver("no sweep point converged".into()));
    }
    Ok(())
}

/// Reference integration only.
pub fn run_reference(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(), CliError> {
    let parts = build_parts(cfg)?;
    let reference = reference_for(&parts, cfg)?;
    write_file(
        &out_path(out_dir, "reference.csv"),
        &output::sampled_csv(&reference, cfg.precision),
    )
    .map_err(io_err)?;
    Ok(())
}
