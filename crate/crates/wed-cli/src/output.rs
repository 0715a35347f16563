//! CSV emission with fixed column orders and locale-free formatting.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use wed_core::diagnostics::ConvergenceRecord;
use wed_core::spatial::SpatialDomain;
use wed_core::temporal::{TimeSampled, Trajectory};

/// Scientific notation with `sig` significant digits; deterministic and
/// locale-independent.
pub fn fmt_float(x: f64, sig: usize) -> String {
    format!("{:.*e}", sig.saturating_sub(1), x)
}

pub fn write_file(path: &Path, content: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(content.as_bytes())?;
    w.flush()
}

fn dof_headers(domain: &SpatialDomain) -> String {
    match domain {
        SpatialDomain::Scalar => "u".to_string(),
        SpatialDomain::Interval { .. } => domain
            .nodes()
            .iter()
            .map(|x| format!("u({x})"))
            .collect::<Vec<_>>()
            .join(","),
    }
}

/// Trajectory CSV: `t` column followed by one column per spatial degree of
/// freedom (interval headers carry the node coordinates).
pub fn trajectory_csv(traj: &Trajectory, sig: usize) -> String {
    let domain = traj.state(0).domain();
    let mut out = format!("t,{}\n", dof_headers(&domain));
    for (i, s) in traj.states().iter().enumerate() {
        out.push_str(&fmt_float(traj.grid().node(i), sig));
        for v in s.dofs() {
            out.push(',');
            out.push_str(&fmt_float(*v, sig));
        }
        out.push('\n');
    }
    out
}

/// Sampled-reference CSV in the same layout as the trajectory CSV.
pub fn sampled_csv(sol: &TimeSampled, sig: usize) -> String {
    let domain = sol.states()[0].domain();
    let mut out = format!("t,{}\n", dof_headers(&domain));
    for (t, s) in sol.times().iter().zip(sol.states()) {
        out.push_str(&fmt_float(*t, sig));
        for v in s.dofs() {
            out.push(',');
            out.push_str(&fmt_float(*v, sig));
        }
        out.push('\n');
    }
    out
}

pub const SUMMARY_HEADER: &str =
    "eps,tau,objective,grad_norm,newton_iters,el_residual,bc_res_2,bc_res_3,energy_value\n";

pub struct SummaryData {
    pub eps: f64,
    pub tau: f64,
    pub objective: f64,
    pub grad_norm: f64,
    pub newton_iters: usize,
    pub el_residual: f64,
    pub bc_res: (f64, f64),
    pub energy_value: f64,
}

pub fn summary_row(s: &SummaryData, sig: usize) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}\n",
        fmt_float(s.eps, sig),
        fmt_float(s.tau, sig),
        fmt_float(s.objective, sig),
        fmt_float(s.grad_norm, sig),
        s.newton_iters,
        fmt_float(s.el_residual, sig),
        fmt_float(s.bc_res.0, sig),
        fmt_float(s.bc_res.1, sig),
        fmt_float(s.energy_value, sig),
    )
}

pub const SWEEP_HEADER: &str = "eps,tau,dist_sup,dist_l2,energy_value,u1_gap,iterations,status\n";

pub fn sweep_row(rec: &ConvergenceRecord, sig: usize) -> String {
    format!(
        "{},{},{},{},{},{},{},ok\n",
        fmt_float(rec.eps, sig),
        fmt_float(rec.tau, sig),
        fmt_float(rec.dist_sup, sig),
        fmt_float(rec.dist_l2, sig),
        fmt_float(rec.energy.value, sig),
        fmt_float(rec.u1_gap, sig),
        rec.newton_iters,
    )
}

pub fn sweep_failure_row(eps: f64, tau: f64, message: &str, sig: usize) -> String {
    // the status column is last; failures leave the numeric fields empty
    let msg = message.replace(',', ";").replace('\n', " ");
    format!("{},{},,,,,,failed: {msg}\n", fmt_float(eps, sig), fmt_float(tau, sig))
}

pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

/// Stable per-eps trajectory file name (`Display` of f64 is shortest
/// round-trip, so 0.4 prints as `0.4`).
pub fn trajectory_file_name(eps: f64) -> String {
    format!("trajectory_eps_{eps}.csv")
}
