//! Subcommand drivers: solve, table the results, report failures through
//! process exit codes (0 ok, 1 configuration, 2 solver, 3 failed audit).

use crate::config::{ConfigError, RunConfig};
use crate::output::{self, FigureTable};
use pulse_area::{build_audit_report, solve_trajectory, Method, Trajectory};
use std::fmt;
use std::path::Path;

/// Undamped runs that feed the plot window need a tail long enough to
/// cover tau = 5 ns, so their area bound sits closer to the separatrix
/// than the general-purpose default.
const FIGURE_UNDAMPED_THETA_MAX: f64 = 2.0 * std::f64::consts::PI - 1e-5;

/// Anything that should end the process with a nonzero status.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments: exit 1.
    Config(ConfigError),
    /// A solve failed: exit 2. Carries the damping value it failed at.
    Solve { lambda: f64, source: pulse_area::Error },
    /// The solved sweep cannot produce the requested output: exit 2.
    Run(String),
    /// A hard self-check failed: exit 3.
    AuditFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Solve { .. } | CliError::Run(_) => 2,
            CliError::AuditFailed(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Solve { lambda, source } => {
                write!(f, "solve failed at lambda = {lambda}: {source}")
            }
            CliError::Run(msg) => write!(f, "{msg}"),
            CliError::AuditFailed(msg) => write!(f, "audit failed: {msg}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

/// Create the output directory and prove it is writable before any solve
/// spends time.
fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    let probe = || -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let p = dir.join(".write_probe");
        std::fs::write(&p, b"ok")?;
        std::fs::remove_file(&p)
    };
    probe().map_err(|source| {
        CliError::Config(ConfigError::BadValue {
            key: "out_dir".into(),
            reason: format!("cannot create or write {}: {source}", dir.display()),
        })
    })
}

fn solve_sweep_entry(
    cfg: &RunConfig,
    lambda: f64,
    method: Method,
    undamped_theta_max: Option<f64>,
) -> Result<Trajectory, CliError> {
    let params = cfg
        .params_for(lambda)
        .map_err(|source| CliError::Solve { lambda, source })?;
    let mut sc = cfg.solver_config_for(lambda);
    if lambda == 0.0 && cfg.theta_max.is_none() {
        if let Some(tm) = undamped_theta_max {
            sc.theta_max = tm;
        }
    }
    solve_trajectory(&params, &sc, method).map_err(|source| CliError::Solve { lambda, source })
}

/// `simulate`: one trajectory table per sweep entry.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    prepare_out_dir(&cfg.out_dir)?;
    for &lambda in &cfg.lambda_sweep {
        let traj = solve_sweep_entry(cfg, lambda, Method::Quadrature, None)?;
        let path = cfg.out_dir.join(output::trajectory_filename(lambda));
        output::write_trajectory_csv(&path, &traj)
            .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))?;
        println!("wrote {} ({} rows)", path.display(), traj.len());
    }
    Ok(())
}

/// `figures --which N`: the column subset behind one standard plot, on a
/// time window shared by the whole sweep.
pub fn cmd_figures(cfg: &RunConfig, which: u32) -> Result<(), CliError> {
    let (filename, quantity) = match which {
        1 => ("figure1_area.csv", "theta"),
        2 => ("figure2_envelope.csv", "envelope"),
        3 => ("figure3_phase.csv", "phi"),
        other => {
            return Err(CliError::Config(ConfigError::BadValue {
                key: "which".into(),
                reason: format!("figures are numbered 1 to 3, got {other}"),
            }))
        }
    };
    prepare_out_dir(&cfg.out_dir)?;

    let mut solved = Vec::new();
    for &lambda in &cfg.lambda_sweep {
        let traj =
            solve_sweep_entry(cfg, lambda, Method::Quadrature, Some(FIGURE_UNDAMPED_THETA_MAX))?;
        solved.push((lambda, traj));
    }

    // Clip the standard plot window to what every run actually covers.
    let mut lo: f64 = -3.0;
    let mut hi: f64 = 5.0;
    for (_, traj) in &solved {
        let (a, b) = traj.tau_range();
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if hi <= lo {
        return Err(CliError::Run(format!(
            "sweep trajectories share no part of the plot window, got [{lo:.3}, {hi:.3}] ns"
        )));
    }
    let n = cfg.n_grid.max(2);
    let tau: Vec<f64> = (0..n)
        .map(|k| (lo + (hi - lo) * k as f64 / (n - 1) as f64).clamp(lo, hi))
        .collect();

    let mut columns = Vec::new();
    for (lambda, traj) in &solved {
        let label = format!("{}_lambda_{}", quantity, output::lambda_label(*lambda));
        let col: Result<Vec<f64>, pulse_area::Error> = tau
            .iter()
            .map(|&t| match which {
                1 => traj.theta_at(t),
                2 => traj.envelope_at(t),
                _ => traj.phi_at(t),
            })
            .collect();
        let col = col.map_err(|source| CliError::Solve {
            lambda: *lambda,
            source,
        })?;
        columns.push((label, col));
    }

    let table = FigureTable {
        filename: filename.into(),
        quantity,
        tau,
        columns,
    };
    output::write_figure(&cfg.out_dir, &table)
        .map_err(|e| CliError::Run(format!("cannot write figure table: {e}")))?;
    println!("wrote {} ({} rows)", cfg.out_dir.join(filename).display(), n);
    Ok(())
}

/// `audit`: both routes per sweep entry, one diagnostic block per damping
/// value written to a summary file and echoed to stdout, exit 3 naming
/// every hard check that failed.
pub fn cmd_audit(cfg: &RunConfig) -> Result<(), CliError> {
    prepare_out_dir(&cfg.out_dir)?;
    let mut summary = String::new();
    let mut failures = Vec::new();
    for (i, &lambda) in cfg.lambda_sweep.iter().enumerate() {
        let params = cfg
            .params_for(lambda)
            .map_err(|source| CliError::Solve { lambda, source })?;
        let sc = cfg.solver_config_for(lambda);
        let report = build_audit_report(&params, &sc)
            .map_err(|source| CliError::Solve { lambda, source })?;
        if i > 0 {
            summary.push('\n');
        }
        summary.push_str(&output::format_audit(&report));
        let bad = report.hard_failures();
        if !bad.is_empty() {
            failures.push(format!("lambda = {lambda}: {}", bad.join(",")));
        }
    }
    let path = cfg.out_dir.join("audit_summary.txt");
    std::fs::write(&path, &summary)
        .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))?;
    print!("{summary}");
    println!();
    println!("wrote {}", path.display());
    if failures.is_empty() {
        println!("audit = ok");
        Ok(())
    } else {
        Err(CliError::AuditFailed(failures.join("; ")))
    }
}
