//! Deterministic table writers.
//!
//! Every number is printed with twelve significant digits through the same
//! formatter, so identical runs produce byte-identical files on any
//! platform.

use pulse_area::{AuditReport, ExtremumKind, Trajectory};
use std::io::{self, Write};
use std::path::Path;

/// Header of a full trajectory table, one column per stored field.
pub const TRAJECTORY_HEADER: &str =
    "tau_ns,theta_rad,theta_dot_rad_per_ns,envelope_M_over_mu,phi_rad";

/// Twelve significant digits, scientific, locale-independent.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

/// Label a damping value for file names and column headers ("0", "0.25").
pub fn lambda_label(lambda: f64) -> String {
    format!("{lambda}")
}

/// File name of the per-damping trajectory table.
pub fn trajectory_filename(lambda: f64) -> String {
    format!("trajectory_lambda_{}.csv", lambda_label(lambda))
}

/// Write one trajectory as CSV with the fixed five-column header.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> io::Result<()> {
    let mut w = io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for i in 0..traj.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_num(traj.tau()[i]),
            fmt_num(traj.theta()[i]),
            fmt_num(traj.theta_dot()[i]),
            fmt_num(traj.envelope()[i]),
            fmt_num(traj.phi()[i]),
        )?;
    }
    w.flush()
}

/// One figure's wide table: a shared time column plus one data column per
/// damping value.
pub struct FigureTable {
    /// Data file name.
    pub filename: String,
    /// What the data columns hold ("envelope", "theta", "phi").
    pub quantity: &'static str,
    /// Shared time grid, ns.
    pub tau: Vec<f64>,
    /// (column label, samples) per damping value.
    pub columns: Vec<(String, Vec<f64>)>,
}

/// Write the wide table and a small manifest describing it.
pub fn write_figure(dir: &Path, table: &FigureTable) -> io::Result<()> {
    let mut w = io::BufWriter::new(std::fs::File::create(dir.join(&table.filename))?);
    let labels: Vec<&str> = table.columns.iter().map(|(l, _)| l.as_str()).collect();
    writeln!(w, "tau_ns,{}", labels.join(","))?;
    for (i, &t) in table.tau.iter().enumerate() {
        write!(w, "{}", fmt_num(t))?;
        for (_, col) in &table.columns {
            write!(w, ",{}", fmt_num(col[i]))?;
        }
        writeln!(w)?;
    }
    w.flush()?;

    let manifest_name = table.filename.replace(".csv", "_manifest.txt");
    let mut m = io::BufWriter::new(std::fs::File::create(dir.join(manifest_name))?);
    writeln!(m, "file = {}", table.filename)?;
    writeln!(m, "quantity = {}", table.quantity)?;
    writeln!(m, "rows = {}", table.tau.len())?;
    writeln!(
        m,
        "tau_window_ns = [{}, {}]",
        fmt_num(table.tau[0]),
        fmt_num(*table.tau.last().unwrap())
    )?;
    writeln!(m, "columns = tau_ns,{}", labels.join(","))?;
    m.flush()
}

/// Render one audit report as a key = value block.
pub fn format_audit(report: &AuditReport) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    line("lambda", lambda_label(report.lambda));
    line("tau_start_ns", fmt_num(report.tau_range.0));
    line("tau_end_ns", fmt_num(report.tau_range.1));
    line("theta_end_rad", fmt_num(report.theta_end));
    line("final_area_excess_rad", fmt_num(report.final_area_excess));
    line("route_max_abs_dtheta_rad", fmt_num(report.route_max_abs_dtheta));
    line("route_max_abs_dphi_rad", fmt_num(report.route_max_abs_dphi));
    if let Some(e) = report.soliton_max_abs_theta_err {
        line("soliton_max_abs_theta_err_rad", fmt_num(e));
    }
    if let Some(e) = report.soliton_max_abs_env_err {
        line("soliton_max_abs_env_err", fmt_num(e));
    }
    line("extrema_count", report.extrema.len().to_string());
    for (i, ext) in report.extrema.iter().enumerate() {
        let kind = match ext.kind {
            ExtremumKind::Maximum => "max",
            ExtremumKind::Minimum => "min",
        };
        line(
            &format!("extremum_{i}"),
            format!(
                "{} tau_ns={} theta_rad={} envelope={}",
                kind,
                fmt_num(ext.tau),
                fmt_num(ext.theta),
                fmt_num(ext.envelope)
            ),
        );
    }
    line("max_extremum_offset_rad", fmt_num(report.max_extremum_offset));
    if let Some(fit) = &report.asymptotes {
        line("plateau_envelope", fmt_num(fit.plateau));
        line("plateau_envelope_exact", fmt_num(fit.plateau_exact));
        line("plateau_rel_err", fmt_num(fit.plateau_rel_err));
        line("phase_slope_rad_per_ns", fmt_num(fit.slope));
        line("phase_slope_exact_rad_per_ns", fmt_num(fit.slope_exact));
        line("phase_slope_rel_err", fmt_num(fit.slope_rel_err));
    }
    line("gamma_mean_ratio", fmt_num(report.gamma_mean_ratio));
    line("radicand_clamp_events", report.clamp_events.to_string());
    let failures = report.hard_failures();
    line(
        "hard_failures",
        if failures.is_empty() {
            "none".into()
        } else {
            failures.join(",")
        },
    );
    out
}
