use anyhow::{bail, Context, Result};
use clap::Args;
use qspace_core::coherent::CoherentLabel;
use qspace_core::contraction::{
    classical_trajectory_emergence, default_hbar_grid, overlap_decay_sweep, position_basis_contraction, EmergenceSpec,
    NPolicy, SweepSpec,
};
use qspace_core::csv::CsvTable;
use qspace_core::fock::HamiltonianKind;
use qspace_core::grid::Grid;
use serde_json::json;

use crate::config::{parse_list, require_finite, require_positive, Common};
use crate::output::{Outcome, Setup};

fn format_grid(g: &[f64]) -> String {
    g.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// `p1,x1,p2,x2` groups separated by `;`, or `same` for a coincident pair.
fn parse_pairs(s: &str) -> Result<Vec<(CoherentLabel, CoherentLabel)>> {
    if s.trim() == "same" {
        return Ok(vec![(CoherentLabel::new(0.0, 1.0), CoherentLabel::new(0.0, 1.0))]);
    }
    s.split(';')
        .map(|group| {
            let v = parse_list(group).with_context(|| format!("pair `{}`", group.trim()))?;
            if v.len() != 4 || v.iter().any(|x| !x.is_finite()) {
                bail!("pair `{}` needs four finite values p1,x1,p2,x2", group.trim());
            }
            Ok((CoherentLabel::new(v[0], v[1]), CoherentLabel::new(v[2], v[3])))
        })
        .collect()
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// Relabeled label pairs `p1,x1,p2,x2;...`, or `same`.
    #[arg(long, allow_hyphen_values = true)]
    pub pairs: Option<String>,
    /// Strictly decreasing hbar values, comma-separated.
    #[arg(long)]
    pub hbar_grid: Option<String>,
    /// Relative tolerance on the fitted slope.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Tolerance on numeric-vs-analytic overlaps.
    #[arg(long)]
    pub numeric_tol: Option<f64>,
    /// Largest Fock cutoff used for numeric overlaps.
    #[arg(long)]
    pub max_levels: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

pub fn run_sweep(args: &SweepArgs) -> Result<Outcome> {
    let mut setup = Setup::new(&args.common)?;
    let r = &mut setup.resolver;
    let pairs = parse_pairs(&r.get("pairs", args.pairs.clone(), "0,0,0,1".to_string())?)?;
    let grid = parse_list(&r.get("hbar-grid", args.hbar_grid.clone(), format_grid(&default_hbar_grid()))?)
        .context("`hbar-grid`")?;
    let tol = r.get("tol", args.tol, 1e-3)?;
    let numeric_tol = r.get("numeric-tol", args.numeric_tol, 1e-8)?;
    let policy = NPolicy {
        max_levels: r.get("max-levels", args.max_levels, NPolicy::default().max_levels)?,
        ..NPolicy::default()
    };
    let exec = setup.exec;
    let spec = SweepSpec::new(grid, pairs, policy)?;
    let report = overlap_decay_sweep(&spec, exec)?;

    let mut out = setup.into_output("contract sweep")?;
    let mut failures = Vec::new();
    let mut summaries = Vec::new();
    for (i, pair) in report.pairs.iter().enumerate() {
        let mut t = CsvTable::new(&["hbar", "abs_overlap", "offdiag_x", "offdiag_p", "numeric_abs_overlap"]);
        for row in &pair.rows {
            t.push(vec![
                row.hbar,
                row.abs_overlap,
                row.offdiag_x,
                row.offdiag_p,
                row.numeric_abs_overlap.unwrap_or(f64::NAN),
            ]);
        }
        t.comment(format!(
            "pair {i}: (p1,x1) = ({},{}) (p2,x2) = ({},{})",
            pair.l1.p[0], pair.l1.x[0], pair.l2.p[0], pair.l2.x[0]
        ));
        out.csv(&format!("decay_{i}.csv"), &t)?;

        let rel = pair.relative_slope_error();
        if !(rel <= tol) {
            failures.push(format!(
                "pair {i}: fitted slope {} vs expected {} (relative error {rel:e} > {tol:e})",
                pair.fitted_slope, pair.expected_slope
            ));
        }
        if let Some(d) = pair.max_numeric_diff {
            if !(d <= numeric_tol) {
                failures.push(format!("pair {i}: numeric vs analytic overlap ({d:e} > {numeric_tol:e})"));
            }
        }
        let ratios: Vec<f64> = pair.rows.iter().map(|r| r.offdiag_x.max(r.offdiag_p)).collect();
        let monotone = ratios.windows(2).all(|w| w[1] <= w[0]);
        if !monotone {
            failures.push(format!("pair {i}: off-diagonal ratio not monotone along the hbar grid"));
        }
        let numeric_rows = pair.rows.iter().filter(|r| r.numeric_abs_overlap.is_some()).count();
        summaries.push(json!({
            "p1": pair.l1.p[0],
            "x1": pair.l1.x[0],
            "p2": pair.l2.p[0],
            "x2": pair.l2.x[0],
            "fitted_slope": pair.fitted_slope,
            "slope_stderr": pair.slope_stderr,
            "expected_slope": pair.expected_slope,
            "relative_error": rel,
            "max_numeric_diff": pair.max_numeric_diff,
            "numeric_rows": numeric_rows,
            "offdiag_ratio": ratios,
            "offdiag_monotone": monotone,
        }));
    }
    let results = json!({
        "hbar_grid": spec.hbar_grid,
        "tolerance": tol,
        "numeric_tolerance": numeric_tol,
        "pairs": summaries,
    });
    out.finish(results, failures)
}

#[derive(Args, Debug, Clone)]
pub struct ClassicalArgs {
    /// `harmonic` or `quartic`.
    #[arg(long)]
    pub hamiltonian: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub p0: Option<f64>,
    #[arg(long)]
    pub hbar_grid: Option<String>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Max deviation allowed for the harmonic case.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Required ratio of the first to the last deviation for anharmonic cases.
    #[arg(long)]
    pub min_ratio: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

pub fn run_classical(args: &ClassicalArgs) -> Result<Outcome> {
    let mut setup = Setup::new(&args.common)?;
    let r = &mut setup.resolver;
    let name = r.get("hamiltonian", args.hamiltonian.clone(), "quartic".to_string())?;
    let lambda = r.get("lambda", args.lambda, 0.1)?;
    let kind = match name.as_str() {
        "harmonic" => HamiltonianKind::Harmonic,
        "quartic" => HamiltonianKind::Quartic(lambda),
        "free" => bail!("the free particle does not stay localized; use harmonic or quartic"),
        other => bail!("unknown Hamiltonian `{other}` (expected harmonic or quartic)"),
    };
    let x0 = r.get("x0", args.x0, 1.0)?;
    let p0 = r.get("p0", args.p0, 0.5)?;
    let grid = parse_list(&r.get("hbar-grid", args.hbar_grid.clone(), "1,0.1,0.01,0.001".to_string())?)
        .context("`hbar-grid`")?;
    let t_final = r.get("t-final", args.t_final, 10.0)?;
    let dt = r.get("dt", args.dt, 0.005)?;
    let tol = r.get("tol", args.tol, 1e-6)?;
    let min_ratio = r.get("min-ratio", args.min_ratio, 10.0)?;
    let exec = setup.exec;
    let spec = EmergenceSpec {
        x0,
        p0,
        hbar_grid: grid,
        kind,
        t_final,
        dt,
    };
    spec.validate()?;
    let report = classical_trajectory_emergence(&spec, exec)?;

    let mut out = setup.into_output("contract classical")?;
    out.csv("classical.csv", &report.table())?;
    let devs: Vec<f64> = report.rows.iter().map(|r| r.max_deviation).collect();
    let mut failures = Vec::new();
    let ratio = match (devs.first(), devs.last()) {
        (Some(a), Some(b)) if *b > 0.0 => a / b,
        _ => f64::INFINITY,
    };
    let monotone = devs.windows(2).all(|w| w[1] <= w[0]);
    if kind == HamiltonianKind::Harmonic {
        for row in &report.rows {
            if !(row.max_deviation <= tol) {
                failures.push(format!(
                    "harmonic center follows the classical flow at hbar={} ({:e} > {tol:e})",
                    row.hbar, row.max_deviation
                ));
            }
        }
    } else {
        if !monotone {
            failures.push("deviation nonincreasing as hbar decreases".to_string());
        }
        if devs.len() > 1 && !(ratio >= min_ratio) {
            failures.push(format!(
                "deviation shrinks by {min_ratio} across the hbar grid (ratio {ratio})"
            ));
        }
    }
    let rows: Vec<_> = report
        .rows
        .iter()
        .map(|r| json!({"hbar": r.hbar, "max_traj_dev": r.max_deviation, "grid_points": r.grid_points}))
        .collect();
    let results = json!({
        "rows": rows,
        "ratio_first_to_last": if ratio.is_finite() { json!(ratio) } else { json!("inf") },
        "monotone": monotone,
    });
    out.finish(results, failures)
}

#[derive(Args, Debug, Clone)]
pub struct PositionArgs {
    /// Proxy centers, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub centers: Option<String>,
    #[arg(long)]
    pub hbar_grid: Option<String>,
    /// Half-width of the position grid.
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Grid points (even).
    #[arg(long)]
    pub points: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

pub fn run_position(args: &PositionArgs) -> Result<Outcome> {
    let mut setup = Setup::new(&args.common)?;
    let r = &mut setup.resolver;
    let centers = parse_list(&r.get("centers", args.centers.clone(), "-1,0,1".to_string())?).context("`centers`")?;
    for c in &centers {
        require_finite("centers", *c)?;
    }
    let hbar_grid = parse_list(&r.get("hbar-grid", args.hbar_grid.clone(), "1,0.1,0.01,0.001".to_string())?)
        .context("`hbar-grid`")?;
    let half = require_positive("half-width", r.get("half-width", args.half_width, 8.0)?)?;
    let points = r.get("points", args.points, 4096)?;
    let exec = setup.exec;
    let grid = Grid::new(points, 2.0 * half / points as f64)?;
    let report = position_basis_contraction(&centers, &hbar_grid, &grid, exec)?;

    let mut out = setup.into_output("contract position")?;
    let mut t = CsvTable::new(&[
        "hbar",
        "max_offdiag_overlap",
        "numeric_offdiag_overlap",
        "max_offdiag_x",
        "max_center_error",
        "underflow",
    ]);
    for row in &report.rows {
        t.push(vec![
            row.hbar,
            row.max_offdiag_overlap,
            row.numeric_offdiag_overlap,
            row.max_offdiag_x,
            row.max_center_error,
            if row.underflow { 1.0 } else { 0.0 },
        ]);
    }
    if report.resolution_warning {
        t.comment("warning: grid spacing exceeds the narrowest proxy width");
    }
    out.csv("position.csv", &t)?;
    let results = json!({
        "rows": report.rows.len(),
        "resolution_warning": report.resolution_warning,
        "grid_spacing": grid.spacing(),
    });
    out.finish(results, Vec::new())
}
