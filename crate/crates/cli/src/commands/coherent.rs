use anyhow::{bail, Result};
use clap::Args;
use qspace_core::coherent::{linspace, matrix_element_xp, overlap_table, CoherentLabel, Displacer};
use qspace_core::csv::CsvTable;
use qspace_core::exec;
use qspace_core::fock::build_xp;
use serde_json::json;

use crate::config::{require_finite, Common};
use crate::output::{Outcome, Setup};

#[derive(Args, Debug, Clone)]
pub struct OverlapArgs {
    /// Fock cutoff.
    #[arg(long)]
    pub n_levels: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub grid_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub grid_max: Option<f64>,
    /// Points per axis of the square label grid.
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Tolerance for overlaps and matrix elements.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Tolerance for `<l|l> = 1`.
    #[arg(long)]
    pub self_tol: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

pub fn run(args: &OverlapArgs) -> Result<Outcome> {
    let mut setup = Setup::new(&args.common)?;
    let r = &mut setup.resolver;
    let n = r.get("n-levels", args.n_levels, 128)?;
    let lo = require_finite("grid-min", r.get("grid-min", args.grid_min, -2.0)?)?;
    let hi = require_finite("grid-max", r.get("grid-max", args.grid_max, 2.0)?)?;
    let points = r.get("grid-points", args.grid_points, 9)?;
    let tol = r.get("tol", args.tol, 1e-8)?;
    let self_tol = r.get("self-tol", args.self_tol, 1e-10)?;
    if points == 0 || hi < lo {
        bail!("label grid needs at least one point and grid-min <= grid-max");
    }
    let exec = setup.exec;
    let values = linspace(lo, hi, points);

    let rows = overlap_table(&values, n, exec)?;

    let displacer = Displacer::new(n)?;
    let labels: Vec<CoherentLabel> = values
        .iter()
        .flat_map(|&p| values.iter().map(move |&x| CoherentLabel::new(p, x)))
        .collect();
    let states = exec::try_map(exec, &labels, |l| displacer.coherent_state(l))?;
    let (xop, pop) = build_xp(n, 1.0)?;
    let xs = exec::try_map(exec, &states, |s| xop.apply(s))?;
    let ps = exec::try_map(exec, &states, |s| pop.apply(s))?;
    let idx: Vec<usize> = (0..labels.len()).collect();
    let elements = exec::try_map(exec, &idx, |&i| -> qspace_core::Result<Vec<[f64; 10]>> {
        let mut out = Vec::with_capacity(labels.len());
        for j in 0..labels.len() {
            let (ax, ap) = matrix_element_xp(&labels[i], &labels[j], 1.0)?;
            let nx = states[i].inner(&xs[j])?;
            let np = states[i].inner(&ps[j])?;
            out.push([
                labels[i].p[0],
                labels[i].x[0],
                labels[j].p[0],
                labels[j].x[0],
                ax.re,
                ax.im,
                ap.re,
                ap.im,
                (nx - ax).norm(),
                (np - ap).norm(),
            ]);
        }
        Ok(out)
    })?;

    let mut out = setup.into_output("coherent overlap")?;
    let mut overlap_csv = CsvTable::new(&["p1", "x1", "p2", "x2", "re", "im", "abs", "numeric_re", "numeric_im"]);
    let mut overlap_diff = 0.0f64;
    let mut self_dev = 0.0f64;
    for row in &rows {
        overlap_diff = overlap_diff.max((row.numeric - row.analytic).norm());
        if row.p1 == row.p2 && row.x1 == row.x2 {
            self_dev = self_dev.max((row.numeric.norm() - 1.0).abs()).max((row.analytic.norm() - 1.0).abs());
        }
        overlap_csv.push(vec![
            row.p1,
            row.x1,
            row.p2,
            row.x2,
            row.analytic.re,
            row.analytic.im,
            row.analytic.norm(),
            row.numeric.re,
            row.numeric.im,
        ]);
    }
    let mut element_csv = CsvTable::new(&[
        "p1", "x1", "p2", "x2", "x_re", "x_im", "p_re", "p_im", "x_err", "p_err",
    ]);
    let mut element_diff = 0.0f64;
    for row in elements.into_iter().flatten() {
        element_diff = element_diff.max(row[8]).max(row[9]);
        element_csv.push(row.to_vec());
    }
    out.csv("overlap.csv", &overlap_csv)?;
    out.csv("matrix_elements.csv", &element_csv)?;

    let mut failures = Vec::new();
    if !(overlap_diff <= tol) {
        failures.push(format!("overlap kernel, numeric vs closed form ({overlap_diff:e} > {tol:e})"));
    }
    if !(self_dev <= self_tol) {
        failures.push(format!("self-overlap normalization ({self_dev:e} > {self_tol:e})"));
    }
    if !(element_diff <= tol) {
        failures.push(format!("X and P matrix elements, numeric vs closed form ({element_diff:e} > {tol:e})"));
    }
    let results = json!({
        "labels": labels.len(),
        "pairs": rows.len(),
        "overlap_max_diff": overlap_diff,
        "self_overlap_max_dev": self_dev,
        "matrix_element_max_diff": element_diff,
        "tolerance": tol,
        "self_tolerance": self_tol,
    });
    out.finish(results, failures)
}
