use anyhow::{bail, Context, Result};
use clap::Args;
use qspace_core::coherent::{fock_label, CoherentLabel, Displacer};
use qspace_core::csv::CsvTable;
use qspace_core::fock::{build_hamiltonian, FockOperator, HamiltonianKind};
use qspace_core::projective::{
    coordinates_table, equivalence_report, gradient_check, hamiltonian_value, observables_table, ray_invariants,
    to_coordinates, EvolutionSpec, Method, Trajectory,
};
use qspace_core::EXACT_TOL;
use serde_json::json;

use crate::config::{require_finite, require_positive, Common};
use crate::output::{Outcome, Setup};

#[derive(Args, Debug, Clone)]
pub struct EvolveArgs {
    /// `harmonic`, `free` or `quartic`.
    #[arg(long)]
    pub hamiltonian: Option<String>,
    /// Quartic coupling.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Custom Hamiltonian as `row,col,re,im` CSV; overrides the kind and N.
    #[arg(long, value_name = "FILE")]
    pub hamiltonian_file: Option<String>,
    #[arg(long)]
    pub n_levels: Option<usize>,
    #[arg(long)]
    pub hbar: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// `rk4` or `leapfrog`.
    #[arg(long)]
    pub method: Option<String>,
    /// Initial coherent state center, position.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    /// Initial coherent state center, momentum.
    #[arg(long, allow_hyphen_values = true)]
    pub p0: Option<f64>,
    /// Write every n-th step to the trajectory files.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Max coordinate deviation between the two flows.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub norm_tol: Option<f64>,
    #[arg(long)]
    pub energy_tol: Option<f64>,
    /// Relative tolerance of the gradient check.
    #[arg(long)]
    pub gradient_tol: Option<f64>,
    /// Central-difference step of the gradient check.
    #[arg(long)]
    pub fd_step: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

fn subsample<T: Clone>(traj: &Trajectory<T>, stride: usize) -> Trajectory<T> {
    let n = traj.times.len();
    let keep: Vec<usize> = (0..n).filter(|&i| i % stride == 0 || i + 1 == n).collect();
    Trajectory {
        times: keep.iter().map(|&i| traj.times[i]).collect(),
        states: keep.iter().map(|&i| traj.states[i].clone()).collect(),
    }
}

pub fn run(args: &EvolveArgs) -> Result<Outcome> {
    let mut setup = Setup::new(&args.common)?;
    let r = &mut setup.resolver;
    let file = r.get_opt("hamiltonian-file", args.hamiltonian_file.clone())?;
    let kind_name = r.get("hamiltonian", args.hamiltonian.clone(), "harmonic".to_string())?;
    let lambda = r.get("lambda", args.lambda, 0.1)?;
    let n = r.get("n-levels", args.n_levels, 32)?;
    let hbar = require_positive("hbar", r.get("hbar", args.hbar, 1.0)?)?;
    let t_final = r.get("t-final", args.t_final, 10.0)?;
    let dt = r.get("dt", args.dt, 1e-3)?;
    let method = match r.get("method", args.method.clone(), "rk4".to_string())?.as_str() {
        "rk4" => Method::Rk4,
        "leapfrog" => Method::Leapfrog,
        other => bail!("unknown method `{other}` (expected rk4 or leapfrog)"),
    };
    let x0 = require_finite("x0", r.get("x0", args.x0, 1.0)?)?;
    let p0 = require_finite("p0", r.get("p0", args.p0, 0.5)?)?;
    let stride = r.get("stride", args.stride, 100)?;
    let tol = r.get("tol", args.tol, 1e-6)?;
    let norm_tol = r.get("norm-tol", args.norm_tol, 1e-8)?;
    let energy_tol = r.get("energy-tol", args.energy_tol, 1e-8)?;
    let gradient_tol = r.get("gradient-tol", args.gradient_tol, 1e-6)?;
    let fd_step = require_positive("fd-step", r.get("fd-step", args.fd_step, 1e-5)?)?;
    if stride == 0 {
        bail!("`stride` must be at least 1");
    }
    let seed = setup.seed;

    let hamiltonian = match &file {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            let h = FockOperator::from_csv(&text, hbar, "H").with_context(|| format!("in {path}"))?;
            let defect = h.hermiticity_defect();
            if defect > EXACT_TOL {
                bail!("Hamiltonian in {path} is not Hermitian (max |H - H^dagger| = {defect:e})");
            }
            h
        }
        None => {
            let kind = match kind_name.as_str() {
                "harmonic" => HamiltonianKind::Harmonic,
                "free" => HamiltonianKind::Free,
                "quartic" => HamiltonianKind::Quartic(lambda),
                other => bail!("unknown Hamiltonian `{other}` (expected harmonic, free or quartic)"),
            };
            build_hamiltonian(kind, n, hbar)?
        }
    };
    let spec = EvolutionSpec::new(hamiltonian, t_final, dt, method)?;
    let label = fock_label(&CoherentLabel::new(p0, x0), hbar);
    let psi0 = Displacer::new(spec.hamiltonian.n_levels())?
        .coherent_state(&label)
        .context("initial coherent state")?;

    let report = equivalence_report(&psi0, &spec)?;
    let h = &spec.hamiltonian;
    let c0 = to_coordinates(&psi0, hbar)?;
    let grad0 = gradient_check(h, &c0, fd_step)?;
    let grad1 = match report.hamilton.last() {
        Some(c) => gradient_check(h, c, fd_step)?,
        None => grad0,
    };
    let grad = grad0.max(grad1);
    let ray = ray_invariants(&psi0, h, seed)?;

    let mut out = setup.into_output("evolve")?;
    let mut eq = CsvTable::new(&["t", "deviation", "H", "norm"]);
    for (i, (s, c)) in report.schrodinger.states.iter().zip(&report.hamilton.states).enumerate() {
        if i % stride == 0 || i + 1 == report.schrodinger.states.len() {
            eq.push(vec![
                report.schrodinger.times[i],
                to_coordinates(s, hbar)?.distance(c),
                hamiltonian_value(h, c)?,
                s.norm(),
            ]);
        }
    }
    out.csv("equivalence.csv", &eq)?;
    let sch = subsample(&report.schrodinger, stride);
    out.csv("observables.csv", &observables_table(&sch, h)?)?;
    let sch_coords = Trajectory {
        times: sch.times.clone(),
        states: sch
            .states
            .iter()
            .map(|s| to_coordinates(s, hbar))
            .collect::<qspace_core::Result<Vec<_>>>()?,
    };
    out.csv("schrodinger.csv", &coordinates_table(&sch_coords))?;
    out.csv("hamilton.csv", &coordinates_table(&subsample(&report.hamilton, stride)))?;

    let mut failures = Vec::new();
    let checks = [
        ("Schrödinger and Hamilton flows agree", report.max_deviation, tol),
        ("norm conserved", report.norm_drift, norm_tol),
        ("H conserved along the Hamilton flow", report.energy_drift, energy_tol),
        ("analytic H gradient matches finite differences", grad, gradient_tol),
        ("expectations invariant under global phases", ray.phase_sensitivity, EXACT_TOL),
    ];
    for (what, value, limit) in checks {
        if !(value <= limit) {
            failures.push(format!("{what} ({value:e} > {limit:e})"));
        }
    }
    let (steps, dt_used) = spec.steps();
    let results = json!({
        "n_levels": h.n_levels(),
        "steps": steps,
        "dt_used": dt_used,
        "rows": report.schrodinger.times.len(),
        "max_deviation": report.max_deviation,
        "norm_drift": report.norm_drift,
        "energy_drift": report.energy_drift,
        "gradient_rel_error": grad,
        "initial_energy": hamiltonian_value(h, &c0)?,
        "ray": {
            "expectations": ray.expectations,
            "phase_sensitivity": ray.phase_sensitivity,
        },
    });
    out.finish(results, failures)
}
