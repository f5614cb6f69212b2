use anyhow::{bail, Result};
use clap::Args;
use nalgebra::Rotation3;
use qspace_core::coset::{
    group_law_defect, orbit, orbit_galilei, orbit_table, ConfigPoint, CosetPoint, GalileiElement,
    InfinitesimalElement, PhasePoint, SpaceTime, Vec3,
};
use serde_json::json;

use crate::config::{parse_vec3, require_finite, require_positive, Common};
use crate::output::{Outcome, Setup};

#[derive(Args, Debug, Clone)]
pub struct OrbitArgs {
    /// `spacetime`, `config` or `phase`.
    #[arg(long)]
    pub coset: Option<String>,
    /// `group` (repeated finite element, space-time only) or `flow`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Flow parameter increment per step.
    #[arg(long)]
    pub step: Option<f64>,
    /// Time translation.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Boost velocity `v1,v2,v3`.
    #[arg(long, allow_hyphen_values = true)]
    pub v: Option<String>,
    /// Rotation vector: axis times angle in group mode, angular velocity in flow mode.
    #[arg(long, allow_hyphen_values = true)]
    pub rotation: Option<String>,
    /// Space translation `a1,a2,a3`.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub pbar: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub xbar: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub thetabar: Option<f64>,
    /// Initial point: time.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Initial point: position.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Initial point: momentum (phase coset).
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<String>,
    /// Initial point: phase.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Random elements in the group-law check.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

fn vec3(key: &str, s: &str) -> Result<Vec3> {
    let v = parse_vec3(key, s)?;
    for c in v {
        require_finite(key, c)?;
    }
    Ok(Vec3::from(v))
}

const ZERO3: &str = "0,0,0";

pub fn run(args: &OrbitArgs) -> Result<Outcome> {
    let mut setup = Setup::new(&args.common)?;
    let r = &mut setup.resolver;
    let coset = r.get("coset", args.coset.clone(), "spacetime".to_string())?;
    if !matches!(coset.as_str(), "spacetime" | "config" | "phase") {
        bail!("unknown coset `{coset}` (expected spacetime, config or phase)");
    }
    let default_mode = if coset == "spacetime" { "group" } else { "flow" };
    let mode = r.get("mode", args.mode.clone(), default_mode.to_string())?;
    match mode.as_str() {
        "flow" => {}
        "group" if coset == "spacetime" => {}
        "group" => bail!("group mode needs finite elements, available only on spacetime; use --mode flow"),
        other => bail!("unknown mode `{other}` (expected group or flow)"),
    }
    let steps = r.get("steps", args.steps, 10)?;
    let step = require_positive("step", r.get("step", args.step, 1.0)?)?;
    let b = require_finite("b", r.get("b", args.b, 0.0)?)?;
    let v = vec3("v", &r.get("v", args.v.clone(), ZERO3.to_string())?)?;
    let rot = vec3("rotation", &r.get("rotation", args.rotation.clone(), ZERO3.to_string())?)?;
    let a = vec3("a", &r.get("a", args.a.clone(), ZERO3.to_string())?)?;
    let pbar = vec3("pbar", &r.get("pbar", args.pbar.clone(), ZERO3.to_string())?)?;
    let xbar = vec3("xbar", &r.get("xbar", args.xbar.clone(), ZERO3.to_string())?)?;
    let thetabar = require_finite("thetabar", r.get("thetabar", args.thetabar, 0.0)?)?;
    let t0 = require_finite("t", r.get("t", args.t, 1.0)?)?;
    let x0 = vec3("x", &r.get("x", args.x.clone(), ZERO3.to_string())?)?;
    let p0 = vec3("p", &r.get("p", args.p.clone(), ZERO3.to_string())?)?;
    let theta0 = require_finite("theta", r.get("theta", args.theta, 0.0)?)?;
    let samples = r.get("samples", args.samples, 1000)?;
    let tol = r.get("tol", args.tol, qspace_core::EXACT_TOL)?;
    let seed = setup.seed;
    let exec = setup.exec;

    let points = if mode == "group" {
        let g = GalileiElement::new(b, v, Rotation3::new(rot).into_inner(), a)?;
        orbit_galilei(&g, &SpaceTime { t: t0, x: x0 }, steps)
    } else {
        let mut e = InfinitesimalElement::zero().with_rotation(rot);
        e.b = b;
        e.v = v;
        e.a = a;
        e.p_bar = pbar;
        e.x_bar = xbar;
        e.theta_bar = thetabar;
        let pt = match coset.as_str() {
            "spacetime" => CosetPoint::SpaceTime(SpaceTime { t: t0, x: x0 }),
            "config" => CosetPoint::Config(ConfigPoint { x: x0, theta: theta0 }),
            _ => CosetPoint::Phase(PhasePoint {
                p: p0,
                x: x0,
                theta: theta0,
            }),
        };
        orbit(&e, &pt, step, steps)
    };
    if points.iter().any(|p| !p.is_finite()) {
        bail!("orbit left the finite range; reduce the element or the step count");
    }

    let mut out = setup.into_output("coset orbit")?;
    let table = orbit_table(&points);
    out.csv("orbit.csv", &table)?;

    let defect = group_law_defect(samples, 1.0, seed, exec);
    let mut failures = Vec::new();
    if !(defect <= tol) {
        failures.push(format!("Galilei group law over {samples} random elements (deviation {defect:e} > {tol:e})"));
    }
    let first = points.first().map(CosetPoint::coordinates);
    let last = points.last().map(CosetPoint::coordinates);
    let results = json!({
        "columns": table.header,
        "initial": first,
        "final": last,
        "group_law": {"samples": samples, "max_deviation": defect, "tolerance": tol},
    });
    out.finish(results, failures)
}
