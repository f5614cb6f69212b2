use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use qspace_core::algebra::{
    contract, contraction_limit, galilei_s, heisenberg_rotations, jacobi_defect, ContractionParams, StructureTable,
};
use qspace_core::csv::CsvTable;
use serde_json::{json, Value};

use crate::config::{parse_list, Common};
use crate::output::{Outcome, Setup};

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    /// Contraction scales, comma-separated (each >= 1).
    #[arg(long)]
    pub k: Option<String>,
    /// Extra structure table to check, in the bracket text format.
    #[arg(long, value_name = "FILE")]
    pub table: Option<String>,
    /// Residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

const SCALED: [&str; 6] = ["X1", "X2", "X3", "P1", "P2", "P3"];

fn has_scaled(t: &StructureTable) -> bool {
    SCALED.iter().all(|g| t.names().iter().any(|n| n == g))
}

struct Entry {
    name: String,
    k: Option<f64>,
    table: StructureTable,
}

pub fn run(args: &VerifyArgs) -> Result<Outcome> {
    let mut setup = Setup::new(&args.common)?;
    let r = &mut setup.resolver;
    let ks = parse_list(&r.get("k", args.k.clone(), "1,10,100,1000".to_string())?).context("`k`")?;
    let table_path = r.get_opt("table", args.table.clone())?;
    let tol = r.get("tol", args.tol, qspace_core::EXACT_TOL)?;

    let mut bases = vec![
        ("G(3)_s".to_string(), galilei_s()),
        ("H_R(3)".to_string(), heisenberg_rotations()),
    ];
    if let Some(p) = &table_path {
        let text = std::fs::read_to_string(PathBuf::from(p)).with_context(|| format!("reading table {p}"))?;
        let t = StructureTable::parse(&text).with_context(|| format!("in table file {p}"))?;
        bases.push(("custom".to_string(), t));
    }
    let params: Vec<ContractionParams> = ks.iter().map(|&k| ContractionParams::new(k)).collect::<Result<_, _>>()?;

    let mut entries = Vec::new();
    let mut limits = Vec::new();
    for (name, t) in &bases {
        entries.push(Entry {
            name: name.clone(),
            k: None,
            table: t.clone(),
        });
        if !has_scaled(t) {
            continue;
        }
        for p in &params {
            entries.push(Entry {
                name: format!("{name} k={}", p.k()),
                k: Some(p.k()),
                table: contract(t, p)?,
            });
        }
        let lim = contraction_limit(t, &SCALED)?;
        limits.push((name.clone(), lim.clone()));
        entries.push(Entry {
            name: format!("{name} limit"),
            k: Some(f64::INFINITY),
            table: lim,
        });
    }

    let mut out = setup.into_output("algebra verify")?;
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    let mut text = String::new();
    let mut csv = CsvTable::new(&["k", "jacobi", "antisymmetry"]);
    for e in &entries {
        let jac = jacobi_defect(&e.table);
        let anti = e.table.antisymmetry_defect();
        if !(jac <= tol) {
            failures.push(format!("Jacobi identity in {} (residual {jac:e} > {tol:e})", e.name));
        }
        if !(anti <= tol) {
            failures.push(format!("antisymmetry in {} (residual {anti:e} > {tol:e})", e.name));
        }
        csv.push(vec![e.k.unwrap_or(1.0), jac, anti]);
        rows.push(json!({
            "table": e.name,
            "k": e.k.map(|k| if k.is_finite() { json!(k) } else { json!("inf") }),
            "jacobi": jac,
            "antisymmetry": anti,
        }));
        text.push_str(&format!("## {}\n{}\n", e.name, e.table.to_text()));
    }

    let mut limit_checks = Vec::new();
    for (name, lim) in &limits {
        let mut xp_zero = true;
        for i in 1..=3 {
            for j in 1..=3 {
                xp_zero &= lim.bracket_named(&format!("X{i}"), &format!("P{j}"))?.is_zero();
            }
        }
        if !xp_zero {
            failures.push(format!("[X^c,P^c] = 0 in the {name} limit"));
        }
        let i_decoupled = if lim.names().iter().any(|n| n == "I") {
            let d = lim.is_decoupled("I")?;
            if !d {
                failures.push(format!("I decoupled in the {name} limit"));
            }
            Value::Bool(d)
        } else {
            Value::Null
        };
        limit_checks.push(json!({"table": name, "xp_commute": xp_zero, "i_decoupled": i_decoupled}));
    }

    out.csv("residuals.csv", &csv)?;
    out.text("tables.txt", &text)?;
    let results = json!({
        "tolerance": tol,
        "residuals": rows,
        "limits": limit_checks,
    });
    out.finish(results, failures)
}
