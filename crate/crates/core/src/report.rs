//! CSV and JSON renderings of trajectories, condition reports and oracle
//! results.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::oracle::OracleResult;
use crate::schedule::{ConditionReport, Outcome};
use crate::solver::Trajectory;

pub const TRAJECTORY_HEADER: &str = "k,step_norm,splitting_gap,minty_residual,dist_to_solution,certificate";

/// Full-precision float cell; 17 significant digits.
pub fn cell(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(cell).unwrap_or_default()
}

pub fn trajectory_csv(t: &Trajectory) -> String {
    let mut out = String::with_capacity(64 * (t.records.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for r in &t.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k,
            cell(r.step_norm),
            cell(r.splitting_gap),
            cell(r.minty_residual),
            opt_cell(r.dist_to_solution),
            opt_cell(r.certificate)
        );
    }
    out
}

/// Comparison table: one distance column per labelled trajectory, rows
/// aligned by iteration index. Trajectories that stopped early leave
/// empty cells.
pub fn comparison_csv(columns: &[(String, Vec<f64>)]) -> String {
    let rows = columns.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let mut out = String::from("k");
    for (label, _) in columns {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    for i in 0..rows {
        let _ = write!(out, "{}", i + 1);
        for (_, v) in columns {
            out.push(',');
            if let Some(x) = v.get(i) {
                out.push_str(&cell(*x));
            }
        }
        out.push('\n');
    }
    out
}

pub fn outcome_str(o: Outcome) -> &'static str {
    match o {
        Outcome::Pass => "pass",
        Outcome::Fail => "fail",
        Outcome::Inconsistent => "inconsistent",
    }
}

pub fn condition_report_json(r: &ConditionReport) -> Value {
    json!({
        "theorem": r.theorem.to_string(),
        "outcome": outcome_str(r.outcome()),
        "clauses": r.clauses.iter().map(|c| json!({
            "clause": c.clause,
            "verdict": c.verdict.to_string(),
            "required": c.required,
            "note": c.note,
        })).collect::<Vec<_>>(),
        "notes": r.notes,
    })
}

pub fn condition_report_text(r: &ConditionReport) -> String {
    let mut out = format!("theorem: {}\n", r.theorem);
    for c in &r.clauses {
        let tag = format!("[{}]", c.verdict);
        let optional = if c.required { "" } else { " (not required)" };
        let _ = write!(out, "{tag:<14} \"{}\"{optional}", c.clause);
        if !c.note.is_empty() {
            let _ = write!(out, "\n               {}", c.note);
        }
        out.push('\n');
    }
    for n in &r.notes {
        let _ = writeln!(out, "note: {n}");
    }
    let _ = writeln!(out, "outcome: {}", outcome_str(r.outcome()));
    out
}

pub fn oracle_json(name: &str, r: &OracleResult, lower_set: Option<&str>) -> Value {
    json!({
        "problem": name,
        "solution": r.solution.as_slice(),
        "method": r.method.as_str(),
        "certified_residual": r.certified_residual,
        "iterations": r.iterations,
        "lower_solution_set": lower_set,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_round_trip_exactly() {
        for v in [0.1, 1.0 / 3.0, 2f64.powi(-60), 123456.789e-300, f64::MAX] {
            assert_eq!(cell(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn comparison_pads_short_columns() {
        let csv = comparison_csv(&[("a".into(), vec![1.0, 2.0]), ("b".into(), vec![3.0])]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "k,a,b");
        assert!(lines[2].ends_with(','));
    }
}
