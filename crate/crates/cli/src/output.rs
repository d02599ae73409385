//! Rendering: fixed-width report blocks and CSV emission.
//!
//! All floats in CSV cells use 17 significant digits; report-block vectors
//! use fixed-precision decimal. Everything is rendered into a single buffer
//! so identical runs produce byte-identical output.

use optctl::closedloop::InvarianceReport;
use optctl::cqcheck::{implication_summary, CqReport};
use optctl::regprobe::RegularityEstimate;
use optctl::KktSolution;

/// 17-significant-digit float for CSV cells.
pub fn csv_f(v: f64) -> String {
    format!("{v:.16e}")
}

/// Fixed-precision decimal for report vectors and margins.
pub fn fix_f(v: f64) -> String {
    format!("{v:.12}")
}

pub fn fmt_vec(v: &[f64]) -> String {
    let cells: Vec<String> = v.iter().map(|&x| fix_f(x)).collect();
    format!("({})", cells.join(", "))
}

pub fn render_analyze_report(
    name: &str,
    dims: (usize, usize, usize),
    x: &[f64],
    sol: &KktSolution,
    report: &CqReport<f64>,
    strongly_convex: bool,
) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "parametric program: {} (n={}, m={}, p={})\n",
        name, dims.0, dims.1, dims.2
    ));
    out.push_str(&format!("state: {}\n", fmt_vec(x)));
    out.push_str(&format!(
        "solver: status=optimal objective={} iterations={}\n",
        fix_f(sol.objective),
        sol.iterations
    ));
    out.push_str(&format!("u*: {}\n", fmt_vec(&sol.u_star)));
    out.push_str(&format!("lambda*: {}\n", fmt_vec(&sol.lambda_star)));
    let active: Vec<String> = sol.active_set.iter().map(|i| (i + 1).to_string()).collect();
    out.push_str(&format!("active set: {{{}}}\n", active.join(", ")));
    out.push_str(&format!(
        "residuals: stationarity={:.3e} complementarity={:.3e} feasibility={:.3e}\n",
        sol.stationarity_residual, sol.complementarity_residual, sol.feasibility_violation
    ));
    out.push('\n');
    for e in &report.entries {
        let label = format!("[{}]", e.condition.as_str());
        out.push_str(&format!(
            "{label:<14} {:<13} {}\n",
            e.verdict.as_str(),
            e.detail
        ));
        if let Some(m) = e.margin {
            if m.is_finite() {
                out.push_str(&format!("    margin: {}\n", fix_f(m)));
            }
        }
        if let Some(w) = &e.witness {
            out.push_str(&format!("    witness: {}\n", fmt_vec(w)));
        }
        if let Some(s) = &e.subset {
            let rows: Vec<String> = s.iter().map(|i| (i + 1).to_string()).collect();
            out.push_str(&format!("    subset: {{{}}}\n", rows.join(", ")));
        }
        if !e.sweep.is_empty() {
            let cells: Vec<String> = e
                .sweep
                .iter()
                .map(|&(r, s)| format!("{r:.1e}->{s:.3e}"))
                .collect();
            out.push_str(&format!("    sweep: {}\n", cells.join(", ")));
        }
    }
    out.push('\n');
    out.push_str("implications:\n");
    let lines = implication_summary(report, strongly_convex, sol.u_star.len());
    if lines.is_empty() {
        out.push_str("  (none established at this state)\n");
    }
    for l in lines {
        out.push_str(&format!("  {l}\n"));
    }
    out
}

pub fn render_analyze_csv(report: &CqReport<f64>) -> String {
    let mut out = String::from("condition,verdict,margin\n");
    for e in &report.entries {
        let margin = e.margin.map_or(String::new(), |m| {
            if m.is_finite() {
                csv_f(m)
            } else {
                String::new()
            }
        });
        out.push_str(&format!(
            "{},{},{}\n",
            e.condition.as_str(),
            e.verdict.as_str(),
            margin
        ));
    }
    out
}

/// CSV with a '#'-comment preamble summarizing the verdict and fitted
/// parameters, then one row per sample.
pub fn render_estimate(est: &RegularityEstimate<f64>) -> String {
    let mut out = String::new();
    let comp = est
        .component
        .map_or("norm".to_string(), |c| (c + 1).to_string());
    out.push_str(&format!(
        "#probe,{},map={},component={},seed={},verdict={}\n",
        est.kind.as_str(),
        est.map_name,
        comp,
        est.seed,
        est.verdict.as_str()
    ));
    out.push_str(&format!("#hypothesis,{}\n", est.hypothesis));
    if let Some(l) = est.lipschitz_constant {
        out.push_str(&format!("#lipschitz_constant,{}\n", csv_f(l)));
    }
    if let Some(h) = &est.holder {
        out.push_str(&format!(
            "#holder,alpha={},constant={},residual={}\n",
            csv_f(h.alpha),
            csv_f(h.constant),
            csv_f(h.residual)
        ));
    }
    if let Some(d) = &est.derivative {
        let cells: Vec<String> = d.iter().map(|&v| csv_f(v)).collect();
        out.push_str(&format!("#derivative,{}\n", cells.join(",")));
    }
    for j in &est.jumps {
        let pos: Vec<String> = j.position.iter().map(|&v| csv_f(v)).collect();
        out.push_str(&format!(
            "#jump,parameter={},magnitude={},position={}\n",
            csv_f(j.parameter),
            csv_f(j.magnitude),
            pos.join(";")
        ));
    }
    for &(r, s) in &est.sups {
        out.push_str(&format!("#sup,radius={},value={}\n", csv_f(r), csv_f(s)));
    }
    if est.skipped_infeasible > 0 {
        out.push_str(&format!("#skipped_infeasible,{}\n", est.skipped_infeasible));
    }
    out.push_str(&est.csv());
    out
}

pub fn render_monitor(rep: &InvarianceReport<f64>) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "#monitor,{},{},worst_margin={},tol={},samples={},excluded={},skipped_infeasible={}\n",
        rep.kind.as_str(),
        if rep.holds { "holds" } else { "fails" },
        csv_f(rep.worst_margin),
        csv_f(rep.tol),
        rep.samples.len(),
        rep.excluded,
        rep.skipped_infeasible
    ));
    if let Some((min_h, at)) = rep.excursion {
        out.push_str(&format!(
            "#excursion,min_h={},at_t={}\n",
            csv_f(min_h),
            csv_f(at)
        ));
    }
    for n in &rep.notes {
        out.push_str(&format!("#monitor_note,{n}\n"));
    }
    out
}
