//! Deterministic CSV/JSON emission. Floats are written in Rust's default
//! shortest-roundtrip form, so identical runs produce identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use flownet::dynamics::{SimResult, TransferVerdict};
use flownet::resilience::ResilienceReport;

use crate::input::{CliError, CliResult};

pub fn write_file(path: &Path, content: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Malformed(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, content)
        .map_err(|e| CliError::Malformed(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Malformed(format!("serialization: {e}")))?;
    text.push('\n');
    write_file(path, &text)
}

pub fn verdict_name(sim: &SimResult) -> &'static str {
    if sim.limit_flow.is_none() {
        "NotConverged"
    } else if matches!(sim.transfer_verdict, TransferVerdict::FullyTransferring) {
        "FullyTransferring"
    } else {
        "NotFullyTransferring"
    }
}

pub fn exit_code_for(sim: &SimResult) -> i32 {
    match verdict_name(sim) {
        "FullyTransferring" => 0,
        "NotFullyTransferring" => 3,
        _ => 4,
    }
}

pub fn trace_csv(sim: &SimResult, link_count: usize) -> String {
    let mut out = String::from("t");
    for e in 0..link_count {
        write!(out, ",link_{e}_rho").unwrap();
    }
    for e in 0..link_count {
        write!(out, ",link_{e}_f").unwrap();
    }
    out.push_str(",lambda_n\n");
    for row in &sim.trace {
        write!(out, "{}", row.t).unwrap();
        for x in &row.rho {
            write!(out, ",{x}").unwrap();
        }
        for x in &row.f {
            write!(out, ",{x}").unwrap();
        }
        writeln!(out, ",{}", row.lambda_n).unwrap();
    }
    out
}

pub fn summary_json(sim: &SimResult, inflow: f64, magnitude: f64) -> Value {
    json!({
        "verdict": verdict_name(sim),
        "lim_lambda_n": sim.limit_lambda_n,
        "inflow": inflow,
        "perturbation_magnitude": magnitude,
        "converged_at": sim.converged_at,
        "limit_flow": sim.limit_flow,
        "mass_integral": sim.mass_integral,
        "final_rho": sim.final_rho,
        "cascade_events": sim
            .cascade_events
            .iter()
            .map(|ev| json!({"t": ev.t, "link": ev.link_id}))
            .collect::<Vec<_>>(),
    })
}

pub fn probes_csv(report: &ResilienceReport) -> String {
    let mut out = String::from("delta,verdict,lim_lambda_n\n");
    for p in &report.probes {
        let verdict = match p.fully_transferring {
            Some(true) => "FullyTransferring",
            Some(false) => "NotFullyTransferring",
            None => "Inconclusive",
        };
        writeln!(out, "{},{verdict},{}", p.delta, p.lim_lambda_n).unwrap();
    }
    out
}

pub fn probe_report_json(report: &ResilienceReport) -> Value {
    json!({
        "analytic_r": report.analytic_r,
        "argmin_node": report.argmin_node,
        "min_cut_c": report.min_cut_c,
        "weak_upper_bound": report.weak_upper_bound,
        "strong_gap": report.strong_gap,
        "empirical_threshold": report.empirical_threshold,
        "bracket": report.bracket.map(|(lo, hi)| vec![lo, hi]),
        "probes": report
            .probes
            .iter()
            .map(|p| {
                json!({
                    "delta": p.delta,
                    "fully_transferring": p.fully_transferring,
                    "lim_lambda_n": p.lim_lambda_n,
                })
            })
            .collect::<Vec<_>>(),
    })
}

pub fn tradeoff_csv(table: &[flownet::opt::SweepPoint]) -> String {
    let m = table.first().map_or(0, |p| p.f_opt.len());
    let mut out = String::from("b,D_star");
    for e in 1..=m {
        write!(out, ",f_{e}").unwrap();
    }
    out.push('\n');
    for p in table {
        write!(out, "{},{}", p.b, p.d_star).unwrap();
        for x in &p.f_opt {
            write!(out, ",{x}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn eta_csv(rows: &[(f64, f64, bool)]) -> String {
    let mut out = String::from("eta,lim_lambda_n,verdict\n");
    for &(eta, lim, pass) in rows {
        writeln!(out, "{eta},{lim},{}", if pass { "pass" } else { "fail" }).unwrap();
    }
    out
}
