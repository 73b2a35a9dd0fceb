//! Plain-text reports: `key = value` lines grouped under `[section]`
//! headers, plus a one-line TSV form for collecting results into tables.

use std::fmt::Write;

use crate::model::{EvaluationReport, ScfpConfig};
use crate::pipeline::{GraphSummary, ImputationResult};
use crate::propagation::PropagationTrace;

/// Column order of [`table_row`].
pub const TABLE_HEADER: &str = "label\trmse_masked\tari\tnmi\tca\twall_time_seconds";

/// Formats a metric, writing absent values as `NA`.
pub fn metric(value: Option<f64>) -> String {
    value.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"))
}

pub fn table_row(report: &EvaluationReport) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{:.3}",
        report.label,
        metric(report.rmse_masked),
        metric(report.ari),
        metric(report.nmi),
        metric(report.ca),
        report.wall_time_seconds
    )
}

pub fn config_section(out: &mut String, config: &ScfpConfig) {
    let _ = writeln!(out, "[config]");
    let _ = writeln!(out, "mode = {}", config.mode);
    let _ = writeln!(out, "k = {}", config.k);
    let _ = writeln!(out, "alpha = {}", config.alpha);
    let _ = writeln!(out, "hard_iterations = {}", config.hard_iterations);
    let _ = writeln!(out, "soft_iterations = {}", config.soft_iterations);
    let _ = writeln!(
        out,
        "convergence_tolerance = {}",
        config.convergence_tolerance
    );
    let _ = writeln!(out, "diffusion_steps = {}", config.diffusion_steps);
    let _ = writeln!(out, "seed = {}", config.seed);
}

/// One `[report <label>]` section per entry.
pub fn format_evaluation(reports: &[EvaluationReport]) -> String {
    let mut out = String::new();
    for (i, r) in reports.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "[report {}]", r.label);
        let _ = writeln!(out, "rmse_masked = {}", metric(r.rmse_masked));
        let _ = writeln!(out, "ari = {}", metric(r.ari));
        let _ = writeln!(out, "nmi = {}", metric(r.nmi));
        let _ = writeln!(out, "ca = {}", metric(r.ca));
        let _ = writeln!(out, "wall_time_seconds = {:.3}", r.wall_time_seconds);
        for note in &r.notes {
            let _ = writeln!(out, "note = {note}");
        }
        if let Some(config) = &r.config_echo {
            config_section(&mut out, config);
        }
    }
    out
}

fn trace_section(out: &mut String, name: &str, trace: Option<&PropagationTrace>) {
    let Some(t) = trace else { return };
    let _ = writeln!(out, "[{name}]");
    let _ = writeln!(out, "iterations_run = {}", t.iterations_run);
    let _ = writeln!(out, "converged = {}", t.converged);
    let last = t
        .final_residual()
        .map_or_else(|| "NA".to_string(), |r| format!("{r:.6e}"));
    let _ = writeln!(out, "final_residual = {last}");
    let history: Vec<String> = t
        .residual_history
        .iter()
        .map(|r| format!("{r:.6e}"))
        .collect();
    let _ = writeln!(out, "residuals = {}", history.join(" "));
}

fn graph_section(out: &mut String, name: &str, g: &GraphSummary) {
    let _ = writeln!(out, "[{name}]");
    let _ = writeln!(out, "edges = {}", g.edges);
    let _ = writeln!(out, "rows_changed = {}", g.rows_changed);
    let _ = writeln!(out, "edges_added = {}", g.edges_added);
}

/// Run summary for one imputation: shape, timing, configuration, per-phase
/// residuals and how much the graph moved during refinement.
pub fn format_run(input: &str, result: &ImputationResult, wall_time_seconds: f64) -> String {
    let mut out = String::new();
    let (n, m) = result.denoised.shape();
    let _ = writeln!(out, "[run]");
    let _ = writeln!(out, "input = {input}");
    let _ = writeln!(out, "cells = {n}");
    let _ = writeln!(out, "genes = {m}");
    let _ = writeln!(out, "wall_time_seconds = {wall_time_seconds:.3}");
    config_section(&mut out, &result.config_echo);
    graph_section(&mut out, "initial_graph", &result.initial_graph);
    if let Some(g) = &result.refined_graph {
        graph_section(&mut out, "refined_graph", g);
    }
    trace_section(&mut out, "hard_propagation", result.hard_trace.as_ref());
    trace_section(&mut out, "soft_propagation", result.soft_trace.as_ref());
    out
}
