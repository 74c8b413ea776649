//! CSV renderers for solver results, with deterministic row order and
//! shortest-round-trip float formatting, so repeated runs with the same
//! configuration produce byte-identical files.

use std::io::Write;

use crate::calculus::State;
use crate::error::Result;
use crate::model::Network;
use crate::oracle::OracleOutcome;
use crate::solvers::{end_to_end_bounds, ComparisonReport, SolverOutcome};

/// Per-run results: one row per node delay, per (edge, flow) burstiness and
/// per flow end-to-end bound, then status/iterations/node_updates rows.
pub fn write_results_csv<W: Write>(net: &Network, outcome: &SolverOutcome, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "id", "flow", "value"])?;
    for (i, v) in outcome.state.d.iter().enumerate() {
        w.write_record(["d", net.node_id(i), "", &format!("{v}")])?;
    }
    for (pi, v) in outcome.state.z.iter().enumerate() {
        let p = net.pairs()[pi];
        w.write_record([
            "z",
            &net.edge_name(p.edge),
            net.flow_id(p.flow),
            &format!("{v}"),
        ])?;
    }
    for (flow, bound) in end_to_end_bounds(net, &outcome.state) {
        w.write_record(["flow", &flow, "", &format!("{bound}")])?;
    }
    w.write_record(["status", "", "", outcome.status.name()])?;
    w.write_record(["iterations", "", "", &outcome.iterations.to_string()])?;
    w.write_record(["node_updates", "", "", &outcome.node_updates.to_string()])?;
    w.flush()?;
    Ok(())
}

/// One comparison-table row; work counts stand in for wall-clock time,
/// which depends on the machine and is not reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub algorithm: String,
    pub size: usize,
    pub status: String,
    pub iterations: usize,
    pub node_updates: u64,
    /// Largest per-flow end-to-end bound; present only for converged runs.
    pub max_end_to_end_s: Option<f64>,
}

/// Flatten a comparison report into table rows tagged with a network size.
pub fn comparison_rows(report: &ComparisonReport, size: usize) -> Vec<CompareRow> {
    report
        .runs
        .iter()
        .map(|run| CompareRow {
            algorithm: run.label.clone(),
            size,
            status: run.status.name().to_string(),
            iterations: run.iterations,
            node_updates: run.node_updates,
            max_end_to_end_s: run.status.is_converged().then(|| {
                run.end_to_end
                    .iter()
                    .map(|(_, v)| *v)
                    .fold(f64::NEG_INFINITY, f64::max)
            }),
        })
        .collect()
}

pub fn write_comparison_csv<W: Write>(rows: &[CompareRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "algorithm",
        "size",
        "status",
        "iterations",
        "node_updates",
        "max_end_to_end_s",
    ])?;
    for r in rows {
        w.write_record([
            r.algorithm.clone(),
            r.size.to_string(),
            r.status.clone(),
            r.iterations.to_string(),
            r.node_updates.to_string(),
            r.max_end_to_end_s.map(|v| format!("{v}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One bound-versus-iteration sample for external plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub algorithm: String,
    pub size: usize,
    pub iteration: usize,
    pub flow: String,
    pub end_to_end_s: f64,
}

/// Expand a recorded trace into per-iteration end-to-end bounds per flow.
pub fn plot_rows(net: &Network, algorithm: &str, size: usize, trace: &[State]) -> Vec<PlotRow> {
    let mut rows = Vec::new();
    for (k, state) in trace.iter().enumerate() {
        for (flow, bound) in end_to_end_bounds(net, state) {
            rows.push(PlotRow {
                algorithm: algorithm.to_string(),
                size,
                iteration: k,
                flow,
                end_to_end_s: bound,
            });
        }
    }
    rows
}

pub fn write_plot_csv<W: Write>(rows: &[PlotRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "size", "iteration", "flow", "end_to_end_s"])?;
    for r in rows {
        w.write_record([
            r.algorithm.clone(),
            r.size.to_string(),
            r.iteration.to_string(),
            r.flow.clone(),
            format!("{}", r.end_to_end_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Oracle output: the exact fixpoint (as d/z rows), the spectral radius and
/// the fixpoint residual — or just the radius when no fixpoint exists.
pub fn write_oracle_csv<W: Write>(net: &Network, outcome: &OracleOutcome, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "id", "flow", "value"])?;
    match outcome {
        OracleOutcome::Fixpoint(sol) => {
            for (i, v) in sol.state.d.iter().enumerate() {
                w.write_record(["d", net.node_id(i), "", &format!("{v}")])?;
            }
            for (pi, v) in sol.state.z.iter().enumerate() {
                let p = net.pairs()[pi];
                w.write_record([
                    "z",
                    &net.edge_name(p.edge),
                    net.flow_id(p.flow),
                    &format!("{v}"),
                ])?;
            }
            w.write_record(["rho", "", "", &format!("{}", sol.spectral_radius)])?;
            w.write_record(["residual", "", "", &format!("{}", sol.residual)])?;
        }
        OracleOutcome::NoFixpoint { spectral_radius } => {
            w.write_record(["rho", "", "", &format!("{spectral_radius}")])?;
            w.write_record(["fixpoint", "", "", "none"])?;
        }
    }
    w.flush()?;
    Ok(())
}
