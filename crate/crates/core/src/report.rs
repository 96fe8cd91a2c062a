//! Result tables in aligned text and machine-readable JSON.

use serde::{Deserialize, Serialize};

use crate::classic::{ClassicFFParams, ViolationCounts};
use crate::graph::StageGraph;
use crate::optimize::Solution;

/// One comparison row between the baseline analysis and the optimizer.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CompareRow {
    pub circuit: String,
    /// Flip-flops in the circuit.
    pub n_s: usize,
    /// Stages in the circuit.
    pub n_stages: usize,
    /// Flip-flops left after trimming.
    pub n_t: usize,
    /// Average polygons per flip-flop after trimming.
    pub g_t: f64,
    pub t_classic: f64,
    pub t_classic_onset: f64,
    pub t_ilp: f64,
    /// Period reduction vs the degraded-delay baseline, percent.
    pub t_s_pct: f64,
    /// Period reduction vs the delay-onset baseline, percent.
    pub t_s_onset_pct: f64,
    pub v_p_s: usize,
    pub v_f_s: usize,
    pub v_p_h: usize,
    pub v_f_h: usize,
    pub runtime_ms: f64,
}

impl CompareRow {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<12} {:>6} {:>6} {:>6} {:>7} {:>10} {:>10} {:>8} {:>8} {:>7} {:>7} {:>7} {:>7} {:>10}\n",
            "circuit", "n_s", "n_t", "g_t", "T_ilp", "T_classic", "T_onset", "t_s(%)", "t'_s(%)",
            "v_p^s", "v_f^s", "v_p^h", "v_f^h", "time(ms)"
        ));
        out.push_str(&format!(
            "{:<12} {:>6} {:>6} {:>6.1} {:>7.2} {:>10.2} {:>10.2} {:>8.2} {:>8.2} {:>7} {:>7} {:>7} {:>7} {:>10.1}\n",
            self.circuit,
            self.n_s,
            self.n_t,
            self.g_t,
            self.t_ilp,
            self.t_classic,
            self.t_classic_onset,
            self.t_s_pct,
            self.t_s_onset_pct,
            self.v_p_s,
            self.v_f_s,
            self.v_p_h,
            self.v_f_h,
            self.runtime_ms
        ));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

/// Builds a comparison row from the analysis pieces.
#[allow(clippy::too_many_arguments)]
pub fn compare_row(
    circuit: String,
    graph: &StageGraph,
    solution: &Solution,
    t_classic: f64,
    t_classic_onset: f64,
    violations: &ViolationCounts,
    runtime_ms: f64,
) -> CompareRow {
    CompareRow {
        circuit,
        n_s: graph.ff_count(),
        n_stages: graph.stages().len(),
        n_t: solution.n_trimmed_ffs,
        g_t: solution.avg_polygons,
        t_classic,
        t_classic_onset,
        t_ilp: solution.period,
        t_s_pct: (t_classic - solution.period) / t_classic * 100.0,
        t_s_onset_pct: (t_classic_onset - solution.period) / t_classic_onset * 100.0,
        v_p_s: violations.setup_paths,
        v_f_s: violations.setup_ffs,
        v_p_h: violations.hold_paths,
        v_f_h: violations.hold_ffs,
        runtime_ms,
    }
}

/// Machine-readable optimizer result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionReport {
    pub period: f64,
    pub status: String,
    pub gap: f64,
    pub nodes: u64,
    pub n_t: usize,
    pub g_t: f64,
    pub removed_stages: usize,
    pub removed_ffs: usize,
    pub working_points: Vec<WorkingPointReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkingPointReport {
    pub ff: String,
    pub polygon: usize,
    pub setup: f64,
    pub hold: f64,
    pub d_cq: f64,
}

pub fn solution_report(graph: &StageGraph, solution: &Solution) -> SolutionReport {
    SolutionReport {
        period: solution.period,
        status: match solution.status {
            crate::optimize::SolveStatus::Optimal => "optimal".into(),
            crate::optimize::SolveStatus::Feasible => "feasible".into(),
        },
        gap: solution.gap,
        nodes: solution.nodes,
        n_t: solution.n_trimmed_ffs,
        g_t: solution.avg_polygons,
        removed_stages: solution.removed_stages,
        removed_ffs: solution.removed_ffs,
        working_points: solution
            .points
            .iter()
            .enumerate()
            .map(|(ff, p)| WorkingPointReport {
                ff: graph.name(ff).to_string(),
                polygon: p.polygon,
                setup: p.setup,
                hold: p.hold,
                d_cq: p.delay,
            })
            .collect(),
    }
}

impl SolutionReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "minimum period: {:.4} ps ({}, gap {:.3}, {} nodes)\n",
            self.period, self.status, self.gap, self.nodes
        ));
        out.push_str(&format!(
            "trimming: {} flip-flops kept, {:.1} polygons/ff, {} stages and {} flip-flops removed\n",
            self.n_t, self.g_t, self.removed_stages, self.removed_ffs
        ));
        out.push_str(&format!(
            "{:<16} {:>8} {:>10} {:>10} {:>10}\n",
            "ff", "polygon", "setup", "hold", "d_cq"
        ));
        for wp in &self.working_points {
            out.push_str(&format!(
                "{:<16} {:>8} {:>10.4} {:>10.4} {:>10.4}\n",
                wp.ff, wp.polygon, wp.setup, wp.hold, wp.d_cq
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

/// Classic analysis result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassicReport {
    pub period: f64,
    pub t_su: f64,
    pub t_h: f64,
    pub d_cq: f64,
    pub degradation_factor: f64,
    pub empty_graph: bool,
}

pub fn classic_report(graph: &StageGraph, params: &ClassicFFParams, period: f64) -> ClassicReport {
    ClassicReport {
        period,
        t_su: params.t_su,
        t_h: params.t_h,
        d_cq: params.d_cq,
        degradation_factor: params.degradation_factor,
        empty_graph: graph.stages().is_empty(),
    }
}

impl ClassicReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "minimum period: {:.4} ps (t_su {:.4}, t_h {:.4}, d_cq {:.4}, factor {:.2})\n",
            self.period, self.t_su, self.t_h, self.d_cq, self.degradation_factor
        );
        if self.empty_graph {
            out.push_str("warning: circuit has no stages; the period is vacuous\n");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}
