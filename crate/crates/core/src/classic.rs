//! The traditional constant-parameter timing flow used as the baseline.
//!
//! A flip-flop is reduced to a setup time, a hold time, and one clock-to-q
//! constant: the slack at which the delay has degraded to a chosen fraction
//! of the stable delay, and that degraded delay itself. The minimum period
//! is then the worst stage sum, and violations are counted per stage against
//! an externally given target period.

use std::collections::HashSet;

use crate::error::CharError;
use crate::graph::StageGraph;
use crate::oracle::{DelayOracle, OracleResponse, SlackPoint};

/// Constant flip-flop timing parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicFFParams {
    /// Setup time, ps.
    pub t_su: f64,
    /// Hold time, ps.
    pub t_h: f64,
    /// Clock-to-q delay charged in analysis, ps.
    pub d_cq: f64,
    /// Delay degradation the characterization allowed (1.10 = 110%).
    pub degradation_factor: f64,
}

/// Per-path and per-flip-flop violation counts at a target period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ViolationCounts {
    pub setup_paths: usize,
    pub setup_ffs: usize,
    pub hold_paths: usize,
    pub hold_ffs: usize,
}

/// Characterizes the constant parameters against an oracle.
///
/// The setup time is the smallest setup slack (hold pinned at the anchor)
/// where the delay still stays within `factor` times the stable delay, found
/// by binary search; the hold time symmetrically. The degraded delay itself
/// becomes the clock-to-q constant.
pub fn characterize_classic(
    oracle: &dyn DelayOracle,
    degradation_factor: f64,
    anchor_slack: f64,
    search_resolution: f64,
) -> Result<ClassicFFParams, CharError> {
    if degradation_factor < 1.0 {
        return Err(CharError::InvalidConfig(
            "degradation factor must be >= 1".into(),
        ));
    }
    let anchor = SlackPoint::new(anchor_slack, anchor_slack);
    let stable = match oracle.query(anchor)? {
        OracleResponse::Valid { clock_to_q } => clock_to_q,
        OracleResponse::Metastable => {
            return Err(CharError::Failure("anchor point is metastable".into()))
        }
    };
    let target = degradation_factor * stable;
    if target > oracle.metastable_threshold() {
        return Err(CharError::Failure(format!(
            "degraded delay {target} exceeds the metastable threshold {}",
            oracle.metastable_threshold()
        )));
    }
    let within = |point: SlackPoint| -> Result<bool, CharError> {
        Ok(match oracle.query(point)? {
            OracleResponse::Valid { clock_to_q } => clock_to_q <= target,
            OracleResponse::Metastable => false,
        })
    };
    let search = |make: &dyn Fn(f64) -> SlackPoint| -> Result<f64, CharError> {
        if within(make(0.0))? {
            return Ok(0.0);
        }
        let mut lo = 0.0;
        let mut hi = anchor_slack;
        while hi - lo > search_resolution {
            let mid = 0.5 * (lo + hi);
            if within(make(mid))? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    };
    let t_su = search(&|s| SlackPoint::new(s, anchor_slack))?;
    let t_h = search(&|h| SlackPoint::new(anchor_slack, h))?;
    Ok(ClassicFFParams {
        t_su,
        t_h,
        d_cq: target,
        degradation_factor,
    })
}

/// Minimum clock period: the worst `d_cq + d_max + t_su` over all stages.
/// An empty stage list yields 0; callers should treat that as a warning.
pub fn min_period_classic(graph: &StageGraph, params: &ClassicFFParams) -> f64 {
    graph
        .stages()
        .iter()
        .map(|s| params.d_cq + s.d_max + params.t_su)
        .fold(0.0, f64::max)
}

const VIOLATION_TOL: f64 = 1e-9;

/// Counts stages (and distinct destination flip-flops) violating the setup
/// or hold inequality at the target period.
pub fn count_violations(
    graph: &StageGraph,
    params: &ClassicFFParams,
    target_period: f64,
) -> ViolationCounts {
    let mut counts = ViolationCounts::default();
    let mut setup_ffs = HashSet::new();
    let mut hold_ffs = HashSet::new();
    for stage in graph.stages() {
        if params.d_cq + stage.d_max + params.t_su > target_period + VIOLATION_TOL {
            counts.setup_paths += 1;
            setup_ffs.insert(stage.dst);
        }
        if params.d_cq + stage.d_min < params.t_h - VIOLATION_TOL {
            counts.hold_paths += 1;
            hold_ffs.insert(stage.dst);
        }
    }
    counts.setup_ffs = setup_ffs.len();
    counts.hold_ffs = hold_ffs.len();
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_stage_graph;
    use crate::oracle::{AnalyticOracle, AnalyticParams};

    fn ref_oracle() -> AnalyticOracle {
        AnalyticOracle::new(AnalyticParams::default()).unwrap()
    }

    fn params(t_su: f64, t_h: f64, d_cq: f64) -> ClassicFFParams {
        ClassicFFParams { t_su, t_h, d_cq, degradation_factor: 1.0 }
    }

    #[test]
    fn classic_characterization_at_110_percent() {
        let o = ref_oracle();
        let p = characterize_classic(&o, 1.10, 150.0, 0.25).unwrap();
        // Closed form: amp * e^{-t/tau} = 0.1 * d0 gives t = 8 ln 100.
        let expected = 8.0 * 100.0f64.ln();
        assert!((p.t_su - expected).abs() <= 0.25, "t_su {} vs {}", p.t_su, expected);
        assert!((p.t_h - expected).abs() <= 0.25, "t_h {} vs {}", p.t_h, expected);
        assert!((p.d_cq - 110.0).abs() < 1e-4, "d_cq {}", p.d_cq);
    }

    #[test]
    fn classic_characterization_at_onset() {
        let o = ref_oracle();
        let p = characterize_classic(&o, 1.01, 150.0, 0.25).unwrap();
        let expected = 8.0 * 1000.0f64.ln();
        assert!((p.t_su - expected).abs() <= 0.25, "t_su {} vs {}", p.t_su, expected);
        assert!((p.d_cq - 101.0).abs() < 1e-4);
    }

    #[test]
    fn larger_factor_gives_smaller_setup_time() {
        let o = ref_oracle();
        let tight = characterize_classic(&o, 1.01, 150.0, 0.25).unwrap();
        let loose = characterize_classic(&o, 1.5, 150.0, 0.25).unwrap();
        assert!(loose.t_su <= tight.t_su);
    }

    #[test]
    fn factor_beyond_threshold_fails() {
        let o = ref_oracle();
        let err = characterize_classic(&o, 2.5, 150.0, 0.25);
        assert!(err.is_err());
    }

    #[test]
    fn min_period_is_worst_stage_sum() {
        let g = parse_stage_graph(
            "ff A\nff B\nff C\nstage A B dmax=500 dmin=50\nstage B C dmax=300 dmin=50\n",
        )
        .unwrap();
        let t = min_period_classic(&g, &params(30.0, 30.0, 100.0));
        assert_eq!(t, 630.0);
    }

    #[test]
    fn self_loop_period() {
        let g = parse_stage_graph("ff A\nstage A A dmax=0 dmin=0\n").unwrap();
        let t = min_period_classic(&g, &params(30.0, 30.0, 100.0));
        assert_eq!(t, 130.0);
    }

    #[test]
    fn empty_graph_gives_zero() {
        let g = parse_stage_graph("ff A\n").unwrap();
        assert_eq!(min_period_classic(&g, &params(30.0, 30.0, 100.0)), 0.0);
    }

    #[test]
    fn no_violations_at_own_min_period() {
        let g = parse_stage_graph(
            "ff A\nff B\nff C\nstage A B dmax=500 dmin=50\nstage B C dmax=300 dmin=50\nstage C A dmax=123.25 dmin=7\n",
        )
        .unwrap();
        let p = params(36.5, 33.0, 110.0);
        let t = min_period_classic(&g, &p);
        assert_eq!(count_violations(&g, &p, t), ViolationCounts::default());
    }

    #[test]
    fn setup_violation_counted_once_per_path_and_ff() {
        let g = parse_stage_graph("ff A\nff B\nstage A B dmax=500 dmin=50\n").unwrap();
        let c = count_violations(&g, &params(30.0, 30.0, 100.0), 610.0);
        assert_eq!(c.setup_paths, 1);
        assert_eq!(c.setup_ffs, 1);
        assert_eq!(c.hold_paths, 0);
    }

    #[test]
    fn hold_violation_counted() {
        let g = parse_stage_graph("ff A\nff B\nstage A B dmax=500 dmin=10\n").unwrap();
        let c = count_violations(&g, &params(30.0, 120.0, 100.0), 1000.0);
        assert_eq!(c.hold_paths, 1);
        assert_eq!(c.hold_ffs, 1);
    }

    #[test]
    fn two_paths_one_destination_ff() {
        let g = parse_stage_graph(
            "ff A\nff B\nff C\nstage A C dmax=500 dmin=50\nstage B C dmax=600 dmin=50\n",
        )
        .unwrap();
        let c = count_violations(&g, &params(30.0, 30.0, 100.0), 600.0);
        assert_eq!(c.setup_paths, 2);
        assert_eq!(c.setup_ffs, 1);
    }

    #[test]
    fn period_monotone_in_inputs() {
        let g = parse_stage_graph("ff A\nff B\nstage A B dmax=500 dmin=50\n").unwrap();
        let base = min_period_classic(&g, &params(30.0, 30.0, 100.0));
        assert!(min_period_classic(&g, &params(31.0, 30.0, 100.0)) >= base);
        assert!(min_period_classic(&g, &params(30.0, 30.0, 101.0)) >= base);
    }
}
