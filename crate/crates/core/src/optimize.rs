//! Minimum clock period with the piecewise delay model.
//!
//! Each flip-flop selects exactly one polygon (a binary per polygon) and a
//! working point inside it; per stage, the destination's setup slack and
//! hold slack are bounded by the period and the source's modeled delay.
//! Before solving, polygons outside each flip-flop's reachable slack window
//! are dropped, stages whose endpoints can only work on the stable plateau
//! are folded into a constant period floor, and flip-flops left without
//! stages are removed and parked on deterministic working points.

use crate::error::OptimizeError;
use crate::graph::{Stage, StageGraph};
use crate::milp::{
    bb_solve, BbOptions, MilpModel, MilpSolution, MilpStatus, Sense,
};
use crate::model::{PiecewiseDelayModel, Polygon};
use crate::oracle::{DelayOracle, OracleResponse, SlackPoint};

/// Reachable slack window of one flip-flop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlackWindow {
    pub s_lo: f64,
    pub s_hi: f64,
    pub h_lo: f64,
    pub h_hi: f64,
}

/// Absolute period bounds plus the per-flip-flop slack windows.
#[derive(Debug, Clone, PartialEq)]
pub struct TrimBounds {
    pub t_low: f64,
    pub t_high: f64,
    pub windows: Vec<SlackWindow>,
}

/// Computes the period bounds and per-flip-flop slack windows.
///
/// The period lower (upper) bound takes every delay and setup slack at its
/// smallest (largest) characterized value. A destination's setup window
/// follows from those period bounds minus the delay range and its worst
/// fan-in delay; its hold window from the delay range plus the fan-in
/// minimum delays. Flip-flops without fan-in keep the full model extremes.
pub fn compute_trim_bounds(graph: &StageGraph, model: &PiecewiseDelayModel) -> TrimBounds {
    let t_low = graph
        .stages()
        .iter()
        .map(|s| model.f_lower + s.d_max + model.s_min)
        .fold(0.0, f64::max);
    let t_high = graph
        .stages()
        .iter()
        .map(|s| model.f_upper + s.d_max + model.s_max)
        .fold(0.0, f64::max);
    let mut windows = Vec::with_capacity(graph.ff_count());
    for ff in 0..graph.ff_count() {
        let fan_in: Vec<&Stage> = graph.stages().iter().filter(|s| s.dst == ff).collect();
        if fan_in.is_empty() {
            windows.push(SlackWindow {
                s_lo: model.s_min,
                s_hi: model.s_max,
                h_lo: model.h_min,
                h_hi: model.h_max,
            });
            continue;
        }
        let max_dmax = fan_in.iter().map(|s| s.d_max).fold(f64::NEG_INFINITY, f64::max);
        let min_dmax = fan_in.iter().map(|s| s.d_max).fold(f64::INFINITY, f64::min);
        let max_dmin = fan_in.iter().map(|s| s.d_min).fold(f64::NEG_INFINITY, f64::max);
        let min_dmin = fan_in.iter().map(|s| s.d_min).fold(f64::INFINITY, f64::min);
        windows.push(SlackWindow {
            s_lo: (t_low - model.f_upper - max_dmax).max(0.0),
            s_hi: t_high - model.f_lower - min_dmax,
            h_lo: (model.f_lower + min_dmin).max(0.0),
            h_hi: model.f_upper + max_dmin,
        });
    }
    TrimBounds { t_low, t_high, windows }
}

/// A working point: the selected polygon and the slack pair on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkingPoint {
    pub polygon: usize,
    pub setup: f64,
    pub hold: f64,
    /// Model delay at the point, ps.
    pub delay: f64,
}

/// The reduced optimization problem after trimming.
#[derive(Debug, Clone)]
pub struct TrimmedProblem {
    /// Kept flip-flop names, in original order.
    pub ff_names: Vec<String>,
    /// Kept index -> original index.
    pub ff_orig: Vec<usize>,
    /// Stages between kept flip-flops, reindexed.
    pub stages: Vec<Stage>,
    /// Active polygons per kept flip-flop (clones keep their model ids).
    pub active: Vec<Vec<Polygon>>,
    /// Removed flip-flops (original index) with their parked points.
    pub parked: Vec<(usize, WorkingPoint)>,
    pub removed_stages: usize,
    pub removed_ffs: usize,
    /// Constant lower bound on the period folded from removed stages.
    pub t_floor: f64,
}

impl TrimmedProblem {
    /// Average active polygon count over kept flip-flops.
    pub fn avg_polygons(&self) -> f64 {
        if self.active.is_empty() {
            0.0
        } else {
            self.active.iter().map(|a| a.len()).sum::<usize>() as f64 / self.active.len() as f64
        }
    }
}

fn is_stable_polygon(p: &Polygon, f_lower: f64, epsilon: f64) -> bool {
    let (lo, hi) = p.plane_range();
    lo >= f_lower - epsilon && hi <= f_lower + epsilon
}

/// Drops polygons outside each flip-flop's window, removes stages whose
/// endpoints can only work on the stable plateau (folding their constant
/// requirement into `t_floor`), and removes flip-flops left without stages.
///
/// Windows whose lower edge lies beyond the model are clamped to the model
/// extreme: a flip-flop guaranteed slack beyond the characterized domain
/// simply works on the polygons touching that edge.
pub fn trim(
    graph: &StageGraph,
    model: &PiecewiseDelayModel,
    bounds: &TrimBounds,
    stable_epsilon: f64,
) -> Result<TrimmedProblem, OptimizeError> {
    let n = graph.ff_count();
    let pad = 1e-9;
    let mut active: Vec<Vec<Polygon>> = Vec::with_capacity(n);
    for ff in 0..n {
        let w = bounds.windows[ff];
        let s_lo = w.s_lo.min(model.s_max);
        let h_lo = w.h_lo.min(model.h_max);
        let keep: Vec<Polygon> = model
            .polygons
            .iter()
            .filter(|p| {
                p.s_l <= w.s_hi + pad && p.s_u >= s_lo - pad && p.h_l <= w.h_hi + pad && p.h_u >= h_lo - pad
            })
            .cloned()
            .collect();
        if keep.is_empty() {
            return Err(OptimizeError::NoPolygons { ff: graph.name(ff).to_string() });
        }
        active.push(keep);
    }

    let stable_only: Vec<bool> = active
        .iter()
        .map(|polys| polys.iter().all(|p| is_stable_polygon(p, model.f_lower, stable_epsilon)))
        .collect();

    // A flip-flop is removable when every incident stage connects two
    // stable-only flip-flops; shrink the candidate set to a fixpoint so
    // that every removed stage has both endpoints removed.
    let mut removable: Vec<bool> = (0..n)
        .map(|ff| {
            graph
                .stages()
                .iter()
                .filter(|s| s.src == ff || s.dst == ff)
                .all(|s| stable_only[s.src] && stable_only[s.dst])
        })
        .collect();
    loop {
        let mut changed = false;
        for stage in graph.stages() {
            if removable[stage.src] != removable[stage.dst] {
                if stable_only[stage.src] && stable_only[stage.dst] {
                    // Candidate stage with one kept endpoint: keep both.
                    removable[stage.src] = false;
                    removable[stage.dst] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    // Parked working points for removed flip-flops. The hold cap is
    // conservative (plateau delay minus epsilon) so that any predecessor's
    // eventual plane delay satisfies it.
    let mut parked_points: Vec<Option<WorkingPoint>> = vec![None; n];
    for ff in 0..n {
        if !removable[ff] {
            continue;
        }
        let cap_h = graph
            .stages()
            .iter()
            .filter(|s| s.dst == ff)
            .map(|s| model.f_lower - stable_epsilon + s.d_min)
            .fold(f64::INFINITY, f64::min);
        let candidates: Vec<&Polygon> = active[ff]
            .iter()
            .filter(|p| p.h_l <= cap_h)
            .collect();
        let pool: Vec<&Polygon> = if candidates.is_empty() {
            active[ff].iter().collect()
        } else {
            candidates
        };
        let park = pool
            .iter()
            .min_by(|a, b| a.s_l.total_cmp(&b.s_l).then(a.id.cmp(&b.id)))
            .expect("active set is non-empty");
        let point = SlackPoint::new(park.s_l, park.h_u.min(cap_h).max(park.h_l));
        parked_points[ff] = Some(WorkingPoint {
            polygon: park.id,
            setup: point.setup,
            hold: point.hold,
            delay: park.plane.value(point),
        });
    }

    // Fold removed stages into the period floor using the exact parked
    // arithmetic, so the final solution re-checks cleanly.
    let mut t_floor = 0.0f64;
    let mut removed_stages = 0usize;
    let mut stages = Vec::new();
    for stage in graph.stages() {
        if removable[stage.src] && removable[stage.dst] {
            removed_stages += 1;
            let src = parked_points[stage.src].as_ref().unwrap();
            let dst = parked_points[stage.dst].as_ref().unwrap();
            t_floor = t_floor.max(src.delay + stage.d_max + dst.setup);
        } else {
            stages.push(*stage);
        }
    }

    let kept: Vec<usize> = (0..n).filter(|&ff| !removable[ff]).collect();
    let mut new_index = vec![usize::MAX; n];
    for (i, &ff) in kept.iter().enumerate() {
        new_index[ff] = i;
    }
    let stages: Vec<Stage> = stages
        .iter()
        .map(|s| Stage {
            src: new_index[s.src],
            dst: new_index[s.dst],
            d_max: s.d_max,
            d_min: s.d_min,
        })
        .collect();
    let parked: Vec<(usize, WorkingPoint)> = (0..n)
        .filter_map(|ff| parked_points[ff].map(|p| (ff, p)))
        .collect();
    Ok(TrimmedProblem {
        ff_names: kept.iter().map(|&ff| graph.name(ff).to_string()).collect(),
        ff_orig: kept.clone(),
        stages,
        active: kept.iter().map(|&ff| active[ff].clone()).collect(),
        parked,
        removed_stages,
        removed_ffs: n - kept.len(),
        t_floor,
    })
}

/// Variable indices of the MILP: `T` plus per (flip-flop, polygon) triples.
#[derive(Debug, Clone)]
pub struct VarMap {
    pub t: usize,
    /// `[ff][poly] -> (z, s, h)` variable indices.
    pub triples: Vec<Vec<(usize, usize, usize)>>,
}

/// Builds the one-polygon-per-flip-flop period minimization MILP.
///
/// Per flip-flop: a one-hot constraint over its polygon binaries; per
/// polygon: four box rows linking the slack variables to the binary, plus a
/// hypotenuse row for triangles; per stage: one setup and one hold row with
/// the source's delay plane expanded inline. The period variable is bounded
/// below by the trim floor.
pub fn build_milp(problem: &TrimmedProblem) -> Result<(MilpModel, VarMap), OptimizeError> {
    let mut m = MilpModel::new();
    let t = m.add_continuous("T", problem.t_floor, f64::INFINITY);
    let mut triples = Vec::with_capacity(problem.active.len());
    for (f, polys) in problem.active.iter().enumerate() {
        let mut row = Vec::with_capacity(polys.len());
        for p in polys {
            let z = m.add_binary(format!("z_{f}_{}", p.id));
            let s = m.add_continuous(format!("s_{f}_{}", p.id), 0.0, p.s_u);
            let h = m.add_continuous(format!("h_{f}_{}", p.id), 0.0, p.h_u);
            m.add_constraint(
                format!("sbox_lo_{f}_{}", p.id),
                vec![(s, 1.0), (z, -p.s_l)],
                Sense::Ge,
                0.0,
            );
            m.add_constraint(
                format!("sbox_hi_{f}_{}", p.id),
                vec![(s, 1.0), (z, -p.s_u)],
                Sense::Le,
                0.0,
            );
            m.add_constraint(
                format!("hbox_lo_{f}_{}", p.id),
                vec![(h, 1.0), (z, -p.h_l)],
                Sense::Ge,
                0.0,
            );
            m.add_constraint(
                format!("hbox_hi_{f}_{}", p.id),
                vec![(h, 1.0), (z, -p.h_u)],
                Sense::Le,
                0.0,
            );
            if let Some(hyp) = &p.hypotenuse {
                if hyp.c_t <= 0.0 {
                    return Err(OptimizeError::BadTriangle { id: p.id, c_t: hyp.c_t });
                }
                m.add_constraint(
                    format!("hyp_{f}_{}", p.id),
                    vec![(h, 1.0), (s, -hyp.c_ts), (z, -hyp.c_t)],
                    Sense::Ge,
                    0.0,
                );
            }
            row.push((z, s, h));
        }
        m.add_constraint(
            format!("onehot_{f}"),
            row.iter().map(|&(z, _, _)| (z, 1.0)).collect(),
            Sense::Eq,
            1.0,
        );
        triples.push(row);
    }
    for (k, stage) in problem.stages.iter().enumerate() {
        // Setup: s_dst + f(src) - T <= -d_max.
        let mut setup_terms: Vec<(usize, f64)> = vec![(t, -1.0)];
        for &(_, s, _) in &triples[stage.dst] {
            setup_terms.push((s, 1.0));
        }
        for (p, &(z, s, h)) in problem.active[stage.src].iter().zip(&triples[stage.src]) {
            setup_terms.push((z, p.plane.c));
            setup_terms.push((s, p.plane.c_s));
            setup_terms.push((h, p.plane.c_h));
        }
        m.add_constraint(format!("setup_{k}"), setup_terms, Sense::Le, -stage.d_max);
        // Hold: h_dst - f(src) <= d_min.
        let mut hold_terms: Vec<(usize, f64)> = Vec::new();
        for &(_, _, h) in &triples[stage.dst] {
            hold_terms.push((h, 1.0));
        }
        for (p, &(z, s, h)) in problem.active[stage.src].iter().zip(&triples[stage.src]) {
            hold_terms.push((z, -p.plane.c));
            hold_terms.push((s, -p.plane.c_s));
            hold_terms.push((h, -p.plane.c_h));
        }
        m.add_constraint(format!("hold_{k}"), hold_terms, Sense::Le, stage.d_min);
    }
    m.objective = vec![(t, 1.0)];
    Ok((m, VarMap { t, triples }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Proven optimal.
    Optimal,
    /// Feasible incumbent with a nonzero gap (a solver limit was hit).
    Feasible,
}

/// Optimization result: the period, per-flip-flop working points (indexed
/// like the input graph), and trim statistics.
#[derive(Debug, Clone)]
pub struct Solution {
    pub period: f64,
    pub points: Vec<WorkingPoint>,
    pub status: SolveStatus,
    pub gap: f64,
    pub nodes: u64,
    /// Flip-flops in the solved problem (after trimming).
    pub n_trimmed_ffs: usize,
    /// Average polygons per solved flip-flop (after trimming).
    pub avg_polygons: f64,
    pub removed_stages: usize,
    pub removed_ffs: usize,
}

/// Solver options.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub node_limit: u64,
    pub gap_tolerance: f64,
    /// Plateau tolerance used to classify stable polygons during trimming.
    pub stable_epsilon: f64,
    /// Skip trimming entirely (reference mode for equivalence tests).
    pub disable_trimming: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            node_limit: 1_000_000,
            gap_tolerance: 0.0,
            stable_epsilon: 0.5,
            disable_trimming: false,
        }
    }
}

/// Full pipeline: trim, build the MILP, solve it, and reassemble per-flip-
/// flop working points. The returned period is re-checked against every
/// stage of the untrimmed graph before it is reported.
pub fn solve_min_period(
    graph: &StageGraph,
    model: &PiecewiseDelayModel,
    options: &SolveOptions,
) -> Result<Solution, OptimizeError> {
    let bounds = if options.disable_trimming {
        full_bounds(graph, model)
    } else {
        compute_trim_bounds(graph, model)
    };
    let problem = trim(graph, model, &bounds, options.stable_epsilon)?;
    let mut points: Vec<Option<WorkingPoint>> = vec![None; graph.ff_count()];
    for (ff, point) in &problem.parked {
        points[*ff] = Some(*point);
    }

    let (period, status, gap, nodes) = if problem.ff_names.is_empty() {
        (problem.t_floor, SolveStatus::Optimal, 0.0, 0)
    } else {
        let (milp, map) = build_milp(&problem)?;
        let bb = BbOptions {
            node_limit: options.node_limit,
            gap_tolerance: options.gap_tolerance,
            ..BbOptions::default()
        };
        let sol = bb_solve(&milp, &bb);
        let (objective, values, status, gap) = unpack_milp(&sol)?;
        extract_points(&problem, &map, &values, &mut points);
        (objective, status, gap, sol.nodes)
    };

    let points: Vec<WorkingPoint> = points
        .into_iter()
        .map(|p| p.expect("every flip-flop is solved or parked"))
        .collect();

    // The trimmed optimum must satisfy the untrimmed stage constraints.
    for stage in graph.stages() {
        let src = &points[stage.src];
        let dst = &points[stage.dst];
        let ok_setup = dst.setup <= period - src.delay - stage.d_max + 1e-6;
        let ok_hold = dst.hold <= src.delay + stage.d_min + 1e-6;
        if !ok_setup || !ok_hold {
            return Err(OptimizeError::Infeasible(format!(
                "internal check failed on stage {} -> {}",
                graph.name(stage.src),
                graph.name(stage.dst)
            )));
        }
    }

    Ok(Solution {
        period,
        points,
        status,
        gap,
        nodes,
        n_trimmed_ffs: problem.ff_names.len(),
        avg_polygons: problem.avg_polygons(),
        removed_stages: problem.removed_stages,
        removed_ffs: problem.removed_ffs,
    })
}

/// Windows that keep every polygon: used to bypass trimming.
fn full_bounds(graph: &StageGraph, model: &PiecewiseDelayModel) -> TrimBounds {
    let window = SlackWindow {
        s_lo: model.s_min,
        s_hi: model.s_max,
        h_lo: model.h_min,
        h_hi: model.h_max,
    };
    TrimBounds {
        t_low: 0.0,
        t_high: f64::INFINITY,
        windows: vec![window; graph.ff_count()],
    }
}

fn unpack_milp(sol: &MilpSolution) -> Result<(f64, Vec<f64>, SolveStatus, f64), OptimizeError> {
    match (sol.status, &sol.objective, &sol.values) {
        (MilpStatus::Optimal, Some(obj), Some(values)) => {
            Ok((*obj, values.clone(), SolveStatus::Optimal, 0.0))
        }
        (MilpStatus::Limit, Some(obj), Some(values)) => {
            Ok((*obj, values.clone(), SolveStatus::Feasible, sol.gap))
        }
        (MilpStatus::Infeasible, _, _) => Err(OptimizeError::Infeasible(
            "no polygon assignment satisfies the hold structure".into(),
        )),
        _ => Err(OptimizeError::SolverLimit(format!(
            "solver stopped without a usable solution ({:?})",
            sol.status
        ))),
    }
}

/// Reads working points out of a MILP value vector: the polygon with the
/// largest selection value wins (ties toward the lower polygon id), and the
/// slack pair is snapped into its box.
fn extract_points(
    problem: &TrimmedProblem,
    map: &VarMap,
    values: &[f64],
    points: &mut [Option<WorkingPoint>],
) {
    for (f, row) in map.triples.iter().enumerate() {
        let polys = &problem.active[f];
        let mut best = 0usize;
        for (k, &(z, _, _)) in row.iter().enumerate() {
            if values[z] > values[row[best].0] + 1e-9 {
                best = k;
            }
        }
        let poly = &polys[best];
        let s_sum: f64 = row.iter().map(|&(_, s, _)| values[s]).sum();
        let h_sum: f64 = row.iter().map(|&(_, _, h)| values[h]).sum();
        let setup = s_sum.clamp(poly.s_l, poly.s_u);
        let hold = h_sum.clamp(poly.h_l, poly.h_u);
        let point = SlackPoint::new(setup, hold);
        points[problem.ff_orig[f]] = Some(WorkingPoint {
            polygon: poly.id,
            setup,
            hold,
            delay: poly.plane.value(point),
        });
    }
}

/// Outcome of validating a solution against the model and the oracle.
#[derive(Debug, Clone)]
pub struct ValidationVerdict {
    pub passed: bool,
    pub failures: Vec<String>,
}

const CHECK_TOL: f64 = 1e-6;

/// Re-checks a solution end to end:
/// (a) every working point lies in its polygon and every stage inequality
///     holds with the model delays;
/// (b) the oracle is valid at every working point;
/// (c) the model delay matches the oracle within the model's accuracy;
/// (d) one propagation of oracle delays implies slacks no smaller than the
///     claimed ones, minus the model accuracy.
pub fn validate_solution(
    solution: &Solution,
    graph: &StageGraph,
    model: &PiecewiseDelayModel,
    oracle: &dyn DelayOracle,
) -> ValidationVerdict {
    let mut failures = Vec::new();
    let d_th = model.d_th;
    let mut oracle_delays = vec![f64::NAN; graph.ff_count()];
    if solution.points.len() != graph.ff_count() {
        return ValidationVerdict {
            passed: false,
            failures: vec!["working point count mismatch".into()],
        };
    }
    for (ff, point) in solution.points.iter().enumerate() {
        let name = graph.name(ff);
        let poly = match model.polygons.get(point.polygon) {
            Some(p) => p,
            None => {
                failures.push(format!("{name}: unknown polygon {}", point.polygon));
                continue;
            }
        };
        let sp = SlackPoint::new(point.setup, point.hold);
        if !poly.contains(sp) {
            failures.push(format!("{name}: working point {sp} outside polygon {}", poly.id));
        }
        if (poly.plane.value(sp) - point.delay).abs() > CHECK_TOL {
            failures.push(format!("{name}: recorded delay disagrees with the plane"));
        }
        match oracle.query(sp) {
            Ok(OracleResponse::Valid { clock_to_q }) => {
                oracle_delays[ff] = clock_to_q;
                if (clock_to_q - point.delay).abs() > d_th + 1e-9 {
                    failures.push(format!(
                        "{name}: model delay {:.4} vs oracle {clock_to_q:.4} beyond d_th {d_th}",
                        point.delay
                    ));
                }
            }
            Ok(OracleResponse::Metastable) => {
                failures.push(format!("{name}: oracle is metastable at {sp}"));
            }
            Err(e) => failures.push(format!("{name}: oracle query failed: {e}")),
        }
    }
    for stage in graph.stages() {
        let src = &solution.points[stage.src];
        let dst = &solution.points[stage.dst];
        if dst.setup > solution.period - src.delay - stage.d_max + CHECK_TOL {
            failures.push(format!(
                "setup constraint violated on {} -> {}",
                graph.name(stage.src),
                graph.name(stage.dst)
            ));
        }
        if dst.hold > src.delay + stage.d_min + CHECK_TOL {
            failures.push(format!(
                "hold constraint violated on {} -> {}",
                graph.name(stage.src),
                graph.name(stage.dst)
            ));
        }
    }
    // One propagation pass with oracle delays.
    for ff in 0..graph.ff_count() {
        let fan_in: Vec<&Stage> = graph.stages().iter().filter(|s| s.dst == ff).collect();
        if fan_in.is_empty() || oracle_delays[ff].is_nan() {
            continue;
        }
        let implied_setup = fan_in
            .iter()
            .filter(|s| !oracle_delays[s.src].is_nan())
            .map(|s| solution.period - oracle_delays[s.src] - s.d_max)
            .fold(f64::INFINITY, f64::min);
        let implied_hold = fan_in
            .iter()
            .filter(|s| !oracle_delays[s.src].is_nan())
            .map(|s| oracle_delays[s.src] + s.d_min)
            .fold(f64::INFINITY, f64::min);
        let point = &solution.points[ff];
        if implied_setup < point.setup - d_th - CHECK_TOL {
            failures.push(format!(
                "{}: implied setup slack {implied_setup:.4} below claimed {:.4} - d_th",
                graph.name(ff),
                point.setup
            ));
        }
        if implied_hold < point.hold - d_th - CHECK_TOL {
            failures.push(format!(
                "{}: implied hold slack {implied_hold:.4} below claimed {:.4} - d_th",
                graph.name(ff),
                point.hold
            ));
        }
    }
    ValidationVerdict { passed: failures.is_empty(), failures }
}

const ENUMERATION_LIMIT: u128 = 1_000_000;

/// Independent reference solver: enumerates every polygon assignment and
/// solves the residual LP for each, returning the best feasible period.
pub fn brute_force_min_period(problem: &TrimmedProblem) -> Result<f64, OptimizeError> {
    let combos: u128 = problem
        .active
        .iter()
        .map(|a| a.len() as u128)
        .product();
    if combos > ENUMERATION_LIMIT {
        return Err(OptimizeError::EnumerationLimit(combos, ENUMERATION_LIMIT));
    }
    if problem.ff_names.is_empty() {
        return Ok(problem.t_floor);
    }
    let n = problem.active.len();
    let mut choice = vec![0usize; n];
    let mut best: Option<f64> = None;
    loop {
        if let Some(t) = assignment_period(problem, &choice) {
            best = Some(best.map_or(t, |b: f64| b.min(t)));
        }
        // Mixed-radix increment.
        let mut pos = 0;
        loop {
            if pos == n {
                break;
            }
            choice[pos] += 1;
            if choice[pos] < problem.active[pos].len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
        if pos == n {
            break;
        }
    }
    best.ok_or_else(|| {
        OptimizeError::Infeasible("every polygon assignment is infeasible".into())
    })
}

/// Minimum period for one fixed polygon assignment, via the residual LP.
fn assignment_period(problem: &TrimmedProblem, choice: &[usize]) -> Option<f64> {
    let mut m = MilpModel::new();
    let n = problem.active.len();
    let t = m.add_continuous("T", problem.t_floor, f64::INFINITY);
    let mut s_vars = Vec::with_capacity(n);
    let mut h_vars = Vec::with_capacity(n);
    for (f, &k) in choice.iter().enumerate() {
        let p = &problem.active[f][k];
        let s = m.add_continuous(format!("s{f}"), p.s_l, p.s_u);
        let h = m.add_continuous(format!("h{f}"), p.h_l, p.h_u);
        if let Some(hyp) = &p.hypotenuse {
            m.add_constraint(
                format!("hyp{f}"),
                vec![(h, 1.0), (s, -hyp.c_ts)],
                Sense::Ge,
                hyp.c_t,
            );
        }
        s_vars.push(s);
        h_vars.push(h);
    }
    for (k, stage) in problem.stages.iter().enumerate() {
        let src_poly = &problem.active[stage.src][choice[stage.src]];
        m.add_constraint(
            format!("setup{k}"),
            vec![
                (s_vars[stage.dst], 1.0),
                (t, -1.0),
                (s_vars[stage.src], src_poly.plane.c_s),
                (h_vars[stage.src], src_poly.plane.c_h),
            ],
            Sense::Le,
            -stage.d_max - src_poly.plane.c,
        );
        m.add_constraint(
            format!("hold{k}"),
            vec![
                (h_vars[stage.dst], 1.0),
                (s_vars[stage.src], -src_poly.plane.c_s),
                (h_vars[stage.src], -src_poly.plane.c_h),
            ],
            Sense::Le,
            stage.d_min + src_poly.plane.c,
        );
    }
    m.objective = vec![(t, 1.0)];
    let sol = crate::milp::lp_solve(&m);
    match sol.status {
        crate::milp::LpStatus::Optimal => Some(sol.objective),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_stage_graph;
    use crate::model::{PiecewiseDelayModel, PlaneCoefficients, Polygon, PolygonKind};

    fn rect(s_l: f64, s_u: f64, h_l: f64, h_u: f64, d: f64) -> Polygon {
        Polygon {
            id: 0,
            kind: PolygonKind::Rectangle,
            s_l,
            s_u,
            h_l,
            h_u,
            plane: PlaneCoefficients::constant(d),
            hypotenuse: None,
        }
    }

    /// Two constant rectangles: a relaxed one at 100 ps and an aggressive
    /// low-setup one at 120 ps.
    fn chain_model() -> PiecewiseDelayModel {
        PiecewiseDelayModel::from_polygons(
            vec![
                rect(30.0, 200.0, 30.0, 200.0, 100.0),
                rect(10.0, 30.0, 30.0, 200.0, 120.0),
            ],
            100.0,
            200.0,
            2.0,
            5.0,
            0,
        )
        .unwrap()
    }

    fn chain_graph() -> StageGraph {
        parse_stage_graph(
            "ff f1\nff f2\nff f3\nstage f1 f2 dmax=500 dmin=50\nstage f2 f3 dmax=300 dmin=50\n",
        )
        .unwrap()
    }

    #[test]
    fn trim_bounds_match_hand_arithmetic() {
        let model = PiecewiseDelayModel::from_polygons(
            vec![rect(10.0, 200.0, 10.0, 200.0, 100.0)],
            100.0,
            200.0,
            2.0,
            5.0,
            0,
        )
        .unwrap();
        let graph = parse_stage_graph(
            "ff a\nff b\nff c\nstage a b dmax=500 dmin=50\nstage b c dmax=300 dmin=60\n",
        )
        .unwrap();
        let bounds = compute_trim_bounds(&graph, &model);
        assert_eq!(bounds.t_low, 610.0);
        assert_eq!(bounds.t_high, 900.0);
        // b is fed by the 500/50 stage.
        let wb = bounds.windows[1];
        assert_eq!(wb.s_lo, 0.0);
        assert_eq!(wb.s_hi, 300.0);
        assert_eq!(wb.h_lo, 150.0);
        assert_eq!(wb.h_hi, 250.0);
        // a has no fan-in: full extremes.
        let wa = bounds.windows[0];
        assert_eq!((wa.s_lo, wa.s_hi), (10.0, 200.0));
    }

    #[test]
    fn window_removes_polygon_below_it() {
        let model = PiecewiseDelayModel::from_polygons(
            vec![
                rect(10.0, 200.0, 10.0, 200.0, 100.0),
                rect(10.0, 200.0, 5.0, 30.0, 150.0),
            ],
            100.0,
            200.0,
            2.0,
            5.0,
            0,
        )
        .unwrap();
        let graph = parse_stage_graph("ff a\nff b\nstage a b dmax=500 dmin=50\n").unwrap();
        let bounds = compute_trim_bounds(&graph, &model);
        // h window of b is [150, 250]: the h_u=30 polygon is out.
        let problem = trim(&graph, &model, &bounds, 0.5).unwrap();
        let b = problem.ff_orig.iter().position(|&ff| ff == 1).unwrap();
        assert_eq!(problem.active[b].len(), 1);
        assert_eq!(problem.active[b][0].id, 0);
    }

    #[test]
    fn covering_bounds_remove_nothing() {
        let model = chain_model();
        let graph = chain_graph();
        let bounds = full_bounds(&graph, &model);
        let problem = trim(&graph, &model, &bounds, 0.5).unwrap();
        for active in &problem.active {
            assert_eq!(active.len(), model.polygons.len());
        }
        assert_eq!(problem.removed_stages, 0);
    }

    #[test]
    fn chain_optimum_beats_classic_by_polygon_switch() {
        let model = chain_model();
        let graph = chain_graph();
        let solution = solve_min_period(&graph, &model, &SolveOptions::default()).unwrap();
        assert_eq!(solution.status, SolveStatus::Optimal);
        assert!(
            (solution.period - 610.0).abs() < 1e-6,
            "period {}",
            solution.period
        );
        // f1 stays relaxed, f2 takes the aggressive polygon.
        assert_eq!(solution.points[0].polygon, 0);
        assert_eq!(solution.points[1].polygon, 1);
    }

    #[test]
    fn brute_force_agrees_on_the_chain() {
        let model = chain_model();
        let graph = chain_graph();
        let bounds = compute_trim_bounds(&graph, &model);
        let problem = trim(&graph, &model, &bounds, 0.5).unwrap();
        let t = brute_force_min_period(&problem).unwrap();
        assert!((t - 610.0).abs() < 1e-6, "brute force {t}");
    }

    #[test]
    fn single_ff_without_stages_sits_at_the_floor() {
        let model = chain_model();
        let graph = parse_stage_graph("ff lonely\n").unwrap();
        let solution = solve_min_period(&graph, &model, &SolveOptions::default()).unwrap();
        assert_eq!(solution.period, 0.0);
        assert_eq!(solution.status, SolveStatus::Optimal);
        assert_eq!(solution.points.len(), 1);
    }

    #[test]
    fn milp_shape_matches_construction_rules() {
        // 3 flip-flops x 2 polygons, 2 stages.
        let model = chain_model();
        let graph = chain_graph();
        let bounds = full_bounds(&graph, &model);
        let problem = trim(&graph, &model, &bounds, 0.5).unwrap();
        let (milp, map) = build_milp(&problem).unwrap();
        let binaries = milp.binary_indices().len();
        assert_eq!(binaries, 6);
        assert_eq!(milp.variables.len() - binaries, 13); // T + 12 slacks
        let onehot = milp
            .constraints
            .iter()
            .filter(|c| c.name.starts_with("onehot"))
            .count();
        assert_eq!(onehot, 3);
        let boxes = milp
            .constraints
            .iter()
            .filter(|c| c.name.contains("box"))
            .count();
        assert_eq!(boxes, 24); // 12 lower/upper pairs
        let stages = milp
            .constraints
            .iter()
            .filter(|c| c.name.starts_with("setup") || c.name.starts_with("hold"))
            .count();
        assert_eq!(stages, 4);
        assert_eq!(map.triples.len(), 3);
    }

    #[test]
    fn triangle_with_bad_intercept_rejected() {
        let mut poly = rect(10.0, 30.0, 10.0, 30.0, 150.0);
        poly.kind = PolygonKind::Triangle;
        poly.hypotenuse = Some(crate::model::Hypotenuse { c_t: -5.0, c_ts: -1.0 });
        let model = PiecewiseDelayModel::from_polygons(vec![poly], 100.0, 200.0, 2.0, 5.0, 0)
            .unwrap();
        let graph = parse_stage_graph("ff a\nff b\nstage a b dmax=10 dmin=1\n").unwrap();
        let bounds = full_bounds(&graph, &model);
        let problem = trim(&graph, &model, &bounds, 0.5).unwrap();
        assert!(matches!(
            build_milp(&problem),
            Err(OptimizeError::BadTriangle { .. })
        ));
    }

    /// Matches the two-rectangle chain model exactly: 120 ps in the
    /// aggressive band, 100 ps on the plateau, metastable outside.
    pub(crate) struct StepOracle;

    impl crate::oracle::DelayOracle for StepOracle {
        fn query(
            &self,
            point: SlackPoint,
        ) -> Result<crate::oracle::OracleResponse, crate::error::OracleError> {
            use crate::oracle::OracleResponse;
            if !(0.0..=300.0).contains(&point.setup) || !(0.0..=300.0).contains(&point.hold) {
                return Err(crate::error::OracleError::OutOfDomain { point, domain: 300.0 });
            }
            Ok(if point.setup < 10.0 || point.hold < 30.0 {
                OracleResponse::Metastable
            } else if point.setup < 30.0 {
                OracleResponse::Valid { clock_to_q: 120.0 }
            } else {
                OracleResponse::Valid { clock_to_q: 100.0 }
            })
        }
        fn domain_max(&self) -> f64 {
            300.0
        }
        fn metastable_threshold(&self) -> f64 {
            200.0
        }
    }

    #[test]
    fn validation_rejects_metastable_working_point() {
        let model = chain_model();
        let graph = chain_graph();
        let mut solution = solve_min_period(&graph, &model, &SolveOptions::default()).unwrap();
        let ok = validate_solution(&solution, &graph, &model, &StepOracle);
        assert!(ok.passed, "failures: {:?}", ok.failures);
        // Force a working point into the metastable wall.
        solution.points[1].setup = 0.5;
        solution.points[1].hold = 0.5;
        let bad = validate_solution(&solution, &graph, &model, &StepOracle);
        assert!(!bad.passed);
    }

    #[test]
    fn stable_circuit_removes_everything() {
        // One polygon at the plateau: every flip-flop is stable-only.
        let model = PiecewiseDelayModel::from_polygons(
            vec![rect(30.0, 200.0, 30.0, 200.0, 100.0)],
            100.0,
            200.0,
            2.0,
            5.0,
            0,
        )
        .unwrap();
        let graph = chain_graph();
        let bounds = compute_trim_bounds(&graph, &model);
        let problem = trim(&graph, &model, &bounds, 0.5).unwrap();
        assert_eq!(problem.removed_ffs, 3);
        assert_eq!(problem.removed_stages, 2);
        // Floor: plateau delay + worst stage + parked setup slack.
        assert!((problem.t_floor - 630.0).abs() < 1e-9, "floor {}", problem.t_floor);
        let solution = solve_min_period(&graph, &model, &SolveOptions::default()).unwrap();
        assert!((solution.period - 630.0).abs() < 1e-9);
    }
}
