//! Adaptive piecewise-linear characterization of a delay surface.
//!
//! The pipeline queries the oracle as sparingly as it can:
//!
//! 1. Binary searches along two anchor lines locate where the metastable
//!    wall crosses them.
//! 2. The wall between those anchors is approximated by a chain of linear
//!    segments, refined by perpendicular binary search until every chain
//!    midpoint is within `k_th` of the true boundary.
//! 3. Each segment becomes the hypotenuse of a right triangle carrying a
//!    plane through its three corner delays; triangles whose hypotenuse
//!    midpoint misses the surface by more than `d_th` are split.
//! 4. A diagonal walk from the deep-plateau anchor finds the corner of the
//!    constant stable region, which one flat rectangle covers.
//! 5. The band between the triangles and the stable region is tiled with
//!    rectangles seeded from the triangle edges; any rectangle whose center
//!    misses the surface by more than `d_th` splits into quadrants.
//! 6. Adjacent rectangles re-merge while the merged plane still passes the
//!    center check, shrinking the polygon count.

use crate::error::CharError;
use crate::model::{
    Hypotenuse, PiecewiseDelayModel, PlaneCoefficients, Polygon, PolygonKind, GEOM_EPS,
};
use crate::oracle::{CachingOracle, DelayOracle, DelaySample, OracleResponse, SlackPoint};

/// Characterization configuration. All lengths in picoseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharConfig {
    /// The "very large" slack used for anchor points and the plateau probe.
    pub anchor_slack: f64,
    /// Maximum distance between a boundary segment and the true boundary.
    pub k_th: f64,
    /// Maximum delay error of any polygon at its verification point.
    pub d_th: f64,
    /// Termination width of every binary search.
    pub search_resolution: f64,
    /// Step of the diagonal stable-corner walk.
    pub stable_step: f64,
    /// Delay rise over the plateau value that ends the stable-corner walk.
    pub stable_epsilon: f64,
    /// Bound on every recursive split depth.
    pub max_split_depth: usize,
}

impl Default for CharConfig {
    fn default() -> Self {
        Self {
            anchor_slack: 150.0,
            k_th: 5.0,
            d_th: 2.0,
            search_resolution: 0.25,
            stable_step: 4.0,
            stable_epsilon: 0.5,
            max_split_depth: 12,
        }
    }
}

impl CharConfig {
    pub fn validate(&self) -> Result<(), CharError> {
        let all_positive = self.anchor_slack > 0.0
            && self.k_th > 0.0
            && self.d_th > 0.0
            && self.search_resolution > 0.0
            && self.stable_step > 0.0
            && self.stable_epsilon > 0.0;
        if !all_positive {
            return Err(CharError::InvalidConfig("all lengths must be positive".into()));
        }
        if self.search_resolution >= self.k_th {
            return Err(CharError::InvalidConfig(
                "search_resolution must be below k_th".into(),
            ));
        }
        if self.max_split_depth < 1 {
            return Err(CharError::InvalidConfig("max_split_depth must be >= 1".into()));
        }
        Ok(())
    }
}

/// Which slack coordinate an anchor search walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Setup,
    Hold,
}

/// One straight piece of the boundary chain, ordered by increasing setup
/// slack (so `start.hold >= end.hold` on a falling boundary).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySegment {
    pub start: SlackPoint,
    pub end: SlackPoint,
}

fn require_valid(oracle: &dyn DelayOracle, point: SlackPoint, what: &str) -> Result<f64, CharError> {
    match oracle.query(point)? {
        OracleResponse::Valid { clock_to_q } => Ok(clock_to_q),
        OracleResponse::Metastable => Err(CharError::Failure(format!(
            "{what} at {point} is metastable"
        ))),
    }
}

fn is_valid(oracle: &dyn DelayOracle, point: SlackPoint) -> Result<bool, CharError> {
    Ok(!oracle.query(point)?.is_metastable())
}

/// Finds the boundary crossing on one anchor line by binary search.
///
/// For `Axis::Hold` the setup slack is pinned at `anchor_slack` and the hold
/// slack is searched; the returned point has the smallest valid searched
/// coordinate, to within `search_resolution`. If the whole line is valid the
/// searched coordinate converges to 0.
pub fn find_axis_anchor(
    oracle: &dyn DelayOracle,
    axis: Axis,
    cfg: &CharConfig,
) -> Result<SlackPoint, CharError> {
    let fixed = cfg.anchor_slack;
    let at = |coord: f64| match axis {
        Axis::Hold => SlackPoint::new(fixed, coord),
        Axis::Setup => SlackPoint::new(coord, fixed),
    };
    if !is_valid(oracle, at(fixed))? {
        return Err(CharError::Failure(
            "entire anchor search range is metastable".into(),
        ));
    }
    if is_valid(oracle, at(0.0))? {
        return Ok(at(0.0));
    }
    let mut lo = 0.0;
    let mut hi = fixed;
    while hi - lo > cfg.search_resolution {
        let mid = 0.5 * (lo + hi);
        if is_valid(oracle, at(mid))? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(at(hi))
}

/// Walks from the midpoint of `p..q` perpendicular to the chord and returns
/// the boundary point there plus its distance from the midpoint. `None` when
/// the perpendicular ray never crosses the boundary inside the domain.
fn perpendicular_boundary_point(
    oracle: &dyn DelayOracle,
    p: SlackPoint,
    q: SlackPoint,
    cfg: &CharConfig,
) -> Result<Option<(SlackPoint, f64)>, CharError> {
    let domain = oracle.domain_max();
    let mid = SlackPoint::new(0.5 * (p.setup + q.setup), 0.5 * (p.hold + q.hold));
    let (dx, dy) = (q.setup - p.setup, q.hold - p.hold);
    let len = (dx * dx + dy * dy).sqrt();
    if len < GEOM_EPS {
        return Ok(None);
    }
    // Unit normal pointing toward the origin side of the chord, where the
    // metastable region lies.
    let mut n = (dy / len, -dx / len);
    if n.0 * mid.setup + n.1 * mid.hold > 0.0 {
        n = (-n.0, -n.1);
    }
    let ray_exit = |from: SlackPoint, dir: (f64, f64)| -> f64 {
        let mut t = f64::INFINITY;
        for (pos, d) in [(from.setup, dir.0), (from.hold, dir.1)] {
            if d < -GEOM_EPS {
                t = t.min(pos / -d);
            } else if d > GEOM_EPS {
                t = t.min((domain - pos) / d);
            }
        }
        t.max(0.0)
    };
    let point_at = |from: SlackPoint, dir: (f64, f64), t: f64| {
        SlackPoint::new(
            (from.setup + t * dir.0).clamp(0.0, domain),
            (from.hold + t * dir.1).clamp(0.0, domain),
        )
    };
    let mid_valid = is_valid(oracle, mid)?;
    // A metastable midpoint means the chord dipped below the boundary; look
    // for the crossing on the opposite side.
    let dir = if mid_valid { n } else { (-n.0, -n.1) };
    let t_exit = ray_exit(mid, dir);
    if t_exit <= cfg.search_resolution {
        return Ok(None);
    }
    if is_valid(oracle, point_at(mid, dir, t_exit))? == mid_valid {
        return Ok(None);
    }
    let mut lo = 0.0;
    let mut hi = t_exit;
    while hi - lo > cfg.search_resolution {
        let t = 0.5 * (lo + hi);
        if is_valid(oracle, point_at(mid, dir, t))? == mid_valid {
            lo = t;
        } else {
            hi = t;
        }
    }
    // Report the valid side of the bracket.
    let (t_boundary, t_dist) = if mid_valid { (lo, lo) } else { (hi, hi) };
    Ok(Some((point_at(mid, dir, t_boundary), t_dist)))
}

fn chain_ordered(a: SlackPoint, b: SlackPoint) -> (SlackPoint, SlackPoint) {
    if a.setup <= b.setup {
        (a, b)
    } else {
        (b, a)
    }
}

fn strictly_between(lo: SlackPoint, mid: SlackPoint, hi: SlackPoint) -> bool {
    lo.setup + GEOM_EPS < mid.setup
        && mid.setup < hi.setup - GEOM_EPS
        && lo.hold - GEOM_EPS > mid.hold
        && mid.hold > hi.hold + GEOM_EPS
}

/// Refines the chord between two boundary anchors into a chain of segments
/// whose midpoints all lie within `k_th` of the true boundary.
pub fn refine_boundary(
    oracle: &dyn DelayOracle,
    a: SlackPoint,
    b: SlackPoint,
    cfg: &CharConfig,
) -> Result<Vec<BoundarySegment>, CharError> {
    let (start, end) = chain_ordered(a, b);
    let mut out = Vec::new();
    refine_segment(oracle, start, end, 0, cfg, &mut out)?;
    Ok(out)
}

fn refine_segment(
    oracle: &dyn DelayOracle,
    p: SlackPoint,
    q: SlackPoint,
    depth: usize,
    cfg: &CharConfig,
    out: &mut Vec<BoundarySegment>,
) -> Result<(), CharError> {
    if depth < cfg.max_split_depth {
        if let Some((d, dist)) = perpendicular_boundary_point(oracle, p, q, cfg)? {
            if dist > cfg.k_th && strictly_between(p, d, q) {
                refine_segment(oracle, p, d, depth + 1, cfg, out)?;
                refine_segment(oracle, d, q, depth + 1, cfg, out)?;
                return Ok(());
            }
        }
    }
    out.push(BoundarySegment { start: p, end: q });
    Ok(())
}

/// Fits the plane through three delay samples; with four, the three with the
/// largest delays are used (ties prefer smaller setup, then smaller hold).
pub fn fit_plane(samples: &[DelaySample]) -> Result<PlaneCoefficients, CharError> {
    let mut points: Vec<(SlackPoint, f64)> = samples
        .iter()
        .map(|s| match s.response {
            OracleResponse::Valid { clock_to_q } => Ok((s.point, clock_to_q)),
            OracleResponse::Metastable => Err(CharError::Failure(format!(
                "cannot fit a plane through the metastable sample at {}",
                s.point
            ))),
        })
        .collect::<Result<_, _>>()?;
    match points.len() {
        3 => {}
        4 => {
            points.sort_by(|a, b| {
                b.1.partial_cmp(&a.1)
                    .unwrap()
                    .then(a.0.setup.partial_cmp(&b.0.setup).unwrap())
                    .then(a.0.hold.partial_cmp(&b.0.hold).unwrap())
            });
            points.truncate(3);
        }
        n => {
            return Err(CharError::Failure(format!(
                "plane fit needs 3 or 4 samples, got {n}"
            )))
        }
    }
    let (p1, d1) = points[0];
    let (p2, d2) = points[1];
    let (p3, d3) = points[2];
    let a11 = p2.setup - p1.setup;
    let a12 = p2.hold - p1.hold;
    let a21 = p3.setup - p1.setup;
    let a22 = p3.hold - p1.hold;
    let det = a11 * a22 - a12 * a21;
    if det.abs() < 1e-9 {
        return Err(CharError::DegenerateFit);
    }
    let b1 = d2 - d1;
    let b2 = d3 - d1;
    let c_s = (b1 * a22 - b2 * a12) / det;
    let c_h = (a11 * b2 - a21 * b1) / det;
    let c = d1 - c_s * p1.setup - c_h * p1.hold;
    Ok(PlaneCoefficients { c, c_s, c_h })
}

/// Builds one right triangle per boundary segment, splitting segments whose
/// hypotenuse midpoint misses the surface by more than `d_th`.
pub fn build_boundary_triangles(
    oracle: &dyn DelayOracle,
    segments: &[BoundarySegment],
    cfg: &CharConfig,
) -> Result<Vec<Polygon>, CharError> {
    let mut out = Vec::new();
    for seg in segments {
        triangulate(oracle, seg.start, seg.end, 0, cfg, &mut out)?;
    }
    Ok(out)
}

fn triangulate(
    oracle: &dyn DelayOracle,
    p: SlackPoint,
    q: SlackPoint,
    depth: usize,
    cfg: &CharConfig,
    out: &mut Vec<Polygon>,
) -> Result<(), CharError> {
    // Slivers thinner than the search resolution carry no area worth a plane.
    if q.setup - p.setup < GEOM_EPS || p.hold - q.hold < GEOM_EPS {
        return Ok(());
    }
    let domain = oracle.domain_max();
    // Right-angle corner at the componentwise maximum, nudged toward the
    // plateau if the oracle reports it metastable.
    let mut corner = SlackPoint::new(q.setup, p.hold);
    let mut attempts = 0;
    let corner_delay = loop {
        match oracle.query(corner)? {
            OracleResponse::Valid { clock_to_q } => break clock_to_q,
            OracleResponse::Metastable => {
                attempts += 1;
                if attempts > cfg.max_split_depth {
                    return Err(CharError::Failure(format!(
                        "triangle corner near {corner} stays metastable"
                    )));
                }
                corner = SlackPoint::new(
                    (corner.setup + cfg.search_resolution).min(domain),
                    (corner.hold + cfg.search_resolution).min(domain),
                );
            }
        }
    };
    let dp = require_valid(oracle, p, "boundary endpoint")?;
    let dq = require_valid(oracle, q, "boundary endpoint")?;
    let plane = fit_plane(&[
        DelaySample { point: p, response: OracleResponse::Valid { clock_to_q: dp } },
        DelaySample { point: q, response: OracleResponse::Valid { clock_to_q: dq } },
        DelaySample { point: corner, response: OracleResponse::Valid { clock_to_q: corner_delay } },
    ])?;
    let mid = SlackPoint::new(0.5 * (p.setup + q.setup), 0.5 * (p.hold + q.hold));
    let err = match oracle.query(mid)? {
        OracleResponse::Valid { clock_to_q } => (plane.value(mid) - clock_to_q).abs(),
        OracleResponse::Metastable => f64::INFINITY,
    };
    if err > CENTER_MARGIN * cfg.d_th && depth < cfg.max_split_depth {
        let split = match perpendicular_boundary_point(oracle, p, q, cfg)? {
            Some((d, _)) if strictly_between(p, d, q) => Some(d),
            _ if strictly_between(p, mid, q) => Some(mid),
            _ => None,
        };
        if let Some(d) = split {
            triangulate(oracle, p, d, depth + 1, cfg, out)?;
            triangulate(oracle, d, q, depth + 1, cfg, out)?;
            return Ok(());
        }
    }
    let c_ts = (q.hold - p.hold) / (q.setup - p.setup);
    let c_t = p.hold - c_ts * p.setup;
    out.push(Polygon {
        id: 0,
        kind: PolygonKind::Triangle,
        s_l: p.setup,
        s_u: corner.setup,
        h_l: q.hold,
        h_u: corner.hold,
        plane,
        hypotenuse: Some(Hypotenuse { c_t, c_ts }),
    });
    Ok(())
}

/// Walks diagonally down from the plateau anchor and returns the last point
/// whose delay stays within `stable_epsilon` of the plateau delay.
pub fn find_stable_corner(
    oracle: &dyn DelayOracle,
    cfg: &CharConfig,
) -> Result<SlackPoint, CharError> {
    let g = SlackPoint::new(cfg.anchor_slack, cfg.anchor_slack);
    let f_lower = require_valid(oracle, g, "stable anchor")?;
    let mut last = g;
    let mut k = 1usize;
    loop {
        let coord = (cfg.anchor_slack - k as f64 * cfg.stable_step).max(0.0);
        let cand = SlackPoint::new(coord, coord);
        let unstable = match oracle.query(cand)? {
            OracleResponse::Valid { clock_to_q } => clock_to_q > f_lower + cfg.stable_epsilon,
            OracleResponse::Metastable => true,
        };
        if unstable {
            return Ok(last);
        }
        if coord == 0.0 {
            return Ok(cand);
        }
        last = cand;
        k += 1;
    }
}

/// Internal acceptance fraction of `d_th` for center checks.
///
/// The plane error against a convex surface is concave over the region, so
/// its maximum over a box is at most twice the value at the box center;
/// accepting only half of `d_th` at the center keeps the whole polygon
/// within `d_th`.
const CENTER_MARGIN: f64 = 0.5;

/// Geometric partition of `[lo, hi]`: strip widths start at `first` and
/// double, tracking the exponential length scale of the delay surface.
fn geometric_strips(lo: f64, hi: f64, first: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut a = lo;
    let mut w = first.max(1e-3);
    while hi - a > GEOM_EPS {
        let b = (a + w).min(hi);
        out.push((a, b));
        a = b;
        w *= 2.0;
    }
    out
}

/// Covers the band between the boundary triangles and the stable plateau
/// with rectangles, plus the flat stable rectangle itself. Rows expand from
/// the triangle edges toward the top and the right in geometric strips; any
/// rectangle failing its center check splits into four.
pub fn build_rectangles(
    oracle: &dyn DelayOracle,
    triangles: &[Polygon],
    h_corner: SlackPoint,
    cfg: &CharConfig,
) -> Result<Vec<Polygon>, CharError> {
    let domain = oracle.domain_max();
    let g = SlackPoint::new(cfg.anchor_slack, cfg.anchor_slack);
    let f_lower = require_valid(oracle, g, "stable anchor")?;
    let mut out = Vec::new();

    // The stable region needs no corner fit: one constant plane.
    if domain - h_corner.setup > GEOM_EPS && domain - h_corner.hold > GEOM_EPS {
        let bounds = (h_corner.setup, domain, h_corner.hold, domain);
        let center = SlackPoint::new(
            0.5 * (bounds.0 + bounds.1),
            0.5 * (bounds.2 + bounds.3),
        );
        let center_err = match oracle.query(center)? {
            OracleResponse::Valid { clock_to_q } => (f_lower - clock_to_q).abs(),
            OracleResponse::Metastable => f64::INFINITY,
        };
        if center_err <= CENTER_MARGIN * cfg.d_th {
            out.push(rectangle(bounds, PlaneCoefficients::constant(f_lower)));
        } else {
            split_into_quadrants(oracle, bounds, 1, cfg, &mut out)?;
        }
    }

    if triangles.is_empty() {
        // No metastable wall was found: tile the two arms below and left of
        // the stable corner directly.
        for (a, b) in geometric_strips(0.0, h_corner.hold, cfg.k_th) {
            verify_rectangle(oracle, (0.0, domain, a, b), 0, cfg, &mut out)?;
        }
        for (a, b) in geometric_strips(0.0, h_corner.setup, cfg.k_th) {
            verify_rectangle(oracle, (a, b, h_corner.hold, domain), 0, cfg, &mut out)?;
        }
    } else {
        // One column of strips above each triangle box; together they tile
        // everything above the staircase within the chain's setup range.
        for tri in triangles {
            for (a, b) in geometric_strips(tri.h_u, domain, cfg.k_th) {
                verify_rectangle(oracle, (tri.s_l, tri.s_u, a, b), 0, cfg, &mut out)?;
            }
        }
        // One column right of the whole chain covers the remaining band.
        let s_edge = triangles.iter().map(|t| t.s_u).fold(f64::NEG_INFINITY, f64::max);
        let h_floor = triangles.iter().map(|t| t.h_l).fold(f64::INFINITY, f64::min);
        if domain - s_edge > GEOM_EPS {
            for (a, b) in geometric_strips(h_floor, domain, cfg.k_th) {
                verify_rectangle(oracle, (s_edge, domain, a, b), 0, cfg, &mut out)?;
            }
        }
    }
    Ok(out)
}

fn rectangle(bounds: (f64, f64, f64, f64), plane: PlaneCoefficients) -> Polygon {
    Polygon {
        id: 0,
        kind: PolygonKind::Rectangle,
        s_l: bounds.0,
        s_u: bounds.1,
        h_l: bounds.2,
        h_u: bounds.3,
        plane,
        hypotenuse: None,
    }
}

fn split_into_quadrants(
    oracle: &dyn DelayOracle,
    (s0, s1, h0, h1): (f64, f64, f64, f64),
    depth: usize,
    cfg: &CharConfig,
    out: &mut Vec<Polygon>,
) -> Result<(), CharError> {
    let sm = 0.5 * (s0 + s1);
    let hm = 0.5 * (h0 + h1);
    for q in [
        (s0, sm, h0, hm),
        (sm, s1, h0, hm),
        (s0, sm, hm, h1),
        (sm, s1, hm, h1),
    ] {
        verify_rectangle(oracle, q, depth, cfg, out)?;
    }
    Ok(())
}

/// Corner-fits a rectangle, keeps it if its center passes the accuracy
/// check, and otherwise splits it into quadrants. Rectangles with a
/// metastable corner are dropped: that area hugs the boundary already
/// covered by triangles within `k_th`.
fn verify_rectangle(
    oracle: &dyn DelayOracle,
    (s0, s1, h0, h1): (f64, f64, f64, f64),
    depth: usize,
    cfg: &CharConfig,
    out: &mut Vec<Polygon>,
) -> Result<(), CharError> {
    if s1 - s0 < GEOM_EPS || h1 - h0 < GEOM_EPS {
        return Ok(());
    }
    let mut samples = Vec::with_capacity(4);
    for (s, h) in [(s0, h0), (s1, h0), (s0, h1), (s1, h1)] {
        let point = SlackPoint::new(s, h);
        match oracle.query(point)? {
            OracleResponse::Valid { clock_to_q } => samples.push(DelaySample {
                point,
                response: OracleResponse::Valid { clock_to_q },
            }),
            OracleResponse::Metastable => return Ok(()),
        }
    }
    let plane = fit_plane(&samples)?;
    let center = SlackPoint::new(0.5 * (s0 + s1), 0.5 * (h0 + h1));
    let err = match oracle.query(center)? {
        OracleResponse::Valid { clock_to_q } => (plane.value(center) - clock_to_q).abs(),
        OracleResponse::Metastable => f64::INFINITY,
    };
    if err <= CENTER_MARGIN * cfg.d_th {
        out.push(rectangle((s0, s1, h0, h1), plane));
    } else if depth < cfg.max_split_depth {
        split_into_quadrants(oracle, (s0, s1, h0, h1), depth + 1, cfg, out)?;
    }
    // At the depth limit an inaccurate rectangle is dropped rather than kept.
    Ok(())
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

/// Repeatedly merges edge-adjacent, extent-aligned rectangle pairs (right
/// neighbor first, then upper) whose merged plane still passes the center
/// check. Runs to a fixpoint.
pub fn merge_rectangles(
    oracle: &dyn DelayOracle,
    rects: Vec<Polygon>,
    cfg: &CharConfig,
) -> Result<Vec<Polygon>, CharError> {
    let mut list = rects;
    loop {
        list.sort_by(|a, b| {
            (a.h_l, a.s_l, a.h_u, a.s_u)
                .partial_cmp(&(b.h_l, b.s_l, b.h_u, b.s_u))
                .unwrap()
        });
        let mut merged: Option<(usize, usize, Polygon)> = None;
        'scan: for i in 0..list.len() {
            let a = &list[i];
            let right = list.iter().position(|b| {
                close(b.s_l, a.s_u) && close(b.h_l, a.h_l) && close(b.h_u, a.h_u)
            });
            let upper = list.iter().position(|b| {
                close(b.h_l, a.h_u) && close(b.s_l, a.s_l) && close(b.s_u, a.s_u)
            });
            for j in [right, upper].into_iter().flatten() {
                let b = &list[j];
                let bounds = (a.s_l, a.s_u.max(b.s_u), a.h_l, a.h_u.max(b.h_u));
                if let Some(poly) = try_merge(oracle, bounds, cfg)? {
                    merged = Some((i, j, poly));
                    break 'scan;
                }
            }
        }
        match merged {
            Some((i, j, poly)) => {
                list.remove(i.max(j));
                list.remove(i.min(j));
                list.push(poly);
            }
            None => break,
        }
    }
    Ok(list)
}

fn try_merge(
    oracle: &dyn DelayOracle,
    (s0, s1, h0, h1): (f64, f64, f64, f64),
    cfg: &CharConfig,
) -> Result<Option<Polygon>, CharError> {
    let mut samples = Vec::with_capacity(4);
    for (s, h) in [(s0, h0), (s1, h0), (s0, h1), (s1, h1)] {
        let point = SlackPoint::new(s, h);
        match oracle.query(point)? {
            OracleResponse::Valid { clock_to_q } => samples.push(DelaySample {
                point,
                response: OracleResponse::Valid { clock_to_q },
            }),
            OracleResponse::Metastable => return Ok(None),
        }
    }
    let plane = fit_plane(&samples)?;
    let center = SlackPoint::new(0.5 * (s0 + s1), 0.5 * (h0 + h1));
    match oracle.query(center)? {
        OracleResponse::Valid { clock_to_q }
            if (plane.value(center) - clock_to_q).abs() <= CENTER_MARGIN * cfg.d_th =>
        {
            Ok(Some(rectangle((s0, s1, h0, h1), plane)))
        }
        _ => Ok(None),
    }
}

/// Runs the full characterization pipeline and assembles the model.
pub fn characterize(
    oracle: &dyn DelayOracle,
    cfg: &CharConfig,
) -> Result<PiecewiseDelayModel, CharError> {
    cfg.validate()?;
    if cfg.anchor_slack > oracle.domain_max() + GEOM_EPS {
        return Err(CharError::InvalidConfig(format!(
            "anchor_slack {} outside the oracle domain {}",
            cfg.anchor_slack,
            oracle.domain_max()
        )));
    }
    let cache = CachingOracle::new(oracle);
    let o: &dyn DelayOracle = &cache;
    let g = SlackPoint::new(cfg.anchor_slack, cfg.anchor_slack);
    let f_lower = require_valid(o, g, "stable anchor")?;

    let a = find_axis_anchor(o, Axis::Hold, cfg)?;
    let b = find_axis_anchor(o, Axis::Setup, cfg)?;
    let triangles = if a.hold == 0.0 && b.setup == 0.0 {
        // No metastable wall inside the domain.
        Vec::new()
    } else {
        let segments = refine_boundary(o, a, b, cfg)?;
        build_boundary_triangles(o, &segments, cfg)?
    };

    let h_corner = find_stable_corner(o, cfg)?;
    let rects = build_rectangles(o, &triangles, h_corner, cfg)?;
    let rects = merge_rectangles(o, rects, cfg)?;

    let mut polygons = triangles;
    polygons.extend(rects);
    PiecewiseDelayModel::from_polygons(
        polygons,
        f_lower,
        o.metastable_threshold(),
        cfg.d_th,
        cfg.k_th,
        cache.query_count(),
    )
    .map_err(CharError::Failure)
}

/// Model-accuracy report from a dense grid sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub grid_resolution: f64,
    /// Largest error of the best covering polygon over covered valid points.
    pub max_abs_error: f64,
    /// Fraction of valid grid points covered by at least one polygon.
    pub coverage_fraction: f64,
    pub worst_point: SlackPoint,
}

/// Sweeps a grid over the model's extremes and compares the best covering
/// polygon against the oracle at every valid point.
pub fn validate_model(
    model: &PiecewiseDelayModel,
    oracle: &dyn DelayOracle,
    grid_resolution: f64,
) -> Result<ValidationReport, CharError> {
    assert!(grid_resolution > 0.0, "grid resolution must be positive");
    let mut max_err = 0.0f64;
    let mut worst = SlackPoint::new(model.s_min, model.h_min);
    let mut valid_points = 0u64;
    let mut covered_points = 0u64;
    let domain = oracle.domain_max();
    let mut s = model.s_min;
    while s <= model.s_max + GEOM_EPS {
        let mut h = model.h_min;
        while h <= model.h_max + GEOM_EPS {
            let point = SlackPoint::new(s.min(domain), h.min(domain));
            if let OracleResponse::Valid { clock_to_q } = oracle.query(point)? {
                valid_points += 1;
                if let Some(err) = model.best_error(point, clock_to_q) {
                    covered_points += 1;
                    if err > max_err {
                        max_err = err;
                        worst = point;
                    }
                }
            }
            h += grid_resolution;
        }
        s += grid_resolution;
    }
    Ok(ValidationReport {
        grid_resolution,
        max_abs_error: max_err,
        coverage_fraction: if valid_points == 0 {
            0.0
        } else {
            covered_points as f64 / valid_points as f64
        },
        worst_point: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::OracleError;
    use crate::oracle::{analytic_delay, AnalyticOracle, AnalyticParams};

    fn ref_oracle() -> AnalyticOracle {
        AnalyticOracle::new(AnalyticParams::default()).unwrap()
    }

    /// Delay falls linearly toward the plateau: the boundary is the straight
    /// line s + h = 100.
    struct LinearOracle;

    impl DelayOracle for LinearOracle {
        fn query(&self, point: SlackPoint) -> Result<OracleResponse, OracleError> {
            if point.setup < 0.0 || point.hold < 0.0 || point.setup > 300.0 || point.hold > 300.0 {
                return Err(OracleError::OutOfDomain { point, domain: 300.0 });
            }
            let d = 250.0 - 0.5 * point.setup - 0.5 * point.hold;
            if d > 200.0 {
                Ok(OracleResponse::Metastable)
            } else {
                Ok(OracleResponse::Valid { clock_to_q: d.max(1.0) })
            }
        }
        fn domain_max(&self) -> f64 {
            300.0
        }
        fn metastable_threshold(&self) -> f64 {
            200.0
        }
    }

    struct ConstantOracle;

    impl DelayOracle for ConstantOracle {
        fn query(&self, point: SlackPoint) -> Result<OracleResponse, OracleError> {
            if point.setup < 0.0 || point.hold < 0.0 || point.setup > 300.0 || point.hold > 300.0 {
                return Err(OracleError::OutOfDomain { point, domain: 300.0 });
            }
            Ok(OracleResponse::Valid { clock_to_q: 100.0 })
        }
        fn domain_max(&self) -> f64 {
            300.0
        }
        fn metastable_threshold(&self) -> f64 {
            200.0
        }
    }

    fn sample(s: f64, h: f64, d: f64) -> DelaySample {
        DelaySample {
            point: SlackPoint::new(s, h),
            response: OracleResponse::Valid { clock_to_q: d },
        }
    }

    #[test]
    fn fit_plane_flat() {
        let p = fit_plane(&[
            sample(0.0, 0.0, 100.0),
            sample(10.0, 0.0, 100.0),
            sample(0.0, 10.0, 100.0),
            sample(10.0, 10.0, 100.0),
        ])
        .unwrap();
        assert_eq!(p, PlaneCoefficients { c: 100.0, c_s: 0.0, c_h: 0.0 });
    }

    #[test]
    fn fit_plane_drops_smallest_corner() {
        let p = fit_plane(&[
            sample(20.0, 20.0, 120.0),
            sample(40.0, 20.0, 110.0),
            sample(20.0, 40.0, 110.0),
            sample(40.0, 40.0, 100.0),
        ])
        .unwrap();
        assert!((p.c - 140.0).abs() < 1e-9);
        assert!((p.c_s + 0.5).abs() < 1e-12);
        assert!((p.c_h + 0.5).abs() < 1e-12);
    }

    #[test]
    fn fit_plane_three_points() {
        let p = fit_plane(&[
            sample(10.0, 10.0, 150.0),
            sample(30.0, 10.0, 120.0),
            sample(10.0, 30.0, 120.0),
        ])
        .unwrap();
        assert!((p.c - 180.0).abs() < 1e-9);
        assert!((p.c_s + 1.5).abs() < 1e-12);
        assert!((p.c_h + 1.5).abs() < 1e-12);
    }

    #[test]
    fn fit_plane_collinear_fails() {
        let err = fit_plane(&[
            sample(0.0, 0.0, 1.0),
            sample(1.0, 1.0, 2.0),
            sample(2.0, 2.0, 3.0),
        ]);
        assert!(matches!(err, Err(CharError::DegenerateFit)));
    }

    #[test]
    fn axis_anchor_on_reference_surface() {
        let o = ref_oracle();
        let cfg = CharConfig::default();
        let a = find_axis_anchor(&o, Axis::Hold, &cfg).unwrap();
        assert_eq!(a.setup, 150.0);
        let expected = 8.0 * 10.0f64.ln();
        assert!(a.hold >= expected - 1e-9 && a.hold <= expected + cfg.search_resolution + 1e-9,
            "anchor hold {} vs {}", a.hold, expected);
        let b = find_axis_anchor(&o, Axis::Setup, &cfg).unwrap();
        assert!((b.setup - a.hold).abs() < 2.0 * cfg.search_resolution);
    }

    #[test]
    fn axis_anchor_constant_oracle_hits_zero() {
        let cfg = CharConfig::default();
        let a = find_axis_anchor(&ConstantOracle, Axis::Hold, &cfg).unwrap();
        assert_eq!(a.hold, 0.0);
    }

    #[test]
    fn straight_boundary_needs_one_segment() {
        let cfg = CharConfig { anchor_slack: 60.0, ..CharConfig::default() };
        let o = LinearOracle;
        let a = find_axis_anchor(&o, Axis::Hold, &cfg).unwrap();
        let b = find_axis_anchor(&o, Axis::Setup, &cfg).unwrap();
        let segments = refine_boundary(&o, a, b, &cfg).unwrap();
        assert_eq!(segments.len(), 1, "straight boundary must not split");
    }

    #[test]
    fn tighter_k_th_never_coarsens_the_chain() {
        let o = ref_oracle();
        let coarse = CharConfig { k_th: 20.0, ..CharConfig::default() };
        let fine = CharConfig { k_th: 2.0, ..CharConfig::default() };
        let a = find_axis_anchor(&o, Axis::Hold, &coarse).unwrap();
        let b = find_axis_anchor(&o, Axis::Setup, &coarse).unwrap();
        let n_coarse = refine_boundary(&o, a, b, &coarse).unwrap().len();
        let n_fine = refine_boundary(&o, a, b, &fine).unwrap().len();
        assert!(n_fine >= n_coarse, "{n_fine} < {n_coarse}");
    }

    #[test]
    fn boundary_endpoints_flip_validity_within_resolution() {
        let o = ref_oracle();
        let cfg = CharConfig::default();
        let a = find_axis_anchor(&o, Axis::Hold, &cfg).unwrap();
        let b = find_axis_anchor(&o, Axis::Setup, &cfg).unwrap();
        let segments = refine_boundary(&o, a, b, &cfg).unwrap();
        let r = cfg.search_resolution;
        for seg in &segments {
            for pt in [seg.start, seg.end] {
                assert!(!o.query(pt).unwrap().is_metastable(), "endpoint {pt} not valid");
                let inward = SlackPoint::new((pt.setup - 2.0 * r).max(0.0), (pt.hold - 2.0 * r).max(0.0));
                assert!(
                    o.query(inward).unwrap().is_metastable(),
                    "endpoint {pt} further than {r} from the boundary"
                );
            }
        }
    }

    #[test]
    fn planar_surface_gives_one_exact_triangle() {
        let cfg = CharConfig { anchor_slack: 60.0, ..CharConfig::default() };
        let o = LinearOracle;
        let a = find_axis_anchor(&o, Axis::Hold, &cfg).unwrap();
        let b = find_axis_anchor(&o, Axis::Setup, &cfg).unwrap();
        let segments = refine_boundary(&o, a, b, &cfg).unwrap();
        let tris = build_boundary_triangles(&o, &segments, &cfg).unwrap();
        assert_eq!(tris.len(), 1);
        let t = &tris[0];
        // Right-angle corner is the componentwise max of the endpoints.
        assert!((t.s_u - 60.0).abs() < 2.0 * cfg.search_resolution);
        assert!((t.h_u - 60.0).abs() < 2.0 * cfg.search_resolution);
        assert!((t.plane.c_s + 0.5).abs() < 1e-6);
        assert!((t.plane.c_h + 0.5).abs() < 1e-6);
        let hyp = t.hypotenuse.unwrap();
        assert!(hyp.c_ts < 0.0);
        assert!(hyp.c_t > 0.0);
    }

    #[test]
    fn reference_triangles_pass_their_midpoint_check() {
        let o = ref_oracle();
        let cfg = CharConfig::default();
        let a = find_axis_anchor(&o, Axis::Hold, &cfg).unwrap();
        let b = find_axis_anchor(&o, Axis::Setup, &cfg).unwrap();
        let segments = refine_boundary(&o, a, b, &cfg).unwrap();
        let tris = build_boundary_triangles(&o, &segments, &cfg).unwrap();
        assert!(!tris.is_empty());
        for t in &tris {
            let p = SlackPoint::new(t.s_l, t.hypotenuse.unwrap().c_t + t.hypotenuse.unwrap().c_ts * t.s_l);
            let q = SlackPoint::new(t.s_u, t.hypotenuse.unwrap().c_t + t.hypotenuse.unwrap().c_ts * t.s_u);
            let mid = SlackPoint::new(0.5 * (p.setup + q.setup), 0.5 * (p.hold + q.hold));
            let d = o.query(mid).unwrap().valid_delay().expect("midpoint valid");
            assert!(
                (t.plane.value(mid) - d).abs() <= cfg.d_th + 1e-9,
                "triangle {} fails its own midpoint check",
                t.id
            );
        }
    }

    #[test]
    fn stable_corner_on_reference_surface() {
        let o = ref_oracle();
        let cfg = CharConfig::default();
        let h = find_stable_corner(&o, &cfg).unwrap();
        assert_eq!(h.setup, h.hold);
        // The true crossing of amp*(e^{-s/tau}) pairs over epsilon: 8 ln 4000.
        let crossing = 8.0 * 4000.0f64.ln();
        assert!(
            (h.setup - crossing).abs() <= cfg.stable_step,
            "corner {} vs crossing {}",
            h.setup,
            crossing
        );
        // One more step would leave the plateau.
        let d_next = analytic_delay(
            SlackPoint::new(h.setup - cfg.stable_step, h.hold - cfg.stable_step),
            &AnalyticParams::default(),
        );
        let f_lower = analytic_delay(SlackPoint::new(150.0, 150.0), &AnalyticParams::default());
        assert!(d_next > f_lower + cfg.stable_epsilon);
    }

    #[test]
    fn stable_corner_walks_to_origin_on_constant_surface() {
        let h = find_stable_corner(&ConstantOracle, &CharConfig::default()).unwrap();
        assert_eq!(h, SlackPoint::new(0.0, 0.0));
    }

    #[test]
    fn larger_epsilon_walks_closer_to_origin() {
        let o = ref_oracle();
        let tight = find_stable_corner(&o, &CharConfig::default()).unwrap();
        let loose = find_stable_corner(
            &o,
            &CharConfig { stable_epsilon: 50.0, ..CharConfig::default() },
        )
        .unwrap();
        assert!(loose.setup < tight.setup);
    }

    #[test]
    fn bilinear_cell_center_is_exact() {
        use crate::oracle::GridOracle;
        let samples = vec![
            sample(0.0, 0.0, 120.0),
            sample(10.0, 0.0, 110.0),
            sample(0.0, 10.0, 110.0),
            sample(10.0, 10.0, 100.0),
        ];
        let g = GridOracle::new(&samples, 200.0).unwrap();
        let mut out = Vec::new();
        let cfg = CharConfig::default();
        verify_rectangle(&g, (0.0, 10.0, 0.0, 10.0), 0, &cfg, &mut out).unwrap();
        assert_eq!(out.len(), 1, "center error 0 must not split");
    }

    #[test]
    fn adjacent_constant_rectangles_merge() {
        let cfg = CharConfig::default();
        let a = rectangle((0.0, 10.0, 0.0, 10.0), PlaneCoefficients::constant(100.0));
        let b = rectangle((10.0, 20.0, 0.0, 10.0), PlaneCoefficients::constant(100.0));
        let merged = merge_rectangles(&ConstantOracle, vec![a, b], &cfg).unwrap();
        assert_eq!(merged.len(), 1);
        assert_eq!((merged[0].s_l, merged[0].s_u), (0.0, 20.0));
    }

    #[test]
    fn non_adjacent_rectangles_stay_apart() {
        let cfg = CharConfig::default();
        let a = rectangle((0.0, 10.0, 0.0, 10.0), PlaneCoefficients::constant(100.0));
        let b = rectangle((15.0, 25.0, 0.0, 10.0), PlaneCoefficients::constant(100.0));
        let merged = merge_rectangles(&ConstantOracle, vec![a, b], &cfg).unwrap();
        assert_eq!(merged.len(), 2);
    }

    #[test]
    fn constant_oracle_characterizes_to_one_rectangle() {
        let model = characterize(&ConstantOracle, &CharConfig::default()).unwrap();
        assert_eq!(model.polygons.len(), 1);
        assert_eq!(model.polygons[0].kind, PolygonKind::Rectangle);
        assert_eq!(model.polygons[0].plane, PlaneCoefficients::constant(100.0));
        assert_eq!((model.s_min, model.s_max), (0.0, 300.0));
    }

    #[test]
    fn characterization_is_deterministic() {
        let o = ref_oracle();
        let cfg = CharConfig::default();
        let m1 = characterize(&o, &cfg).unwrap();
        let m2 = characterize(&o, &cfg).unwrap();
        assert_eq!(
            crate::model::serialize_model(&m1),
            crate::model::serialize_model(&m2)
        );
    }

    #[test]
    fn flat_model_validates_perfectly() {
        let model = characterize(&ConstantOracle, &CharConfig::default()).unwrap();
        let report = validate_model(&model, &ConstantOracle, 10.0).unwrap();
        assert_eq!(report.max_abs_error, 0.0);
        assert_eq!(report.coverage_fraction, 1.0);
    }
}
