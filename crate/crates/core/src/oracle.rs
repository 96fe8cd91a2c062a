//! Clock-to-q delay oracles.
//!
//! The characterizer never looks inside a flip-flop; it only issues point
//! queries through [`DelayOracle`]. Two oracles are provided: an analytic
//! surface standing in for transistor-level simulation, and a grid-backed
//! oracle that replays a recorded dense sweep. A caching wrapper counts how
//! many distinct points were actually "simulated".

use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::fmt;

use crate::error::OracleError;

/// A (setup slack, hold slack) coordinate in picoseconds.
///
/// Setup slack is the distance from the latest input switching to the active
/// clock edge; hold slack is the distance from the edge to the earliest
/// subsequent switching. Both are non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlackPoint {
    pub setup: f64,
    pub hold: f64,
}

impl SlackPoint {
    pub fn new(setup: f64, hold: f64) -> Self {
        Self { setup, hold }
    }

    /// Euclidean distance to another point.
    pub fn distance(&self, other: &SlackPoint) -> f64 {
        let ds = self.setup - other.setup;
        let dh = self.hold - other.hold;
        (ds * ds + dh * dh).sqrt()
    }
}

impl fmt::Display for SlackPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.4}, {:.4})", self.setup, self.hold)
    }
}

/// Result of one delay query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleResponse {
    /// The flip-flop resolves with the given clock-to-q delay in ps.
    Valid { clock_to_q: f64 },
    /// The flip-flop does not resolve below the metastable threshold.
    Metastable,
}

impl OracleResponse {
    pub fn valid_delay(&self) -> Option<f64> {
        match self {
            OracleResponse::Valid { clock_to_q } => Some(*clock_to_q),
            OracleResponse::Metastable => None,
        }
    }

    pub fn is_metastable(&self) -> bool {
        matches!(self, OracleResponse::Metastable)
    }
}

/// One recorded query: a slack coordinate and the oracle's response there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaySample {
    pub point: SlackPoint,
    pub response: OracleResponse,
}

/// Parameters of the built-in analytic delay surface.
///
/// The surface is `d0 + amp_s * exp(-s/tau_s) + amp_h * exp(-h/tau_h)`: a
/// flat plateau at large slacks rising exponentially toward the axes, which
/// reproduces the shape of a simulated flip-flop surface (constant region,
/// monotone rise, metastable wall) while staying jointly convex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticParams {
    /// Stable delay at large slacks, ps.
    pub d0: f64,
    /// Amplitude of the setup-slack exponential, ps.
    pub amp_s: f64,
    /// Amplitude of the hold-slack exponential, ps.
    pub amp_h: f64,
    /// Decay constant along setup slack, ps.
    pub tau_s: f64,
    /// Decay constant along hold slack, ps.
    pub tau_h: f64,
    /// Delay beyond which the flip-flop is treated as metastable, ps.
    pub f_bar: f64,
    /// Largest modeled slack coordinate, ps.
    pub domain_max: f64,
}

impl Default for AnalyticParams {
    /// Reference flip-flop: 100 ps plateau, metastable wall near 18 ps of
    /// slack, threshold at twice the stable delay.
    fn default() -> Self {
        Self {
            d0: 100.0,
            amp_s: 1000.0,
            amp_h: 1000.0,
            tau_s: 8.0,
            tau_h: 8.0,
            f_bar: 200.0,
            domain_max: 300.0,
        }
    }
}

impl AnalyticParams {
    pub fn validate(&self) -> Result<(), OracleError> {
        let mut problems = Vec::new();
        if !(self.d0 > 0.0) {
            problems.push("d0 must be > 0");
        }
        if self.amp_s < 0.0 || self.amp_h < 0.0 {
            problems.push("amplitudes must be >= 0");
        }
        if !(self.tau_s > 0.0) || !(self.tau_h > 0.0) {
            problems.push("decay constants must be > 0");
        }
        if !(self.f_bar > self.d0) {
            problems.push("f_bar must exceed d0");
        }
        if !(self.domain_max > 0.0) {
            problems.push("domain_max must be > 0");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(OracleError::InvalidParams(problems.join("; ")))
        }
    }
}

/// Evaluates the analytic surface at a point. Total on non-negative slacks.
pub fn analytic_delay(point: SlackPoint, params: &AnalyticParams) -> f64 {
    params.d0
        + params.amp_s * (-point.setup / params.tau_s).exp()
        + params.amp_h * (-point.hold / params.tau_h).exp()
}

/// Point-query interface to a clock-to-q delay surface.
///
/// Implementations are pure: identical inputs give identical outputs. They
/// are immutable after construction and safe for concurrent reads.
pub trait DelayOracle {
    /// Queries the delay at a point inside `[0, domain_max]^2`.
    fn query(&self, point: SlackPoint) -> Result<OracleResponse, OracleError>;

    /// Largest slack coordinate the oracle models.
    fn domain_max(&self) -> f64;

    /// Delay threshold beyond which the device is treated as metastable.
    fn metastable_threshold(&self) -> f64;
}

/// Analytic stand-in for a transistor-level simulator.
#[derive(Debug, Clone)]
pub struct AnalyticOracle {
    params: AnalyticParams,
}

impl AnalyticOracle {
    pub fn new(params: AnalyticParams) -> Result<Self, OracleError> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn params(&self) -> &AnalyticParams {
        &self.params
    }
}

impl DelayOracle for AnalyticOracle {
    fn query(&self, point: SlackPoint) -> Result<OracleResponse, OracleError> {
        check_domain(point, self.params.domain_max)?;
        let delay = analytic_delay(point, &self.params);
        if delay > self.params.f_bar {
            Ok(OracleResponse::Metastable)
        } else {
            Ok(OracleResponse::Valid { clock_to_q: delay })
        }
    }

    fn domain_max(&self) -> f64 {
        self.params.domain_max
    }

    fn metastable_threshold(&self) -> f64 {
        self.params.f_bar
    }
}

fn check_domain(point: SlackPoint, domain: f64) -> Result<(), OracleError> {
    let eps = 1e-9;
    if point.setup < -eps
        || point.hold < -eps
        || point.setup > domain + eps
        || point.hold > domain + eps
        || !point.setup.is_finite()
        || !point.hold.is_finite()
    {
        return Err(OracleError::OutOfDomain { point, domain });
    }
    Ok(())
}

/// Replays a recorded sweep: bilinear interpolation over a complete
/// axis-aligned grid of samples.
#[derive(Debug, Clone)]
pub struct GridOracle {
    s_coords: Vec<f64>,
    h_coords: Vec<f64>,
    /// Row-major over (s index, h index); `None` marks a metastable sample.
    cells: Vec<Option<f64>>,
    f_bar: f64,
}

impl GridOracle {
    /// Builds the oracle from samples that must form a complete grid: every
    /// combination of the distinct setup and hold coordinates present.
    pub fn new(samples: &[DelaySample], f_bar: f64) -> Result<Self, OracleError> {
        if samples.is_empty() {
            return Err(OracleError::IncompleteGrid("no samples".into()));
        }
        let mut s_coords: Vec<f64> = samples.iter().map(|s| s.point.setup).collect();
        let mut h_coords: Vec<f64> = samples.iter().map(|s| s.point.hold).collect();
        dedup_coords(&mut s_coords);
        dedup_coords(&mut h_coords);
        let (ns, nh) = (s_coords.len(), h_coords.len());
        if ns < 2 || nh < 2 {
            return Err(OracleError::IncompleteGrid(
                "grid needs at least two distinct coordinates per axis".into(),
            ));
        }
        if samples.len() != ns * nh {
            return Err(OracleError::IncompleteGrid(format!(
                "{} samples but {} x {} = {} grid nodes",
                samples.len(),
                ns,
                nh,
                ns * nh
            )));
        }
        let mut cells: Vec<Option<Option<f64>>> = vec![None; ns * nh];
        for sample in samples {
            let si = find_coord(&s_coords, sample.point.setup).ok_or_else(|| {
                OracleError::IncompleteGrid(format!("stray setup coordinate {}", sample.point.setup))
            })?;
            let hi = find_coord(&h_coords, sample.point.hold).ok_or_else(|| {
                OracleError::IncompleteGrid(format!("stray hold coordinate {}", sample.point.hold))
            })?;
            let slot = &mut cells[si * nh + hi];
            if slot.is_some() {
                return Err(OracleError::IncompleteGrid(format!(
                    "duplicate sample at {}",
                    sample.point
                )));
            }
            *slot = Some(sample.response.valid_delay());
        }
        let cells = cells
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                c.ok_or_else(|| {
                    let (si, hi) = (i / nh, i % nh);
                    OracleError::IncompleteGrid(format!(
                        "missing sample at (s={}, h={})",
                        s_coords[si], h_coords[hi]
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            s_coords,
            h_coords,
            cells,
            f_bar,
        })
    }

    fn node(&self, si: usize, hi: usize) -> Option<f64> {
        self.cells[si * self.h_coords.len() + hi]
    }
}

const NODE_SNAP: f64 = 1e-9;

fn dedup_coords(coords: &mut Vec<f64>) {
    coords.sort_by(|a, b| a.partial_cmp(b).unwrap());
    coords.dedup_by(|a, b| (*a - *b).abs() <= NODE_SNAP);
}

fn find_coord(coords: &[f64], value: f64) -> Option<usize> {
    let idx = coords.partition_point(|c| *c < value - NODE_SNAP);
    if idx < coords.len() && (coords[idx] - value).abs() <= NODE_SNAP {
        Some(idx)
    } else {
        None
    }
}

/// Index of the cell `[coords[i], coords[i+1]]` containing `value`.
fn locate_cell(coords: &[f64], value: f64) -> usize {
    let idx = coords.partition_point(|c| *c <= value);
    idx.clamp(1, coords.len() - 1) - 1
}

impl DelayOracle for GridOracle {
    fn query(&self, point: SlackPoint) -> Result<OracleResponse, OracleError> {
        let domain = self.domain_max();
        check_domain(point, domain)?;
        let s0 = *self.s_coords.first().unwrap();
        let h0 = *self.h_coords.first().unwrap();
        if point.setup < s0 - NODE_SNAP || point.hold < h0 - NODE_SNAP {
            return Err(OracleError::OutOfDomain { point, domain });
        }
        // Exact grid nodes return their recorded response untouched.
        if let (Some(si), Some(hi)) = (
            find_coord(&self.s_coords, point.setup),
            find_coord(&self.h_coords, point.hold),
        ) {
            return Ok(match self.node(si, hi) {
                Some(d) => OracleResponse::Valid { clock_to_q: d },
                None => OracleResponse::Metastable,
            });
        }
        let si = locate_cell(&self.s_coords, point.setup);
        let hi = locate_cell(&self.h_coords, point.hold);
        let corners = [
            self.node(si, hi),
            self.node(si + 1, hi),
            self.node(si, hi + 1),
            self.node(si + 1, hi + 1),
        ];
        if corners.iter().any(|c| c.is_none()) {
            return Ok(OracleResponse::Metastable);
        }
        let (sa, sb) = (self.s_coords[si], self.s_coords[si + 1]);
        let (ha, hb) = (self.h_coords[hi], self.h_coords[hi + 1]);
        let ts = (point.setup - sa) / (sb - sa);
        let th = (point.hold - ha) / (hb - ha);
        let d = corners[0].unwrap() * (1.0 - ts) * (1.0 - th)
            + corners[1].unwrap() * ts * (1.0 - th)
            + corners[2].unwrap() * (1.0 - ts) * th
            + corners[3].unwrap() * ts * th;
        if d > self.f_bar {
            Ok(OracleResponse::Metastable)
        } else {
            Ok(OracleResponse::Valid { clock_to_q: d })
        }
    }

    fn domain_max(&self) -> f64 {
        self.s_coords
            .last()
            .unwrap()
            .max(*self.h_coords.last().unwrap())
    }

    fn metastable_threshold(&self) -> f64 {
        self.f_bar
    }
}

/// Parses a dense-sweep dump: one `s h delay` or `s h META` line per sample,
/// whitespace-separated, picoseconds as decimals.
pub fn parse_sweep_dump(text: &str) -> Result<Vec<DelaySample>, OracleError> {
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(OracleError::DumpFormat {
                line,
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let parse = |s: &str, what: &str| {
            s.parse::<f64>().map_err(|_| OracleError::DumpFormat {
                line,
                message: format!("bad {what} '{s}'"),
            })
        };
        let setup = parse(fields[0], "setup slack")?;
        let hold = parse(fields[1], "hold slack")?;
        let response = if fields[2] == "META" {
            OracleResponse::Metastable
        } else {
            OracleResponse::Valid {
                clock_to_q: parse(fields[2], "delay")?,
            }
        };
        samples.push(DelaySample {
            point: SlackPoint::new(setup, hold),
            response,
        });
    }
    Ok(samples)
}

/// Writes samples in the dense-sweep dump format accepted by
/// [`parse_sweep_dump`].
pub fn write_sweep_dump(samples: &[DelaySample]) -> String {
    let mut out = String::new();
    for s in samples {
        match s.response {
            OracleResponse::Valid { clock_to_q } => {
                out.push_str(&format!("{} {} {}\n", s.point.setup, s.point.hold, clock_to_q))
            }
            OracleResponse::Metastable => {
                out.push_str(&format!("{} {} META\n", s.point.setup, s.point.hold))
            }
        }
    }
    out
}

/// Caching wrapper that deduplicates queries and counts how many distinct
/// points reached the underlying oracle.
///
/// Keys are rounded to 1e-6 ps, so re-queries from binary searches and shared
/// polygon corners are free. Use one wrapper per worker when parallelizing.
pub struct CachingOracle<'a> {
    inner: &'a dyn DelayOracle,
    cache: RefCell<HashMap<(i64, i64), Result<OracleResponse, OracleError>>>,
    misses: Cell<u64>,
}

impl<'a> CachingOracle<'a> {
    pub fn new(inner: &'a dyn DelayOracle) -> Self {
        Self {
            inner,
            cache: RefCell::new(HashMap::new()),
            misses: Cell::new(0),
        }
    }

    /// Number of distinct points forwarded to the underlying oracle.
    pub fn query_count(&self) -> u64 {
        self.misses.get()
    }

    fn key(point: SlackPoint) -> (i64, i64) {
        ((point.setup * 1e6).round() as i64, (point.hold * 1e6).round() as i64)
    }
}

impl DelayOracle for CachingOracle<'_> {
    fn query(&self, point: SlackPoint) -> Result<OracleResponse, OracleError> {
        let key = Self::key(point);
        if let Some(hit) = self.cache.borrow().get(&key) {
            return hit.clone();
        }
        let response = self.inner.query(point);
        self.misses.set(self.misses.get() + 1);
        self.cache.borrow_mut().insert(key, response.clone());
        response
    }

    fn domain_max(&self) -> f64 {
        self.inner.domain_max()
    }

    fn metastable_threshold(&self) -> f64 {
        self.inner.metastable_threshold()
    }
}
