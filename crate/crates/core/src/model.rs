//! The piecewise-linear delay model: polygons and their serialized form.

use serde::{Deserialize, Serialize};

use crate::error::ParseError;
use crate::oracle::SlackPoint;

/// Coefficients of one linear delay plane: `delay(s, h) = c + c_s*s + c_h*h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneCoefficients {
    /// Constant term, ps.
    pub c: f64,
    /// Slope along setup slack, ps per ps. Non-positive on monotone surfaces.
    pub c_s: f64,
    /// Slope along hold slack, ps per ps.
    pub c_h: f64,
}

impl PlaneCoefficients {
    pub fn constant(c: f64) -> Self {
        Self { c, c_s: 0.0, c_h: 0.0 }
    }

    pub fn value(&self, point: SlackPoint) -> f64 {
        self.c + self.c_s * point.setup + self.c_h * point.hold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolygonKind {
    Triangle,
    Rectangle,
}

/// Hypotenuse line of a boundary triangle: the region keeps `h >= c_t + c_ts*s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hypotenuse {
    /// Intercept, ps. Positive for first-quadrant boundary triangles.
    pub c_t: f64,
    /// Slope, dimensionless. Negative: the boundary falls to the right.
    pub c_ts: f64,
}

/// One linear delay plane valid over a rectangular or triangular slack region.
///
/// The region is the box `[s_l, s_u] x [h_l, h_u]`, intersected for triangles
/// with the half-plane above the hypotenuse.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub id: usize,
    pub kind: PolygonKind,
    pub s_l: f64,
    pub s_u: f64,
    pub h_l: f64,
    pub h_u: f64,
    pub plane: PlaneCoefficients,
    pub hypotenuse: Option<Hypotenuse>,
}

pub(crate) const GEOM_EPS: f64 = 1e-9;

impl Polygon {
    /// Whether a point lies in the polygon's region (hypotenuse included).
    pub fn contains(&self, point: SlackPoint) -> bool {
        if point.setup < self.s_l - GEOM_EPS
            || point.setup > self.s_u + GEOM_EPS
            || point.hold < self.h_l - GEOM_EPS
            || point.hold > self.h_u + GEOM_EPS
        {
            return false;
        }
        match &self.hypotenuse {
            Some(hyp) => point.hold >= hyp.c_t + hyp.c_ts * point.setup - GEOM_EPS,
            None => true,
        }
    }

    /// Corner points of the region. For triangles these are the two
    /// hypotenuse endpoints and the right-angle corner.
    pub fn vertices(&self) -> Vec<SlackPoint> {
        match self.kind {
            PolygonKind::Rectangle => vec![
                SlackPoint::new(self.s_l, self.h_l),
                SlackPoint::new(self.s_u, self.h_l),
                SlackPoint::new(self.s_l, self.h_u),
                SlackPoint::new(self.s_u, self.h_u),
            ],
            PolygonKind::Triangle => vec![
                SlackPoint::new(self.s_l, self.h_u),
                SlackPoint::new(self.s_u, self.h_l),
                SlackPoint::new(self.s_u, self.h_u),
            ],
        }
    }

    /// Range of the plane over the region (attained at vertices).
    pub fn plane_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in self.vertices() {
            let d = self.plane.value(v);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (lo, hi)
    }

    pub(crate) fn validate(&self, index: usize) -> Result<(), String> {
        if !(self.s_l >= 0.0 && self.s_l < self.s_u) || !(self.h_l >= 0.0 && self.h_l < self.h_u) {
            return Err(format!("polygon {index}: bad bounds"));
        }
        match (self.kind, &self.hypotenuse) {
            (PolygonKind::Triangle, Some(h)) => {
                if h.c_ts >= 0.0 {
                    return Err(format!("polygon {index}: triangle hypotenuse must slope down"));
                }
            }
            (PolygonKind::Triangle, None) => {
                return Err(format!("polygon {index}: triangle without hypotenuse"));
            }
            (PolygonKind::Rectangle, Some(_)) => {
                return Err(format!("polygon {index}: rectangle with hypotenuse"));
            }
            (PolygonKind::Rectangle, None) => {}
        }
        for v in [self.plane.c, self.plane.c_s, self.plane.c_h] {
            if !v.is_finite() {
                return Err(format!("polygon {index}: non-finite plane"));
            }
        }
        Ok(())
    }
}

/// A piecewise-linear clock-to-q delay model: a set of polygons plus the
/// stable and metastable delay bounds. Polygons may overlap; each one is
/// individually accurate to `d_th`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseDelayModel {
    pub polygons: Vec<Polygon>,
    /// Stable (plateau) delay, ps.
    pub f_lower: f64,
    /// Metastable threshold, ps.
    pub f_upper: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Delay accuracy the model was built to, ps.
    pub d_th: f64,
    /// Boundary distance tolerance the model was built to, ps.
    pub k_th: f64,
    /// Distinct oracle points consumed while building the model.
    pub query_count: u64,
}

impl PiecewiseDelayModel {
    /// Assembles a model from polygons, assigning ids and extremes.
    pub fn from_polygons(
        mut polygons: Vec<Polygon>,
        f_lower: f64,
        f_upper: f64,
        d_th: f64,
        k_th: f64,
        query_count: u64,
    ) -> Result<Self, String> {
        if polygons.is_empty() {
            return Err("model must contain at least one polygon".into());
        }
        if !(f_lower < f_upper) {
            return Err("stable delay must be below the metastable threshold".into());
        }
        for (i, p) in polygons.iter_mut().enumerate() {
            p.id = i;
            p.validate(i)?;
        }
        let mut model = Self {
            polygons,
            f_lower,
            f_upper,
            s_min: 0.0,
            s_max: 0.0,
            h_min: 0.0,
            h_max: 0.0,
            d_th,
            k_th,
            query_count,
        };
        model.recompute_extremes();
        Ok(model)
    }

    fn recompute_extremes(&mut self) {
        self.s_min = self.polygons.iter().map(|p| p.s_l).fold(f64::INFINITY, f64::min);
        self.s_max = self.polygons.iter().map(|p| p.s_u).fold(f64::NEG_INFINITY, f64::max);
        self.h_min = self.polygons.iter().map(|p| p.h_l).fold(f64::INFINITY, f64::min);
        self.h_max = self.polygons.iter().map(|p| p.h_u).fold(f64::NEG_INFINITY, f64::max);
    }

    /// Polygons whose region covers the point.
    pub fn covering<'a>(&'a self, point: SlackPoint) -> impl Iterator<Item = &'a Polygon> {
        self.polygons.iter().filter(move |p| p.contains(point))
    }

    /// Smallest absolute plane error among covering polygons against a known
    /// true delay. `None` when no polygon covers the point.
    pub fn best_error(&self, point: SlackPoint, true_delay: f64) -> Option<f64> {
        self.covering(point)
            .map(|p| (p.plane.value(point) - true_delay).abs())
            .fold(None, |acc, e| Some(acc.map_or(e, |a: f64| a.min(e))))
    }
}

// --- serialized form -------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    stable_delay: f64,
    metastable_threshold: f64,
    d_th: f64,
    k_th: f64,
    polygons: Vec<PolygonFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    query_count: Option<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolygonFile {
    kind: String,
    s_l: f64,
    s_u: f64,
    h_l: f64,
    h_u: f64,
    c: f64,
    c_s: f64,
    c_h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c_ts: Option<f64>,
}

/// Serializes a model to its JSON file form. Deterministic: identical models
/// produce byte-identical text.
pub fn serialize_model(model: &PiecewiseDelayModel) -> String {
    let file = ModelFile {
        stable_delay: model.f_lower,
        metastable_threshold: model.f_upper,
        d_th: model.d_th,
        k_th: model.k_th,
        query_count: Some(model.query_count),
        polygons: model
            .polygons
            .iter()
            .map(|p| PolygonFile {
                kind: match p.kind {
                    PolygonKind::Triangle => "triangle".into(),
                    PolygonKind::Rectangle => "rectangle".into(),
                },
                s_l: p.s_l,
                s_u: p.s_u,
                h_l: p.h_l,
                h_u: p.h_u,
                c: p.plane.c,
                c_s: p.plane.c_s,
                c_h: p.plane.c_h,
                c_t: p.hypotenuse.map(|h| h.c_t),
                c_ts: p.hypotenuse.map(|h| h.c_ts),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("model serialization cannot fail");
    text.push('\n');
    text
}

/// Parses a model file, rejecting unknown keys and invalid polygons.
pub fn parse_model(text: &str) -> Result<PiecewiseDelayModel, ParseError> {
    let file: ModelFile = serde_json::from_str(text)
        .map_err(|e| ParseError::new(e.line(), e.to_string()))?;
    let mut polygons = Vec::with_capacity(file.polygons.len());
    for (i, p) in file.polygons.iter().enumerate() {
        let kind = match p.kind.as_str() {
            "triangle" => PolygonKind::Triangle,
            "rectangle" => PolygonKind::Rectangle,
            other => {
                return Err(ParseError::new(0, format!("polygon {i}: unknown kind '{other}'")))
            }
        };
        let hypotenuse = match (kind, p.c_t, p.c_ts) {
            (PolygonKind::Triangle, Some(c_t), Some(c_ts)) => Some(Hypotenuse { c_t, c_ts }),
            (PolygonKind::Triangle, _, _) => {
                return Err(ParseError::new(0, format!("polygon {i}: triangle needs c_t and c_ts")))
            }
            (PolygonKind::Rectangle, None, None) => None,
            (PolygonKind::Rectangle, _, _) => {
                return Err(ParseError::new(0, format!("polygon {i}: rectangle must not carry c_t/c_ts")))
            }
        };
        polygons.push(Polygon {
            id: i,
            kind,
            s_l: p.s_l,
            s_u: p.s_u,
            h_l: p.h_l,
            h_u: p.h_u,
            plane: PlaneCoefficients { c: p.c, c_s: p.c_s, c_h: p.c_h },
            hypotenuse,
        });
    }
    PiecewiseDelayModel::from_polygons(
        polygons,
        file.stable_delay,
        file.metastable_threshold,
        file.d_th,
        file.k_th,
        file.query_count.unwrap_or(0),
    )
    .map_err(|m| ParseError::new(0, m))
}

#[cfg(test)]
mod tests {
    use super::*;

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

    fn tri() -> Polygon {
        Polygon {
            id: 0,
            kind: PolygonKind::Triangle,
            s_l: 10.0,
            s_u: 30.0,
            h_l: 10.0,
            h_u: 30.0,
            plane: PlaneCoefficients { c: 180.0, c_s: -1.5, c_h: -1.5 },
            hypotenuse: Some(Hypotenuse { c_t: 40.0, c_ts: -1.0 }),
        }
    }

    #[test]
    fn rectangle_containment() {
        let r = rect(10.0, 20.0, 30.0, 40.0, 100.0);
        assert!(r.contains(SlackPoint::new(15.0, 35.0)));
        assert!(r.contains(SlackPoint::new(10.0, 30.0)));
        assert!(!r.contains(SlackPoint::new(9.9, 35.0)));
        assert!(!r.contains(SlackPoint::new(15.0, 41.0)));
    }

    #[test]
    fn triangle_respects_hypotenuse() {
        let t = tri();
        // Above the line h = 40 - s.
        assert!(t.contains(SlackPoint::new(25.0, 25.0)));
        assert!(t.contains(SlackPoint::new(10.0, 30.0)));
        // Below the line but inside the box.
        assert!(!t.contains(SlackPoint::new(12.0, 12.0)));
    }

    #[test]
    fn model_round_trip() {
        let model = PiecewiseDelayModel::from_polygons(
            vec![rect(0.0, 50.0, 0.0, 50.0, 100.0), tri()],
            100.0,
            200.0,
            2.0,
            5.0,
            123,
        )
        .unwrap();
        let text = serialize_model(&model);
        let parsed = parse_model(&text).unwrap();
        assert_eq!(model, parsed);
        // Determinism: serialization is byte-stable.
        assert_eq!(text, serialize_model(&parsed));
    }

    #[test]
    fn empty_model_rejected() {
        let err = parse_model(
            r#"{"stable_delay":100.0,"metastable_threshold":200.0,"d_th":2.0,"k_th":5.0,"polygons":[]}"#,
        )
        .unwrap_err();
        assert!(err.message.contains("at least one polygon"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_model(
            r#"{"stable_delay":100.0,"metastable_threshold":200.0,"d_th":2.0,"k_th":5.0,"polygons":[],"frobnicate":1}"#,
        )
        .unwrap_err();
        assert!(err.message.contains("unknown field"), "{err}");
    }

    #[test]
    fn plane_range_over_triangle_vertices() {
        let t = tri();
        let (lo, hi) = t.plane_range();
        // Vertices: (10,30), (30,10), (30,30).
        assert!((hi - 120.0).abs() < 1e-12);
        assert!((lo - 90.0).abs() < 1e-12);
    }
}
