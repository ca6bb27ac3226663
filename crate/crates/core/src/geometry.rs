//! Parametric description of the domain family: a rectangular core
//! `(-a, a) x (-b, b)` with a thin tube `|x1| < eps * h(|x2|)` along the
//! vertical axis, truncated at `|x2| = L`.
//!
//! The axis `r` is the line `x1 = 0` and `r_perp` is `x2 = 0`. Everything
//! here works on the closed quarter `x1 >= 0, x2 >= 0`; [`reflect_full`]
//! rebuilds the whole outline.

use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("profile evaluated at negative argument t = {0}")]
    NegativeArgument(f64),
    #[error("invalid domain: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Constant,
    ExpDecay,
    RationalDecay,
}

/// Convex, nonincreasing tube profile with `h(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub kind: ProfileKind,
    /// Decay rate; ignored for [`ProfileKind::Constant`].
    #[serde(default)]
    pub rate: f64,
}

impl Profile {
    pub const fn constant() -> Self {
        Profile {
            kind: ProfileKind::Constant,
            rate: 0.0,
        }
    }

    pub const fn exp_decay(rate: f64) -> Self {
        Profile {
            kind: ProfileKind::ExpDecay,
            rate,
        }
    }

    pub const fn rational_decay(rate: f64) -> Self {
        Profile {
            kind: ProfileKind::RationalDecay,
            rate,
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64, GeometryError> {
        if t < 0.0 || t.is_nan() {
            return Err(GeometryError::NegativeArgument(t));
        }
        Ok(self.eval_unchecked(t))
    }

    fn eval_unchecked(&self, t: f64) -> f64 {
        match self.kind {
            ProfileKind::Constant => 1.0,
            ProfileKind::ExpDecay => (-self.rate * t).exp(),
            ProfileKind::RationalDecay => 1.0 / (1.0 + self.rate * t),
        }
    }

    /// True when `h(t) -> 0` as `t -> infinity`.
    pub fn decays(&self) -> bool {
        !matches!(self.kind, ProfileKind::Constant)
    }

    fn check(&self) -> Result<(), GeometryError> {
        if self.decays() && !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(GeometryError::InvalidSpec(format!(
                "decaying profile needs a positive finite rate, got {}",
                self.rate
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ProfileKind::Constant => write!(f, "constant"),
            ProfileKind::ExpDecay => write!(f, "exp_decay(rate={})", self.rate),
            ProfileKind::RationalDecay => write!(f, "rational_decay(rate={})", self.rate),
        }
    }
}

/// Core rectangle, tube profile and truncation.
///
/// The tube is cut at `|x2| = L` (the JSON key is `L`), so the truncated
/// tube beyond the core has length `L - b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    /// Core half-width along `x1`.
    pub a: f64,
    /// Core half-height along `x2`.
    pub b: f64,
    pub eps: f64,
    pub profile: Profile,
    #[serde(rename = "L")]
    pub trunc: f64,
    #[serde(default = "default_samples")]
    pub boundary_samples: usize,
}

fn default_samples() -> usize {
    64
}

impl DomainSpec {
    pub fn new(a: f64, b: f64, eps: f64, profile: Profile, trunc: f64) -> Self {
        DomainSpec {
            a,
            b,
            eps,
            profile,
            trunc,
            boundary_samples: default_samples(),
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: String| Err(GeometryError::InvalidSpec(msg));
        for (name, v) in [
            ("a", self.a),
            ("b", self.b),
            ("eps", self.eps),
            ("L", self.trunc),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        self.profile.check()?;
        if self.a <= self.b {
            return bad(format!(
                "core must be longer along x1: need a > b, got a={} b={}",
                self.a, self.b
            ));
        }
        if self.eps >= self.b {
            return bad(format!("need eps < b, got eps={} b={}", self.eps, self.b));
        }
        if self.junction_width() >= self.a {
            return bad(format!(
                "tube wider than the core at the junction: eps*h(b)={} >= a={}",
                self.junction_width(),
                self.a
            ));
        }
        if self.trunc <= self.b {
            return bad(format!(
                "truncation height L={} must exceed b={}",
                self.trunc, self.b
            ));
        }
        if self.boundary_samples < 2 {
            return bad(format!(
                "boundary_samples must be at least 2, got {}",
                self.boundary_samples
            ));
        }
        Ok(())
    }

    /// Half-width of the tube at height `x2 >= 0`.
    pub fn wall(&self, x2: f64) -> f64 {
        self.eps * self.profile.eval_unchecked(x2.abs())
    }

    pub fn junction_width(&self) -> f64 {
        self.wall(self.b)
    }

    /// Narrowest tube half-width inside the truncated domain.
    pub fn min_tube_width(&self) -> f64 {
        self.wall(self.trunc)
    }

    /// Bottom of the transverse spectrum of the infinite straight strip of
    /// width `2 eps`, which bounds the essential spectrum from below.
    pub fn strip_threshold(&self) -> f64 {
        let w = 2.0 * self.eps;
        std::f64::consts::PI * std::f64::consts::PI / (w * w)
    }

    /// Area of the quarter domain, with the tube integral done by composite
    /// Simpson on `n` panels (exact for the constant profile).
    pub fn quarter_area(&self, n: usize) -> f64 {
        let n = n.max(2) & !1;
        let (lo, hi) = (self.b, self.trunc);
        let dx = (hi - lo) / n as f64;
        let mut s = self.wall(lo) + self.wall(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * self.wall(lo + i as f64 * dx);
        }
        self.a * self.b + s * dx / 3.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeTag {
    Physical,
    /// On the axis `x1 = 0`.
    SymX1,
    /// On the axis `x2 = 0`.
    SymX2,
    /// Artificial truncation edge.
    Cut,
}

impl EdgeTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeTag::Physical => "physical",
            EdgeTag::SymX1 => "sym_x1",
            EdgeTag::SymX2 => "sym_x2",
            EdgeTag::Cut => "cut",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "physical" => Some(EdgeTag::Physical),
            "sym_x1" => Some(EdgeTag::SymX1),
            "sym_x2" => Some(EdgeTag::SymX2),
            "cut" => Some(EdgeTag::Cut),
            _ => None,
        }
    }
}

pub type Point = [f64; 2];

/// Closed, counter-clockwise outline of the truncated quarter domain.
/// `edge_tags[i]` labels the edge from `vertices[i]` to `vertices[i + 1]`
/// (wrapping around).
#[derive(Debug, Clone, PartialEq)]
pub struct QuarterBoundary {
    pub spec: DomainSpec,
    pub vertices: Vec<Point>,
    pub edge_tags: Vec<EdgeTag>,
}

/// Closed outline of the full truncated domain; only physical and cut edges.
#[derive(Debug, Clone, PartialEq)]
pub struct FullBoundary {
    pub vertices: Vec<Point>,
    pub edge_tags: Vec<EdgeTag>,
}

impl FullBoundary {
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point, EdgeTag)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n], self.edge_tags[i]))
    }

    /// Distance from `p` to the nearest physical (non-cut) edge.
    pub fn distance_to_physical(&self, p: Point) -> f64 {
        self.edges()
            .filter(|e| e.2 == EdgeTag::Physical)
            .map(|(a, b, _)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Wall heights from `b` to `L`, clustered toward `b`.
fn wall_heights(spec: &DomainSpec) -> Vec<f64> {
    let n = spec.boundary_samples;
    let span = spec.trunc - spec.b;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                spec.trunc
            } else {
                let s = i as f64 / (n - 1) as f64;
                spec.b + span * (1.0 - (0.5 * std::f64::consts::PI * s).cos())
            }
        })
        .collect()
}

pub fn quarter_boundary(spec: &DomainSpec) -> Result<QuarterBoundary, GeometryError> {
    spec.validate()?;
    let mut vertices = vec![[0.0, 0.0], [spec.a, 0.0], [spec.a, spec.b]];
    let mut edge_tags = vec![EdgeTag::SymX2, EdgeTag::Physical, EdgeTag::Physical];
    for x2 in wall_heights(spec) {
        vertices.push([spec.wall(x2), x2]);
        edge_tags.push(EdgeTag::Physical);
    }
    // the last wall edge is the cut corner
    *edge_tags.last_mut().unwrap() = EdgeTag::Cut;
    vertices.push([0.0, spec.trunc]);
    edge_tags.push(EdgeTag::SymX1);
    Ok(QuarterBoundary {
        spec: *spec,
        vertices,
        edge_tags,
    })
}

impl QuarterBoundary {
    /// Vertices on the physical/cut part of the outline, from `(a, 0)` to `(0, L)`.
    fn outer_path(&self) -> &[Point] {
        &self.vertices[1..]
    }
}

/// Reflect the quarter outline through both axes and stitch a single closed
/// polyline; symmetry edges disappear.
pub fn reflect_full(q: &QuarterBoundary) -> FullBoundary {
    let path = q.outer_path();
    // tags of the edges along the path
    let tags = &q.edge_tags[1..q.edge_tags.len() - 1];
    let mut vertices: Vec<Point> = Vec::with_capacity(4 * path.len());
    let mut edge_tags = Vec::with_capacity(4 * path.len());

    // Q1: (a,0) -> (0,L)
    for (i, p) in path.iter().enumerate() {
        vertices.push(*p);
        if i + 1 < path.len() {
            edge_tags.push(tags[i]);
        }
    }
    // Q2: (0,L) -> (-a,0), mirrored path walked backwards
    for i in (0..path.len() - 1).rev() {
        edge_tags.push(tags[i]);
        let p = path[i];
        vertices.push([neg(p[0]), p[1]]);
    }
    // Q3: (-a,0) -> (0,-L)
    for i in 1..path.len() {
        edge_tags.push(tags[i - 1]);
        let p = path[i];
        vertices.push([neg(p[0]), neg(p[1])]);
    }
    // Q4: (0,-L) -> (a,0), closing edge back to the first vertex
    for i in (1..path.len() - 1).rev() {
        edge_tags.push(tags[i]);
        let p = path[i];
        vertices.push([p[0], neg(p[1])]);
    }
    edge_tags.push(tags[0]);
    debug_assert_eq!(vertices.len(), edge_tags.len());
    FullBoundary {
        vertices,
        edge_tags,
    }
}

/// Negation that maps `0.0` to `+0.0`.
pub(crate) fn neg(x: f64) -> f64 {
    0.0 - x
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    };
    let q = [a[0] + t * d[0] - p[0], a[1] + t * d[1] - p[1]];
    (q[0] * q[0] + q[1] * q[1]).sqrt()
}

/// Twice the signed area of a closed polygon.
pub fn signed_area2(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum()
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(p1: Point, p2: Point, p3: Point, p4: Point) -> bool {
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p3, p4, p1))
        || (d2 == 0.0 && on_segment(p3, p4, p2))
        || (d3 == 0.0 && on_segment(p1, p2, p3))
        || (d4 == 0.0 && on_segment(p1, p2, p4))
}

/// True when no two non-adjacent edges of the closed polygon meet.
pub fn is_simple_polygon(poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Writes `x1,x2,tag` rows; the tag is that of the edge leaving the vertex.
pub fn write_polyline_csv<W: Write>(
    mut out: W,
    vertices: &[Point],
    tags: &[EdgeTag],
) -> io::Result<()> {
    writeln!(out, "x1,x2,tag")?;
    for (p, t) in vertices.iter().zip(tags) {
        writeln!(out, "{:.12e},{:.12e},{}", p[0], p[1], t.as_str())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strip_spec() -> DomainSpec {
        DomainSpec::new(2.0, 1.0, 0.1, Profile::constant(), 4.0)
    }

    #[test]
    fn profile_values() {
        assert_eq!(Profile::constant().eval(7.3).unwrap(), 1.0);
        assert_eq!(Profile::exp_decay(1.0).eval(0.0).unwrap(), 1.0);
        let v = Profile::rational_decay(2.0).eval(3.0).unwrap();
        assert!((v - 1.0 / 7.0).abs() < 1e-15);
        assert!(matches!(
            Profile::exp_decay(1.0).eval(-0.5),
            Err(GeometryError::NegativeArgument(_))
        ));
    }

    #[test]
    fn straight_strip_outline() {
        let q = quarter_boundary(&strip_spec()).unwrap();
        assert_eq!(q.vertices[1], [2.0, 0.0]);
        assert_eq!(q.vertices[2], [2.0, 1.0]);
        assert_eq!(q.vertices[3], [0.1, 1.0]);
        let n = q.vertices.len();
        assert_eq!(q.vertices[n - 2], [0.1, 4.0]);
        assert_eq!(q.vertices[n - 1], [0.0, 4.0]);
        for (i, t) in q.edge_tags.iter().enumerate() {
            let (p, r) = (q.vertices[i], q.vertices[(i + 1) % n]);
            match t {
                EdgeTag::SymX1 => assert!(p[0] == 0.0 && r[0] == 0.0),
                EdgeTag::SymX2 => assert!(p[1] == 0.0 && r[1] == 0.0),
                EdgeTag::Cut => assert!(p[1] == 4.0 && r[1] == 4.0),
                EdgeTag::Physical => {}
            }
        }
        assert_eq!(q.edge_tags.iter().filter(|t| **t == EdgeTag::Cut).count(), 1);
        assert!(signed_area2(&q.vertices) > 0.0);
        assert!(is_simple_polygon(&q.vertices));
    }

    #[test]
    fn decaying_wall_follows_profile() {
        let spec = DomainSpec::new(2.0, 1.0, 0.1, Profile::exp_decay(1.0), 4.0);
        let q = quarter_boundary(&spec).unwrap();
        let wall: Vec<_> = q
            .vertices
            .iter()
            .filter(|p| p[1] >= 1.0 && p[0] > 0.0 && p[0] < 2.0)
            .collect();
        assert_eq!(wall.len(), spec.boundary_samples);
        for p in wall {
            let h = spec.profile.eval(p[1]).unwrap();
            assert!((p[0] - 0.1 * h).abs() <= 1e-15);
        }
        // at x2 = 2 the wall sits at 0.1 * e^-2
        assert!((spec.wall(2.0) - 0.013_533_528_323_661_27).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_specs() {
        let mut s = strip_spec();
        s.a = 1.0;
        s.b = 2.0;
        assert!(quarter_boundary(&s).is_err());
        let mut s = strip_spec();
        s.eps = 1.5;
        assert!(s.validate().is_err());
        let mut s = strip_spec();
        s.trunc = 0.5;
        assert!(s.validate().is_err());
        let mut s = strip_spec();
        s.profile = Profile::exp_decay(0.0);
        assert!(s.validate().is_err());
    }

    #[test]
    fn full_outline_is_symmetric_and_simple() {
        for profile in [Profile::constant(), Profile::rational_decay(2.0)] {
            let spec = DomainSpec::new(2.0, 1.0, 0.1, profile, 4.0);
            let q = quarter_boundary(&spec).unwrap();
            let full = reflect_full(&q);
            let path_len = q.vertices.len() - 1;
            assert_eq!(full.vertices.len(), 4 * path_len - 4);
            assert!(is_simple_polygon(&full.vertices));
            assert!(signed_area2(&full.vertices) > 0.0);
            for p in &full.vertices {
                for m in [[-p[0], p[1]], [p[0], -p[1]]] {
                    assert!(full
                        .vertices
                        .iter()
                        .any(|v| (v[0] - m[0]).abs() < 1e-14 && (v[1] - m[1]).abs() < 1e-14));
                }
            }
            let cut = full.edge_tags.iter().filter(|t| **t == EdgeTag::Cut).count();
            assert_eq!(cut, 4);
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = DomainSpec::new(2.0, 1.0, 0.1, Profile::exp_decay(1.0), 6.0);
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains("\"L\":6.0"));
        assert!(s.contains("\"kind\":\"exp_decay\""));
        let back: DomainSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
    }
}
