//! Nodal sets of reconstructed full-domain eigenfunctions.
//!
//! A sector eigenvector lives on the quarter mesh. [`reconstruct_full`]
//! reflects it into a field on the whole truncated domain; the zero set is
//! then traced triangle by triangle from the piecewise-linear interpolant.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigensolve::EigenResult;
use crate::fem::{Parity, Sector, SectorSystem};
use crate::geometry::{EdgeTag, FullBoundary, Point};
use crate::mesh::{edge_key, Mesh};

/// Relative magnitude below which vertex values are treated as zero.
pub const ZERO_SNAP: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum NodalError {
    #[error("eigenpair index {index} out of range ({count} computed)")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("field is identically zero")]
    ZeroField,
    #[error("no nodal segments to classify")]
    EmptyNodalSet,
}

#[derive(Debug, Clone)]
pub struct FullField {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub values: Vec<f64>,
    pub sector: Sector,
    /// Longest edge of the mesh the field lives on.
    pub h_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    AxisR,
    SegmentRPerp,
    ClosedLoop,
    Other,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::AxisR => "axis_r",
            Classification::SegmentRPerp => "segment_r_perp",
            Classification::ClosedLoop => "closed_loop",
            Classification::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<Point>,
    /// Last point connects back to the first.
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalReport {
    pub segments: Vec<Polyline>,
    pub n_nodal_domains: usize,
    pub classification: Option<Classification>,
    pub min_dist_to_boundary: f64,
    pub touches_boundary: bool,
    pub tol_geo: f64,
}

/// Geometric tolerance for nodal decisions on a mesh of resolution `h_max`.
pub fn tol_geo(h_max: f64) -> f64 {
    (0.1 * h_max).max(1e-9)
}

impl FullField {
    /// Reflects quarter-mesh vertex values into the full domain using the
    /// sector parities. Vertices on a reflection axis are shared, and values
    /// there are exactly zero for an antisymmetric axis.
    pub fn from_quarter(mesh: &Mesh, sector: Sector, quarter_values: &[f64]) -> FullField {
        let n = mesh.vertices.len();
        // quadrant order: (+,+), (-,+), (+,-), (-,-)
        let flips = [(false, false), (true, false), (false, true), (true, true)];
        let mut index = vec![vec![usize::MAX; n]; 4];
        let mut vertices = Vec::with_capacity(4 * n);
        let mut values = Vec::with_capacity(4 * n);
        for (q, &(f1, f2)) in flips.iter().enumerate() {
            for v in 0..n {
                let p = mesh.vertices[v];
                let shared = if f1 && p[0] == 0.0 {
                    Some(index[flips.iter().position(|&f| f == (false, f2)).unwrap()][v])
                } else if f2 && p[1] == 0.0 {
                    Some(index[flips.iter().position(|&f| f == (f1, false)).unwrap()][v])
                } else {
                    None
                };
                index[q][v] = match shared {
                    Some(i) => i,
                    None => {
                        let x1 = if f1 { -p[0] } else { p[0] };
                        let x2 = if f2 { -p[1] } else { p[1] };
                        let mut s = 1.0;
                        if f1 {
                            s *= sector.parity_x1.sign();
                        }
                        if f2 {
                            s *= sector.parity_x2.sign();
                        }
                        vertices.push([x1, x2]);
                        values.push(s * quarter_values[v]);
                        vertices.len() - 1
                    }
                };
            }
        }
        for (p, v) in vertices.iter().zip(values.iter_mut()) {
            if (p[0] == 0.0 && sector.parity_x1 == Parity::Anti)
                || (p[1] == 0.0 && sector.parity_x2 == Parity::Anti)
            {
                *v = 0.0;
            }
        }
        let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
        for (q, &(f1, f2)) in flips.iter().enumerate() {
            for t in &mesh.triangles {
                let mut tri = [index[q][t[0]], index[q][t[1]], index[q][t[2]]];
                if f1 != f2 {
                    tri.swap(1, 2);
                }
                triangles.push(tri);
            }
        }
        FullField {
            vertices,
            triangles,
            values,
            sector,
            h_max: mesh.h_max,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Integral of the piecewise-linear interpolant.
    pub fn integral(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [p, q, r] = [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]];
                let area = crate::mesh::triangle_area(p, q, r);
                area * (self.values[t[0]] + self.values[t[1]] + self.values[t[2]]) / 3.0
            })
            .sum()
    }

    fn snapped_signs(&self) -> Vec<i8> {
        let floor = ZERO_SNAP * self.max_abs();
        self.values
            .iter()
            .map(|&v| {
                if v.abs() <= floor {
                    0
                } else if v > 0.0 {
                    1
                } else {
                    -1
                }
            })
            .collect()
    }

    /// Sign of a triangle: the common sign of its nonzero vertices, or 0 when
    /// mixed or all zero.
    fn triangle_signs(&self, signs: &[i8]) -> Vec<i8> {
        self.triangles
            .iter()
            .map(|t| {
                let (mut pos, mut negs) = (false, false);
                for &v in t {
                    pos |= signs[v] > 0;
                    negs |= signs[v] < 0;
                }
                match (pos, negs) {
                    (true, false) => 1,
                    (false, true) => -1,
                    _ => 0,
                }
            })
            .collect()
    }

    fn edge_triangles(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut map: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (ti, t) in self.triangles.iter().enumerate() {
            for e in 0..3 {
                map.entry(edge_key(t[e], t[(e + 1) % 3])).or_default().push(ti);
            }
        }
        map
    }
}

pub fn reconstruct_full(
    mesh: &Mesh,
    sys: &SectorSystem,
    res: &EigenResult,
    index: usize,
) -> Result<FullField, NodalError> {
    let v = res.vectors.get(index).ok_or(NodalError::IndexOutOfRange {
        index,
        count: res.vectors.len(),
    })?;
    Ok(FullField::from_quarter(mesh, res.sector, &sys.expand(v)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum PointKey {
    Vertex(usize),
    Edge(usize, usize),
}

/// Traces the zero level set of the interpolant as polylines.
pub fn extract_zero_set(f: &FullField) -> Result<Vec<Polyline>, NodalError> {
    if f.max_abs() == 0.0 {
        return Err(NodalError::ZeroField);
    }
    let signs = f.snapped_signs();
    let tri_signs = f.triangle_signs(&signs);
    let edge_tris = f.edge_triangles();

    let mut pieces: Vec<(PointKey, PointKey)> = Vec::new();
    for t in &f.triangles {
        let s = [signs[t[0]], signs[t[1]], signs[t[2]]];
        let has_pos = s.contains(&1);
        let has_neg = s.contains(&-1);
        if !(has_pos && has_neg) {
            continue;
        }
        let mut ends = Vec::with_capacity(2);
        for e in 0..3 {
            let (i, j) = (t[e], t[(e + 1) % 3]);
            let (si, sj) = (signs[i], signs[j]);
            if si == 0 {
                ends.push(PointKey::Vertex(i));
            } else if sj != 0 && si != sj {
                let (a, b) = edge_key(i, j);
                ends.push(PointKey::Edge(a, b));
            }
        }
        if ends.len() == 2 {
            pieces.push((ends[0], ends[1]));
        }
    }

    // zero edges between triangles of opposite sign, plus axes forced by parity
    let anti1 = f.sector.parity_x1 == Parity::Anti;
    let anti2 = f.sector.parity_x2 == Parity::Anti;
    let mut zero_edges: Vec<(usize, usize)> = edge_tris
        .iter()
        .filter(|(&(i, j), tris)| {
            if tris.len() != 2 {
                return false;
            }
            let (p, q) = (f.vertices[i], f.vertices[j]);
            let on_axis = (anti1 && p[0] == 0.0 && q[0] == 0.0) || (anti2 && p[1] == 0.0 && q[1] == 0.0);
            on_axis
                || (signs[i] == 0
                    && signs[j] == 0
                    && tri_signs[tris[0]] * tri_signs[tris[1]] < 0)
        })
        .map(|(&e, _)| e)
        .collect();
    zero_edges.sort_unstable();
    pieces.extend(zero_edges.into_iter().map(|(i, j)| (PointKey::Vertex(i), PointKey::Vertex(j))));

    let position = |k: PointKey| -> Point {
        match k {
            PointKey::Vertex(v) => f.vertices[v],
            PointKey::Edge(i, j) => {
                let (vi, vj) = (f.values[i], f.values[j]);
                let t = vi / (vi - vj);
                let (p, q) = (f.vertices[i], f.vertices[j]);
                [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
            }
        }
    };
    Ok(chain(&pieces)
        .into_iter()
        .map(|(keys, closed)| Polyline {
            points: keys.into_iter().map(position).collect(),
            closed,
        })
        .collect())
}

/// Joins pieces into maximal chains. Chains stop at points of degree other
/// than two; what remains afterwards are closed cycles.
fn chain(pieces: &[(PointKey, PointKey)]) -> Vec<(Vec<PointKey>, bool)> {
    let mut adj: BTreeMap<PointKey, Vec<usize>> = BTreeMap::new();
    for (i, &(a, b)) in pieces.iter().enumerate() {
        adj.entry(a).or_default().push(i);
        adj.entry(b).or_default().push(i);
    }
    let mut used = vec![false; pieces.len()];
    let mut out = Vec::new();
    let walk = |start: PointKey, first: usize, used: &mut Vec<bool>| -> Vec<PointKey> {
        let mut keys = vec![start];
        let (mut at, mut edge) = (start, first);
        loop {
            used[edge] = true;
            let (a, b) = pieces[edge];
            let next = if a == at { b } else { a };
            keys.push(next);
            at = next;
            let nbrs = &adj[&at];
            if nbrs.len() != 2 {
                break;
            }
            match nbrs.iter().find(|&&e| !used[e]) {
                Some(&e) => edge = e,
                None => break,
            }
        }
        keys
    };
    for (&k, edges) in &adj {
        if edges.len() == 2 {
            continue;
        }
        for &e in edges {
            if !used[e] {
                out.push((walk(k, e, &mut used), false));
            }
        }
    }
    for e in 0..pieces.len() {
        if !used[e] {
            let mut keys = walk(pieces[e].0, e, &mut used);
            keys.pop();
            out.push((keys, true));
        }
    }
    out
}

/// Connected components of positive and negative triangles, joined across
/// shared edges.
pub fn count_nodal_domains(f: &FullField) -> usize {
    let signs = f.snapped_signs();
    let tri_signs = f.triangle_signs(&signs);
    let mut uf = UnionFind::<usize>::new(f.triangles.len());
    for tris in f.edge_triangles().values() {
        if let [s, t] = tris[..] {
            if tri_signs[s] != 0 && tri_signs[s] == tri_signs[t] {
                uf.union(s, t);
            }
        }
    }
    let mut roots: Vec<usize> = (0..f.triangles.len())
        .filter(|&t| tri_signs[t] != 0)
        .map(|t| uf.find(t))
        .collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

/// Returns `(classification, min distance to physical boundary, touches)`.
pub fn classify_and_measure(
    segments: &[Polyline],
    boundary: &FullBoundary,
    tol: f64,
) -> Result<(Classification, f64, bool), NodalError> {
    if segments.iter().all(|s| s.points.is_empty()) {
        return Err(NodalError::EmptyNodalSet);
    }
    let points = || segments.iter().flat_map(|s| s.points.iter().copied());
    let min_dist = points()
        .map(|p| boundary.distance_to_physical(p))
        .fold(f64::INFINITY, f64::min);
    let touches = min_dist <= tol;
    let class = if points().all(|p| p[0].abs() <= tol) {
        Classification::AxisR
    } else if points().all(|p| p[1].abs() <= tol)
        && segments.iter().all(|s| {
            !s.closed
                && [s.points[0], *s.points.last().unwrap()]
                    .iter()
                    .all(|&p| boundary.distance_to_physical(p) <= tol)
        })
    {
        Classification::SegmentRPerp
    } else if segments.iter().all(|s| s.closed) && min_dist >= tol {
        Classification::ClosedLoop
    } else {
        Classification::Other
    };
    Ok((class, min_dist, touches))
}

/// Zero set, domain count and classification of one field.
pub fn analyze(f: &FullField, boundary: &FullBoundary) -> Result<NodalReport, NodalError> {
    let segments = extract_zero_set(f)?;
    let n_nodal_domains = count_nodal_domains(f);
    let tol = tol_geo(f.h_max);
    let (classification, min_dist_to_boundary, touches_boundary) = if segments.is_empty() {
        (None, f64::INFINITY, false)
    } else {
        let (c, d, t) = classify_and_measure(&segments, boundary, tol)?;
        (Some(c), d, t)
    };
    Ok(NodalReport {
        segments,
        n_nodal_domains,
        classification,
        min_dist_to_boundary,
        touches_boundary,
        tol_geo: tol,
    })
}

/// Full outline of `(-a,a) x (-b,b)`.
pub fn rectangle_boundary(a: f64, b: f64) -> FullBoundary {
    FullBoundary {
        vertices: vec![[-a, -b], [a, -b], [a, b], [-a, b]],
        edge_tags: vec![EdgeTag::Physical; 4],
    }
}

/// `segment_id,x1,x2` rows.
pub fn write_segments_csv<W: Write>(mut out: W, segments: &[Polyline]) -> io::Result<()> {
    writeln!(out, "segment_id,x1,x2")?;
    for (id, s) in segments.iter().enumerate() {
        for p in &s.points {
            writeln!(out, "{id},{:.12e},{:.12e}", p[0], p[1])?;
        }
        if s.closed {
            let p = s.points[0];
            writeln!(out, "{id},{:.12e},{:.12e}", p[0], p[1])?;
        }
    }
    Ok(())
}
