//! Block-structured triangulation of the quarter domain.
//!
//! The quarter splits into two logically rectangular blocks: the core
//! `[0, a] x [0, b]` and the tube `{0 < x1 < eps h(x2), b < x2 < L}`. Both
//! are meshed as mapped grids with matching nodes along the junction
//! segment `x2 = b, 0 <= x1 <= eps h(b)`.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{DomainSpec, EdgeTag, Point, QuarterBoundary};

/// Largest allowed ratio of longitudinal to transverse spacing in the tube
/// cells at the junction.
pub const MAX_JUNCTION_ASPECT: f64 = 64.0;
/// Growth ratio of the graded core grid away from the tube.
pub const GRADING_RATIO: f64 = 1.2;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("target_h must be positive and finite, got {0}")]
    BadTargetH(f64),
    #[error("tube_layers must be at least 4, got {0}")]
    TooFewLayers(usize),
    #[error(
        "target_h = {target_h} is too coarse to honor {layers} tube layers: junction cells would \
         have aspect ratio {aspect:.1} (limit {limit}); lower target_h"
    )]
    TooCoarse {
        target_h: f64,
        layers: usize,
        aspect: f64,
        limit: f64,
    },
    #[error("mesh parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub v: [usize; 2],
    pub tag: EdgeTag,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub h_max: f64,
    /// Domain whose tube wall new boundary nodes are projected onto during
    /// refinement. `None` for plain rectangles and imported meshes.
    pub wall: Option<DomainSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NegativeArea { triangle_index: usize, area: f64 },
    IndexOutOfRange { triangle_index: usize },
    NonconformingEdge { edge: [usize; 2], triangles: usize },
    TaggedInteriorEdge { edge: [usize; 2] },
    SymmetryOffAxis { vertex: usize, tag: EdgeTag },
    TooFewTubeLayers { layers: usize },
}

pub(crate) fn edge_key(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

pub fn triangle_area(p: Point, q: Point, r: Point) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))
}

fn dist(p: Point, q: Point) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

fn longest_edge(vertices: &[Point], triangles: &[[usize; 3]]) -> f64 {
    triangles
        .iter()
        .flat_map(|t| {
            [
                dist(vertices[t[0]], vertices[t[1]]),
                dist(vertices[t[1]], vertices[t[2]]),
                dist(vertices[t[2]], vertices[t[0]]),
            ]
        })
        .fold(0.0, f64::max)
}

/// Uniform fine zone `[0, w0]` with `layers` cells, then a geometric grid
/// capped at `h` up to `a`.
fn core_x1_grid(w0: f64, a: f64, layers: usize, h: f64) -> Vec<f64> {
    let s0 = w0 / layers as f64;
    let mut xs: Vec<f64> = (0..=layers).map(|j| j as f64 * s0).collect();
    xs[layers] = w0;
    let span = a - w0;
    let mut steps = Vec::new();
    let mut sum = 0.0;
    let mut s = s0;
    while sum < span {
        s = (s * GRADING_RATIO).min(h);
        steps.push(s);
        sum += s;
    }
    let scale = span / sum;
    let mut x = w0;
    let n = steps.len();
    for (i, st) in steps.into_iter().enumerate() {
        x += st * scale;
        xs.push(if i + 1 == n { a } else { x });
    }
    xs
}

fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| {
            if i == n {
                hi
            } else {
                lo + (hi - lo) * (i as f64 / n as f64)
            }
        })
        .collect()
}

fn cells(span: f64, h: f64) -> usize {
    ((span / h) - 1e-9).ceil().max(1.0) as usize
}

struct Builder {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
}

impl Builder {
    fn quad(&mut self, v00: usize, v10: usize, v11: usize, v01: usize) {
        self.triangles.push([v00, v10, v11]);
        self.triangles.push([v00, v11, v01]);
    }

    fn edge(&mut self, i: usize, j: usize, tag: EdgeTag) {
        self.boundary_edges.push(BoundaryEdge { v: [i, j], tag });
    }

    fn finish(self, wall: Option<DomainSpec>) -> Mesh {
        let h_max = longest_edge(&self.vertices, &self.triangles);
        Mesh {
            vertices: self.vertices,
            triangles: self.triangles,
            boundary_edges: self.boundary_edges,
            h_max,
            wall,
        }
    }
}

pub fn generate_mesh(
    q: &QuarterBoundary,
    target_h: f64,
    tube_layers: usize,
) -> Result<Mesh, MeshError> {
    if !(target_h > 0.0 && target_h.is_finite()) {
        return Err(MeshError::BadTargetH(target_h));
    }
    if tube_layers < 4 {
        return Err(MeshError::TooFewLayers(tube_layers));
    }
    let spec = q.spec;
    let w0 = spec.junction_width();
    let layers = tube_layers.max(cells(w0, target_h));
    let tube_dy_target = target_h.min(10.0 * spec.eps);
    let n_tube = cells(spec.trunc - spec.b, tube_dy_target);
    let tube_dy = (spec.trunc - spec.b) / n_tube as f64;
    let aspect = tube_dy / (w0 / layers as f64);
    if aspect > MAX_JUNCTION_ASPECT {
        return Err(MeshError::TooCoarse {
            target_h,
            layers,
            aspect,
            limit: MAX_JUNCTION_ASPECT,
        });
    }

    let xs = core_x1_grid(w0, spec.a, layers, target_h);
    let ys = uniform(0.0, spec.b, cells(spec.b, target_h));
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    let mut bld = Builder {
        vertices: Vec::new(),
        triangles: Vec::new(),
        boundary_edges: Vec::new(),
    };
    let core = |i: usize, j: usize| j * (nx + 1) + i;
    for &y in &ys {
        for &x in &xs {
            bld.vertices.push([x, y]);
        }
    }
    let tube_base = bld.vertices.len();
    let tube = |i: usize, k: usize| {
        if k == 0 {
            core(i, ny)
        } else {
            tube_base + (k - 1) * (layers + 1) + i
        }
    };
    for k in 1..=n_tube {
        let x2 = if k == n_tube {
            spec.trunc
        } else {
            spec.b + k as f64 * tube_dy
        };
        let w = spec.wall(x2);
        for i in 0..=layers {
            let x1 = if i == layers {
                w
            } else {
                w * (i as f64 / layers as f64)
            };
            bld.vertices.push([x1, x2]);
        }
    }

    for j in 0..ny {
        for i in 0..nx {
            bld.quad(core(i, j), core(i + 1, j), core(i + 1, j + 1), core(i, j + 1));
        }
    }
    for k in 0..n_tube {
        for i in 0..layers {
            bld.quad(tube(i, k), tube(i + 1, k), tube(i + 1, k + 1), tube(i, k + 1));
        }
    }

    for i in 0..nx {
        bld.edge(core(i, 0), core(i + 1, 0), EdgeTag::SymX2);
    }
    for j in 0..ny {
        bld.edge(core(nx, j), core(nx, j + 1), EdgeTag::Physical);
        bld.edge(core(0, j + 1), core(0, j), EdgeTag::SymX1);
    }
    for i in layers..nx {
        bld.edge(core(i + 1, ny), core(i, ny), EdgeTag::Physical);
    }
    for k in 0..n_tube {
        bld.edge(tube(layers, k), tube(layers, k + 1), EdgeTag::Physical);
        bld.edge(tube(0, k + 1), tube(0, k), EdgeTag::SymX1);
    }
    for i in 0..layers {
        bld.edge(tube(i + 1, n_tube), tube(i, n_tube), EdgeTag::Cut);
    }
    Ok(bld.finish(Some(spec)))
}

impl Mesh {
    /// Uniform mesh of the quarter rectangle `[0, a] x [0, b]`: symmetry
    /// edges on the axes, physical edges elsewhere, no cut.
    pub fn quarter_rectangle(a: f64, b: f64, target_h: f64) -> Result<Mesh, MeshError> {
        if !(target_h > 0.0 && target_h.is_finite()) {
            return Err(MeshError::BadTargetH(target_h));
        }
        let xs = uniform(0.0, a, cells(a, target_h));
        let ys = uniform(0.0, b, cells(b, target_h));
        let (nx, ny) = (xs.len() - 1, ys.len() - 1);
        let mut bld = Builder {
            vertices: Vec::new(),
            triangles: Vec::new(),
            boundary_edges: Vec::new(),
        };
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        for &y in &ys {
            for &x in &xs {
                bld.vertices.push([x, y]);
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                bld.quad(id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            }
        }
        for i in 0..nx {
            bld.edge(id(i, 0), id(i + 1, 0), EdgeTag::SymX2);
            bld.edge(id(i + 1, ny), id(i, ny), EdgeTag::Physical);
        }
        for j in 0..ny {
            bld.edge(id(nx, j), id(nx, j + 1), EdgeTag::Physical);
            bld.edge(id(0, j + 1), id(0, j), EdgeTag::SymX1);
        }
        Ok(bld.finish(None))
    }

    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| triangle_area(self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]))
            .sum()
    }

    /// Number of distinct edges.
    pub fn edge_count(&self) -> usize {
        let mut seen = HashMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                seen.insert(edge_key(t[e], t[(e + 1) % 3]), ());
            }
        }
        seen.len()
    }

    /// Per-vertex flags: which tags touch the vertex.
    pub fn vertex_tags(&self) -> Vec<[bool; 4]> {
        let mut flags = vec![[false; 4]; self.vertices.len()];
        for e in &self.boundary_edges {
            let slot = match e.tag {
                EdgeTag::Physical => 0,
                EdgeTag::SymX1 => 1,
                EdgeTag::SymX2 => 2,
                EdgeTag::Cut => 3,
            };
            flags[e.v[0]][slot] = true;
            flags[e.v[1]][slot] = true;
        }
        flags
    }

    fn on_wall(&self, spec: &DomainSpec, p: Point) -> bool {
        p[1] >= spec.b && (p[0] - spec.wall(p[1])).abs() <= 1e-12 * spec.eps.max(1.0)
    }

    /// Regular 1-to-4 refinement through edge midpoints. Midpoints of tube
    /// wall edges are moved onto the exact wall.
    pub fn refine(&self) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut wall_edges: HashMap<(usize, usize), ()> = HashMap::new();
        if let Some(spec) = &self.wall {
            for e in &self.boundary_edges {
                if e.tag == EdgeTag::Physical
                    && self.on_wall(spec, self.vertices[e.v[0]])
                    && self.on_wall(spec, self.vertices[e.v[1]])
                {
                    wall_edges.insert(edge_key(e.v[0], e.v[1]), ());
                }
            }
        }
        let mut mid = |i: usize, j: usize, vertices: &mut Vec<Point>| -> usize {
            let key = edge_key(i, j);
            *mids.entry(key).or_insert_with(|| {
                let (p, q) = (vertices[i], vertices[j]);
                let mut m = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
                if wall_edges.contains_key(&key) {
                    if let Some(spec) = &self.wall {
                        m[0] = spec.wall(m[1]);
                    }
                }
                vertices.push(m);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for t in &self.triangles {
            let [a, b, c] = *t;
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        let mut boundary_edges = Vec::with_capacity(2 * self.boundary_edges.len());
        for e in &self.boundary_edges {
            let m = mid(e.v[0], e.v[1], &mut vertices);
            boundary_edges.push(BoundaryEdge {
                v: [e.v[0], m],
                tag: e.tag,
            });
            boundary_edges.push(BoundaryEdge {
                v: [m, e.v[1]],
                tag: e.tag,
            });
        }
        let h_max = longest_edge(&vertices, &triangles);
        Mesh {
            vertices,
            triangles,
            boundary_edges,
            h_max,
            wall: self.wall,
        }
    }

    pub fn refined(&self, levels: usize) -> Mesh {
        let mut m = self.clone();
        for _ in 0..levels {
            m = m.refine();
        }
        m
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "{} {} {}",
            self.vertices.len(),
            self.triangles.len(),
            self.boundary_edges.len()
        )?;
        for p in &self.vertices {
            writeln!(out, "{:.17e} {:.17e}", p[0], p[1])?;
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        for e in &self.boundary_edges {
            writeln!(out, "{} {} {}", e.v[0], e.v[1], e.tag.as_str())?;
        }
        Ok(())
    }

    /// Reads the plain-text format written by [`Mesh::write_text`]. The
    /// result carries no wall description.
    pub fn read_text<R: BufRead>(input: R) -> Result<Mesh, MeshError> {
        let mut lines = input.lines().enumerate();
        let mut next = || -> Result<(usize, String), MeshError> {
            match lines.next() {
                Some((i, l)) => Ok((i + 1, l?)),
                None => Err(MeshError::Parse {
                    line: 0,
                    msg: "unexpected end of input".into(),
                }),
            }
        };
        fn fields<T: std::str::FromStr>(
            line: usize,
            s: &str,
            n: usize,
        ) -> Result<Vec<T>, MeshError> {
            let out: Result<Vec<T>, _> = s.split_whitespace().map(str::parse).collect();
            match out {
                Ok(v) if v.len() == n => Ok(v),
                _ => Err(MeshError::Parse {
                    line,
                    msg: format!("expected {n} fields, got {s:?}"),
                }),
            }
        }
        let (ln, header) = next()?;
        let h: Vec<usize> = fields(ln, &header, 3)?;
        let mut vertices = Vec::with_capacity(h[0]);
        for _ in 0..h[0] {
            let (ln, l) = next()?;
            let v: Vec<f64> = fields(ln, &l, 2)?;
            vertices.push([v[0], v[1]]);
        }
        let mut triangles = Vec::with_capacity(h[1]);
        for _ in 0..h[1] {
            let (ln, l) = next()?;
            let v: Vec<usize> = fields(ln, &l, 3)?;
            triangles.push([v[0], v[1], v[2]]);
        }
        let mut boundary_edges = Vec::with_capacity(h[2]);
        for _ in 0..h[2] {
            let (ln, l) = next()?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            let parsed = match parts.as_slice() {
                [i, j, t] => match (i.parse(), j.parse(), EdgeTag::parse(t)) {
                    (Ok(i), Ok(j), Some(tag)) => Some(BoundaryEdge { v: [i, j], tag }),
                    _ => None,
                },
                _ => None,
            };
            boundary_edges.push(parsed.ok_or_else(|| MeshError::Parse {
                line: ln,
                msg: format!("bad boundary edge {l:?}"),
            })?);
        }
        let h_max = longest_edge(&vertices, &triangles);
        Ok(Mesh {
            vertices,
            triangles,
            boundary_edges,
            h_max,
            wall: None,
        })
    }
}

/// Checks every structural invariant; an empty list means the mesh is valid.
pub fn validate(m: &Mesh) -> Vec<Violation> {
    let mut out = Vec::new();
    let nv = m.vertices.len();
    let mut uses: HashMap<(usize, usize), usize> = HashMap::new();
    for (ti, t) in m.triangles.iter().enumerate() {
        if t.iter().any(|&v| v >= nv) {
            out.push(Violation::IndexOutOfRange { triangle_index: ti });
            continue;
        }
        let area = triangle_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
        if !(area > 0.0) {
            out.push(Violation::NegativeArea {
                triangle_index: ti,
                area,
            });
        }
        for e in 0..3 {
            *uses.entry(edge_key(t[e], t[(e + 1) % 3])).or_default() += 1;
        }
    }
    let mut tagged: HashMap<(usize, usize), ()> = HashMap::new();
    for e in &m.boundary_edges {
        let key = edge_key(e.v[0], e.v[1]);
        tagged.insert(key, ());
        match uses.get(&key).copied().unwrap_or(0) {
            1 => {}
            2 => out.push(Violation::TaggedInteriorEdge { edge: [key.0, key.1] }),
            n => out.push(Violation::NonconformingEdge {
                edge: [key.0, key.1],
                triangles: n,
            }),
        }
        for &v in &e.v {
            if v >= nv {
                continue;
            }
            let p = m.vertices[v];
            let off = match e.tag {
                EdgeTag::SymX1 => p[0] != 0.0,
                EdgeTag::SymX2 => p[1] != 0.0,
                _ => false,
            };
            if off {
                out.push(Violation::SymmetryOffAxis { vertex: v, tag: e.tag });
            }
        }
    }
    let mut keys: Vec<_> = uses.iter().collect();
    keys.sort();
    for (key, &n) in keys {
        if n > 2 || (n == 1 && !tagged.contains_key(key)) {
            out.push(Violation::NonconformingEdge {
                edge: [key.0, key.1],
                triangles: n,
            });
        }
    }
    if let Some(spec) = &m.wall {
        let w0 = spec.junction_width();
        let across = m
            .vertices
            .iter()
            .filter(|p| p[1] == spec.b && p[0] <= w0 * (1.0 + 1e-12))
            .count();
        if across < 5 {
            out.push(Violation::TooFewTubeLayers {
                layers: across.saturating_sub(1),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{quarter_boundary, Profile};

    fn strip() -> DomainSpec {
        DomainSpec::new(2.0, 1.0, 0.1, Profile::constant(), 4.0)
    }

    fn mesh_of(spec: &DomainSpec, h: f64) -> Mesh {
        generate_mesh(&quarter_boundary(spec).unwrap(), h, 4).unwrap()
    }

    #[test]
    fn straight_strip_mesh_is_valid() {
        let m = mesh_of(&strip(), 0.1);
        assert!(validate(&m).is_empty(), "{:?}", validate(&m));
        // rectangle 2 x 1 plus strip 0.1 x 3
        assert!((m.area() - 2.3).abs() < 1e-9);
        let v = m.vertices.len() as i64;
        let e = m.edge_count() as i64;
        let f = m.triangles.len() as i64;
        assert_eq!(v - e + f, 1);
        // at least four cells across the strip at every height
        let mid_tube: Vec<_> = m
            .vertices
            .iter()
            .filter(|p| (p[1] - 2.5).abs() < 1e-9)
            .collect();
        assert!(mid_tube.len() >= 5, "{}", mid_tube.len());
    }

    #[test]
    fn core_spacing_bounded() {
        let m = mesh_of(&strip(), 0.1);
        for t in &m.triangles {
            for e in 0..3 {
                let (p, q) = (m.vertices[t[e]], m.vertices[t[(e + 1) % 3]]);
                if p[1] <= 1.0 && q[1] <= 1.0 {
                    // diagonal of a cell no wider or taller than target_h
                    assert!(dist(p, q) <= 0.1 * 2f64.sqrt() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn refinement_quadruples_and_stays_valid() {
        let spec = DomainSpec::new(2.0, 1.0, 0.1, Profile::exp_decay(1.0), 3.0);
        let m = mesh_of(&spec, 0.1);
        let r = m.refine();
        assert_eq!(r.triangles.len(), 4 * m.triangles.len());
        assert_eq!(r.boundary_edges.len(), 2 * m.boundary_edges.len());
        assert!(validate(&r).is_empty(), "{:?}", validate(&r));
        // new wall nodes sit on the exact wall
        for e in r.boundary_edges.iter().filter(|e| e.tag == EdgeTag::Physical) {
            for &v in &e.v {
                let p = r.vertices[v];
                if p[1] > 1.0 {
                    assert!((p[0] - spec.wall(p[1])).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn refined_area_converges_second_order() {
        let spec = DomainSpec::new(2.0, 1.0, 0.2, Profile::exp_decay(2.0), 3.0);
        let exact = spec.quarter_area(20_000);
        let mut m = mesh_of(&spec, 0.2);
        let mut errs = Vec::new();
        for _ in 0..3 {
            errs.push((m.area() - exact).abs());
            m = m.refine();
        }
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!(rate > 1.8, "area errors {errs:?}");
        }
    }

    #[test]
    fn tag_counts_double_under_refinement() {
        let m = mesh_of(&strip(), 0.2);
        let r = m.refine();
        for tag in [EdgeTag::Physical, EdgeTag::SymX1, EdgeTag::SymX2, EdgeTag::Cut] {
            let c0 = m.boundary_edges.iter().filter(|e| e.tag == tag).count();
            let c1 = r.boundary_edges.iter().filter(|e| e.tag == tag).count();
            assert_eq!(c1, 2 * c0, "{tag:?}");
        }
    }

    #[test]
    fn detects_flipped_triangle() {
        let mut m = Mesh::quarter_rectangle(2.0, 1.0, 0.5).unwrap();
        m.triangles[3].swap(1, 2);
        let v = validate(&m);
        assert!(v
            .iter()
            .any(|v| matches!(v, Violation::NegativeArea { triangle_index: 3, .. })));
        let json = serde_json::to_string(&v[0]).unwrap();
        assert!(json.contains("\"kind\":\"negative_area\""));
    }

    #[test]
    fn detects_dangling_edge() {
        let mut m = Mesh::quarter_rectangle(2.0, 1.0, 0.5).unwrap();
        m.boundary_edges.pop();
        assert!(validate(&m)
            .iter()
            .any(|v| matches!(v, Violation::NonconformingEdge { .. })));
        let mut m = Mesh::quarter_rectangle(2.0, 1.0, 0.5).unwrap();
        let t = m.triangles[0];
        m.triangles.push(t);
        assert!(validate(&m)
            .iter()
            .any(|v| matches!(v, Violation::NonconformingEdge { triangles: 3, .. })));
    }

    #[test]
    fn rejects_bad_arguments() {
        let q = quarter_boundary(&strip()).unwrap();
        assert!(matches!(generate_mesh(&q, 0.0, 4), Err(MeshError::BadTargetH(_))));
        assert!(matches!(generate_mesh(&q, 0.1, 3), Err(MeshError::TooFewLayers(3))));
        // very thin tube with a coarse target spacing
        let thin = DomainSpec::new(2.0, 1.0, 0.01, Profile::exp_decay(3.0), 4.0);
        let q = quarter_boundary(&thin).unwrap();
        assert!(matches!(generate_mesh(&q, 0.5, 4), Err(MeshError::TooCoarse { .. })));
    }

    #[test]
    fn text_round_trip() {
        let m = mesh_of(&strip(), 0.25);
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let back = Mesh::read_text(buf.as_slice()).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.triangles, m.triangles);
        assert_eq!(back.boundary_edges, m.boundary_edges);
        assert!(Mesh::read_text("3 1\n".as_bytes()).is_err());
    }
}
