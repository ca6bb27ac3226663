//! Linear (P1) finite elements: exact stiffness and consistent mass
//! matrices, and their restriction to one symmetry sector.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{triangle_area, Mesh};
use crate::sparse::CsrMatrix;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("degenerate triangle {index} (area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },
    #[error("sector {0} leaves no free degrees of freedom")]
    NoFreeDofs(Sector),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Sym,
    Anti,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Sym => 1.0,
            Parity::Anti => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Sym => "sym",
            Parity::Anti => "anti",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutBc {
    Dirichlet,
    Neumann,
}

/// Parity under `x1 -> -x1` and `x2 -> -x2`, plus the condition on the
/// truncation cut. Antisymmetry on an axis is a Dirichlet condition there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Sector {
    pub parity_x1: Parity,
    pub parity_x2: Parity,
    pub cut_bc: CutBc,
}

impl Sector {
    pub const fn new(parity_x1: Parity, parity_x2: Parity) -> Self {
        Sector {
            parity_x1,
            parity_x2,
            cut_bc: CutBc::Dirichlet,
        }
    }

    pub const fn with_cut(self, cut_bc: CutBc) -> Self {
        Sector { cut_bc, ..self }
    }

    /// The four parity classes, in a fixed order.
    pub const ALL: [Sector; 4] = [
        Sector::new(Parity::Sym, Parity::Sym),
        Sector::new(Parity::Anti, Parity::Sym),
        Sector::new(Parity::Sym, Parity::Anti),
        Sector::new(Parity::Anti, Parity::Anti),
    ];

    pub fn label(&self) -> String {
        format!("({},{})", self.parity_x1.as_str(), self.parity_x2.as_str())
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cut = match self.cut_bc {
            CutBc::Dirichlet => "dirichlet",
            CutBc::Neumann => "neumann",
        };
        write!(f, "{}/{cut}", self.label())
    }
}

/// Reduced pencil `(K, M)` of one sector.
#[derive(Debug, Clone)]
pub struct SectorSystem {
    pub k: CsrMatrix,
    pub m: CsrMatrix,
    pub sector: Sector,
    /// Mesh vertex -> dof, `None` for constrained vertices.
    pub vertex_to_dof: Vec<Option<usize>>,
    pub dof_to_vertex: Vec<usize>,
}

impl SectorSystem {
    pub fn dofs(&self) -> usize {
        self.dof_to_vertex.len()
    }

    /// Scatter a dof vector to mesh vertices (constrained vertices get 0).
    pub fn expand(&self, dof_values: &[f64]) -> Vec<f64> {
        self.vertex_to_dof
            .iter()
            .map(|d| d.map_or(0.0, |d| dof_values[d]))
            .collect()
    }
}

/// Element matrices of a P1 triangle: `(stiffness, mass, area)`.
pub fn local_matrices(p: [[f64; 2]; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3], f64) {
    let area = triangle_area(p[0], p[1], p[2]);
    // gradient of the hat function at vertex i is the rotated opposite edge / 2A
    let mut grad = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        grad[i] = [
            (p[j][1] - p[k][1]) / (2.0 * area),
            (p[k][0] - p[j][0]) / (2.0 * area),
        ];
    }
    let mut kl = [[0.0; 3]; 3];
    let mut ml = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            kl[i][j] = area * (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]);
            ml[i][j] = if i == j { area / 6.0 } else { area / 12.0 };
        }
    }
    (kl, ml, area)
}

/// Global stiffness and mass matrices over all mesh vertices.
pub fn assemble(mesh: &Mesh) -> Result<(CsrMatrix, CsrMatrix), FemError> {
    let n = mesh.vertices.len();
    let mut kt = Vec::with_capacity(9 * mesh.triangles.len());
    let mut mt = Vec::with_capacity(9 * mesh.triangles.len());
    for (index, t) in mesh.triangles.iter().enumerate() {
        let p = [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]];
        let (kl, ml, area) = local_matrices(p);
        if !(area > 0.0) || !area.is_finite() {
            return Err(FemError::DegenerateTriangle { index, area });
        }
        for i in 0..3 {
            for j in 0..3 {
                kt.push((t[i], t[j], kl[i][j]));
                mt.push((t[i], t[j], ml[i][j]));
            }
        }
    }
    Ok((CsrMatrix::from_triplets(n, &kt), CsrMatrix::from_triplets(n, &mt)))
}

/// Vertices eliminated for the sector: physical always, each symmetry axis
/// when antisymmetric, the cut when Dirichlet.
pub fn constrained_vertices(mesh: &Mesh, sector: Sector) -> Vec<bool> {
    mesh.vertex_tags()
        .into_iter()
        .map(|[phys, s1, s2, cut]| {
            phys || (s1 && sector.parity_x1 == Parity::Anti)
                || (s2 && sector.parity_x2 == Parity::Anti)
                || (cut && sector.cut_bc == CutBc::Dirichlet)
        })
        .collect()
}

pub fn reduce(
    k_full: &CsrMatrix,
    m_full: &CsrMatrix,
    mesh: &Mesh,
    sector: Sector,
) -> Result<SectorSystem, FemError> {
    let fixed = constrained_vertices(mesh, sector);
    let mut vertex_to_dof = vec![None; fixed.len()];
    let mut dof_to_vertex = Vec::new();
    for (v, &f) in fixed.iter().enumerate() {
        if !f {
            vertex_to_dof[v] = Some(dof_to_vertex.len());
            dof_to_vertex.push(v);
        }
    }
    let n = dof_to_vertex.len();
    if n == 0 {
        return Err(FemError::NoFreeDofs(sector));
    }
    Ok(SectorSystem {
        k: k_full.restrict(&vertex_to_dof, n),
        m: m_full.restrict(&vertex_to_dof, n),
        sector,
        vertex_to_dof,
        dof_to_vertex,
    })
}
