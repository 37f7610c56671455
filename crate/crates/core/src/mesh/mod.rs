//! Tetrahedral meshes of convex half-space domains.

mod domain;
mod perturb;
mod refine;

use alloc::format;
use alloc::vec::Vec;


use crate::geom::{distance, signed_volume, triangle_area};
use crate::{Error, Point, Result};

pub use domain::{HalfSpace, HalfSpaceDomain, Prism};

/// Local vertex triples of the four faces of a tetrahedron; face `k` is
/// opposite local vertex `k`.
pub(crate) const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

pub(crate) const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFace {
    pub vertices: [usize; 3],
    /// Index of the bounding half-space the face lies on.
    pub face_id: usize,
}

/// A conforming tetrahedral mesh with boundary metadata.
///
/// Immutable after construction; every constructor checks orientation,
/// conformity and that the topological boundary lies on the domain boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    domain: HalfSpaceDomain,
    vertices: Vec<Point>,
    tets: Vec<[usize; 4]>,
    boundary_faces: Vec<BoundaryFace>,
    boundary_vertex: Vec<bool>,
    level: usize,
    h: f64,
}

impl Mesh {
    /// Builds a mesh from raw parts. Tetrahedra with negative orientation are
    /// rejected, not flipped.
    pub fn from_parts(
        domain: HalfSpaceDomain,
        vertices: Vec<Point>,
        tets: Vec<[usize; 4]>,
        level: usize,
    ) -> Result<Self> {
        let n = vertices.len();
        for (cell, t) in tets.iter().enumerate() {
            if t.iter().any(|&v| v >= n) {
                return Err(Error::Mesh(format!("cell {cell} references a missing vertex")));
            }
            let volume = signed_volume(t.map(|v| &vertices[v]));
            if !(volume > 0.0) {
                return Err(Error::DegenerateCell { cell, volume });
            }
        }

        let faces = boundary_face_keys(&tets)?;
        let scale = bounding_box_diameter(&vertices).max(1.0);
        let mut boundary_faces = Vec::with_capacity(faces.len());
        let mut boundary_vertex = alloc::vec![false; n];
        for f in faces {
            let pts = f.map(|v| &vertices[v]);
            let face_id = domain
                .face_containing(&pts, 1e-9 * scale)
                .ok_or_else(|| {
                    Error::Mesh(format!("boundary face {f:?} is not on the domain boundary"))
                })?;
            for v in f {
                boundary_vertex[v] = true;
            }
            boundary_faces.push(BoundaryFace {
                vertices: f,
                face_id,
            });
        }

        let h = tets
            .iter()
            .map(|t| longest_edge(t.map(|v| &vertices[v])))
            .fold(0.0, f64::max);
        Ok(Self {
            domain,
            vertices,
            tets,
            boundary_faces,
            boundary_vertex,
            level,
            h,
        })
    }

    pub fn domain(&self) -> &HalfSpaceDomain {
        &self.domain
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary_faces
    }

    pub fn boundary_vertex_flags(&self) -> &[bool] {
        &self.boundary_vertex
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    /// Maximal edge length over all cells.
    pub fn mesh_size(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn tet_points(&self, cell: usize) -> [&Point; 4] {
        self.tets[cell].map(|v| &self.vertices[v])
    }

    #[inline]
    pub fn face_points(&self, face: &BoundaryFace) -> [&Point; 3] {
        face.vertices.map(|v| &self.vertices[v])
    }

    pub fn tet_volume(&self, cell: usize) -> f64 {
        signed_volume(self.tet_points(cell))
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.tets.len()).map(|c| self.tet_volume(c)).sum()
    }

    pub fn boundary_area(&self) -> f64 {
        self.boundary_faces
            .iter()
            .map(|f| triangle_area(self.face_points(f)))
            .sum()
    }

    /// Smallest ratio of inradius to longest edge over all cells.
    pub fn shape_regularity(&self) -> f64 {
        (0..self.tets.len())
            .map(|c| {
                let p = self.tet_points(c);
                let surface: f64 = TET_FACES
                    .iter()
                    .map(|f| triangle_area([p[f[0]], p[f[1]], p[f[2]]]))
                    .sum();
                let inradius = 3.0 * signed_volume(p) / surface;
                inradius / longest_edge(p)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Re-runs the structural checks of [`Mesh::from_parts`].
    pub fn validate(&self) -> Result<()> {
        let rebuilt = Self::from_parts(
            self.domain.clone(),
            self.vertices.clone(),
            self.tets.clone(),
            self.level,
        )?;
        if rebuilt.boundary_faces != self.boundary_faces {
            return Err(Error::Mesh("stored boundary faces are stale".into()));
        }
        Ok(())
    }

    /// Red refinement: every cell is split into eight children.
    pub fn refine_uniform(&self) -> Mesh {
        refine::refine(self)
    }

    /// Moves interior vertices by deterministic pseudo-random offsets of length
    /// at most `sigma` times the shortest incident edge.
    pub fn perturb_interior(&self, sigma: f64, seed: u64) -> Result<Mesh> {
        perturb::perturb(self, sigma, seed)
    }
}

/// Builds the extruded level-0 mesh of a prism domain and refines it `level`
/// times.
///
/// The base polygon is fan-triangulated from the vertex on the singular edge;
/// each triangular prism is split into three tetrahedra whose quad-face
/// diagonals always run from the lower-numbered bottom vertex to the
/// higher-numbered top vertex, so neighbouring prisms match.
pub fn build_prism_mesh(domain: &HalfSpaceDomain, level: usize) -> Result<Mesh> {
    let prism = domain
        .prism_geometry()
        .ok_or_else(|| Error::Domain("prism geometry required".into()))?;
    let k = prism.base.len();
    let (z0, z1) = prism.z_range;
    let mut vertices = Vec::with_capacity(2 * k);
    for z in [z0, z1] {
        for p in &prism.base {
            vertices.push([p[0], p[1], z]);
        }
    }
    let mut tets = Vec::with_capacity(3 * (k - 2));
    for i in 1..k - 1 {
        let [a, b, c] = [0, i, i + 1];
        for mut t in [
            [a, b, c, c + k],
            [a, b, b + k, c + k],
            [a, a + k, b + k, c + k],
        ] {
            if signed_volume(t.map(|v| &vertices[v])) < 0.0 {
                t.swap(2, 3);
            }
            tets.push(t);
        }
    }
    let mut mesh = Mesh::from_parts(domain.clone(), vertices, tets, 0)?;
    for _ in 0..level {
        mesh = mesh.refine_uniform();
    }
    Ok(mesh)
}

/// Sorted vertex triples of faces that belong to exactly one cell.
fn boundary_face_keys(tets: &[[usize; 4]]) -> Result<Vec<[usize; 3]>> {
    let mut keys: Vec<[usize; 3]> = Vec::with_capacity(4 * tets.len());
    for t in tets {
        for f in TET_FACES {
            let mut key = [t[f[0]], t[f[1]], t[f[2]]];
            key.sort_unstable();
            keys.push(key);
        }
    }
    keys.sort_unstable();
    let mut boundary = Vec::new();
    let mut i = 0;
    while i < keys.len() {
        let mut j = i + 1;
        while j < keys.len() && keys[j] == keys[i] {
            j += 1;
        }
        match j - i {
            1 => boundary.push(keys[i]),
            2 => {}
            m => {
                return Err(Error::Mesh(format!(
                    "face {:?} shared by {m} cells",
                    keys[i]
                )))
            }
        }
        i = j;
    }
    Ok(boundary)
}

fn longest_edge(p: [&Point; 4]) -> f64 {
    TET_EDGES
        .iter()
        .map(|e| distance(p[e[0]], p[e[1]]))
        .fold(0.0, f64::max)
}

fn bounding_box_diameter(vertices: &[Point]) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in vertices {
        for d in 0..3 {
            lo[d] = lo[d].min(v[d]);
            hi[d] = hi[d].max(v[d]);
        }
    }
    distance(&lo, &hi)
}
