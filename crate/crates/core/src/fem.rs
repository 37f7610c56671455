//! P1 Lagrange assembly on tetrahedra and boundary triangles.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::geom::{barycentric_point, cross, dot, sub, triangle_area};
use crate::mesh::Mesh;
use crate::quadrature::{TetRule, TriangleRule};
use crate::sparse::CsrMatrix;
use crate::{Error, Point, Result};

const NONE: usize = usize::MAX;

/// Partition of the vertex dofs into boundary dofs (the trace space) and
/// interior dofs (the homogeneous Dirichlet space).
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    boundary: Vec<usize>,
    interior: Vec<usize>,
    boundary_index: Vec<usize>,
    interior_index: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let boundary: Vec<usize> = (0..mesh.n_vertices())
            .filter(|&v| mesh.is_boundary_vertex(v))
            .collect();
        Self::from_boundary(mesh.n_vertices(), &boundary).expect("mesh boundary vertices are valid")
    }

    /// Any subset of `0..n` as the boundary dofs.
    pub fn from_boundary(n: usize, boundary_dofs: &[usize]) -> Result<Self> {
        let mut boundary_index = alloc::vec![NONE; n];
        let mut boundary = boundary_dofs.to_vec();
        boundary.sort_unstable();
        boundary.dedup();
        for (k, &v) in boundary.iter().enumerate() {
            if v >= n {
                return Err(Error::Dimension { expected: n, found: v });
            }
            boundary_index[v] = k;
        }
        let mut interior = Vec::with_capacity(n - boundary.len());
        let mut interior_index = alloc::vec![NONE; n];
        for v in 0..n {
            if boundary_index[v] == NONE {
                interior_index[v] = interior.len();
                interior.push(v);
            }
        }
        Ok(Self {
            boundary,
            interior,
            boundary_index,
            interior_index,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.boundary_index.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    /// Global dofs of the boundary, in boundary numbering order.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    #[inline]
    pub fn boundary_index(&self, dof: usize) -> Option<usize> {
        let k = self.boundary_index[dof];
        (k != NONE).then_some(k)
    }

    #[inline]
    pub fn interior_index(&self, dof: usize) -> Option<usize> {
        let k = self.interior_index[dof];
        (k != NONE).then_some(k)
    }

    pub fn restrict_boundary(&self, full: &[f64]) -> Vec<f64> {
        self.boundary.iter().map(|&v| full[v]).collect()
    }

    pub fn restrict_interior(&self, full: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&v| full[v]).collect()
    }

    /// Extension by zero: boundary values in place, zero at interior dofs.
    pub fn extend_by_zero(&self, boundary_values: &[f64]) -> Vec<f64> {
        let mut full = alloc::vec![0.0; self.n_dofs()];
        for (&v, &x) in self.boundary.iter().zip(boundary_values) {
            full[v] = x;
        }
        full
    }

    /// Full vector from separate boundary and interior parts.
    pub fn combine(&self, boundary_values: &[f64], interior_values: &[f64]) -> Vec<f64> {
        let mut full = self.extend_by_zero(boundary_values);
        for (&v, &x) in self.interior.iter().zip(interior_values) {
            full[v] = x;
        }
        full
    }
}

/// Volume and barycentric gradients of a tetrahedron.
#[derive(Debug, Clone, Copy)]
pub struct TetGeometry {
    pub volume: f64,
    pub gradients: [Point; 4],
}

impl TetGeometry {
    pub fn new(p: [&Point; 4]) -> Self {
        let e1 = sub(p[1], p[0]);
        let e2 = sub(p[2], p[0]);
        let e3 = sub(p[3], p[0]);
        let det = dot(&e1, &cross(&e2, &e3));
        let g1 = cross(&e2, &e3).map(|c| c / det);
        let g2 = cross(&e3, &e1).map(|c| c / det);
        let g3 = cross(&e1, &e2).map(|c| c / det);
        let g0 = core::array::from_fn(|d| -(g1[d] + g2[d] + g3[d]));
        Self {
            volume: det / 6.0,
            gradients: [g0, g1, g2, g3],
        }
    }

    /// Gradient of the P1 function with nodal values `u`.
    pub fn gradient(&self, u: [f64; 4]) -> Point {
        core::array::from_fn(|d| (0..4).map(|i| u[i] * self.gradients[i][d]).sum())
    }
}

fn checked_geometry(mesh: &Mesh, cell: usize) -> Result<TetGeometry> {
    let geo = TetGeometry::new(mesh.tet_points(cell));
    if !(geo.volume > 0.0) {
        return Err(Error::DegenerateCell {
            cell,
            volume: geo.volume,
        });
    }
    Ok(geo)
}

fn volume_pattern(mesh: &Mesh) -> CsrMatrix {
    CsrMatrix::from_cliques(mesh.n_vertices(), mesh.tets().iter().copied())
}

/// `(∇φ_i, ∇φ_j)` over all vertices.
pub fn assemble_stiffness(mesh: &Mesh) -> Result<CsrMatrix> {
    let mut a = volume_pattern(mesh);
    for (c, t) in mesh.tets().iter().enumerate() {
        let geo = checked_geometry(mesh, c)?;
        for i in 0..4 {
            for j in 0..4 {
                let v = geo.volume * dot(&geo.gradients[i], &geo.gradients[j]);
                a.add_to(t[i], t[j], v);
            }
        }
    }
    Ok(a)
}

/// `(φ_i, φ_j)_Ω`, exact for P1.
pub fn assemble_mass_domain(mesh: &Mesh) -> Result<CsrMatrix> {
    let mut m = volume_pattern(mesh);
    for (c, t) in mesh.tets().iter().enumerate() {
        let vol = checked_geometry(mesh, c)?.volume;
        for i in 0..4 {
            for j in 0..4 {
                let factor = if i == j { 2.0 } else { 1.0 };
                m.add_to(t[i], t[j], factor * vol / 20.0);
            }
        }
    }
    Ok(m)
}

/// `(φ_y, φ_z)_∂Ω` on boundary dofs, in boundary numbering.
pub fn assemble_mass_boundary(mesh: &Mesh, dofs: &DofMap) -> CsrMatrix {
    let local = |f: [usize; 3]| f.map(|v| dofs.boundary_index(v).expect("boundary face vertex"));
    let mut m = CsrMatrix::from_cliques(
        dofs.n_boundary(),
        mesh.boundary_faces().iter().map(|f| local(f.vertices)),
    );
    for face in mesh.boundary_faces() {
        let area = triangle_area(mesh.face_points(face));
        let l = local(face.vertices);
        for i in 0..3 {
            for j in 0..3 {
                let factor = if i == j { 2.0 } else { 1.0 };
                m.add_to(l[i], l[j], factor * area / 12.0);
            }
        }
    }
    m
}

/// Calls `visit(cell, bary, x, weight)` for every quadrature point of every
/// cell; `weight` already includes the cell volume.
pub fn for_each_cell_point(
    mesh: &Mesh,
    rule: &TetRule,
    mut visit: impl FnMut(usize, &[f64; 4], &Point, f64),
) {
    let ref_measure = rule.reference_measure();
    for c in 0..mesh.n_tets() {
        let p = mesh.tet_points(c);
        let vol = crate::geom::signed_volume(p);
        for (bary, w) in rule.iter() {
            let x = barycentric_point(p, bary);
            visit(c, bary, &x, w * vol / ref_measure);
        }
    }
}

/// Boundary analogue of [`for_each_cell_point`]; the first argument is the
/// index into [`Mesh::boundary_faces`].
pub fn for_each_face_point(
    mesh: &Mesh,
    rule: &TriangleRule,
    mut visit: impl FnMut(usize, &[f64; 3], &Point, f64),
) {
    let ref_measure = rule.reference_measure();
    for (k, face) in mesh.boundary_faces().iter().enumerate() {
        let p = mesh.face_points(face);
        let area = triangle_area(p);
        for (bary, w) in rule.iter() {
            let x = barycentric_point(p, bary);
            visit(k, bary, &x, w * area / ref_measure);
        }
    }
}

/// `(f, φ_i)_Ω` over all vertices, by a tetrahedron rule of `quad_degree`.
pub fn assemble_load(mesh: &Mesh, f: impl Fn(&Point) -> f64, quad_degree: usize) -> Vec<f64> {
    let rule = TetRule::with_degree(quad_degree);
    let mut load = alloc::vec![0.0; mesh.n_vertices()];
    for_each_cell_point(mesh, &rule, |c, bary, x, w| {
        let fx = f(x) * w;
        for (i, &v) in mesh.tets()[c].iter().enumerate() {
            load[v] += fx * bary[i];
        }
    });
    load
}

/// `(g, φ_y)_∂Ω` over boundary dofs, by a triangle rule of `quad_degree`.
pub fn assemble_boundary_load(
    mesh: &Mesh,
    dofs: &DofMap,
    g: impl Fn(&Point) -> f64,
    quad_degree: usize,
) -> Vec<f64> {
    let rule = TriangleRule::with_degree(quad_degree);
    let mut load = alloc::vec![0.0; dofs.n_boundary()];
    let faces = mesh.boundary_faces();
    for_each_face_point(mesh, &rule, |k, bary, x, w| {
        let gx = g(x) * w;
        for (i, &v) in faces[k].vertices.iter().enumerate() {
            load[dofs.boundary_index(v).expect("boundary face vertex")] += gx * bary[i];
        }
    });
    load
}

/// `‖u_h - exact‖_{L2(Ω)}` with `u_h` given by nodal values on all vertices.
pub fn integrate_l2_error_domain(
    mesh: &Mesh,
    coeffs: &[f64],
    exact: impl Fn(&Point) -> f64,
    quad_degree: usize,
) -> f64 {
    assert_eq!(coeffs.len(), mesh.n_vertices());
    let rule = TetRule::with_degree(quad_degree);
    let mut sum = 0.0;
    for_each_cell_point(mesh, &rule, |c, bary, x, w| {
        let t = mesh.tets()[c];
        let uh: f64 = (0..4).map(|i| bary[i] * coeffs[t[i]]).sum();
        sum += w * (uh - exact(x)).powi(2);
    });
    sum.sqrt()
}

/// `‖map(q_h) - exact‖_{L2(∂Ω)}` with `q_h` given by boundary nodal values;
/// `map` is applied pointwise to the interpolated value.
pub fn boundary_l2_error_with(
    mesh: &Mesh,
    dofs: &DofMap,
    coeffs: &[f64],
    map: impl Fn(f64) -> f64,
    exact: impl Fn(&Point) -> f64,
    quad_degree: usize,
) -> f64 {
    assert_eq!(coeffs.len(), dofs.n_boundary());
    let rule = TriangleRule::with_degree(quad_degree);
    let faces = mesh.boundary_faces();
    let mut sum = 0.0;
    for_each_face_point(mesh, &rule, |k, bary, x, w| {
        let qh: f64 = (0..3)
            .map(|i| bary[i] * coeffs[dofs.boundary_index(faces[k].vertices[i]).unwrap()])
            .sum();
        sum += w * (map(qh) - exact(x)).powi(2);
    });
    sum.sqrt()
}

/// `‖q_h - exact‖_{L2(∂Ω)}` with `q_h` given by boundary nodal values.
pub fn integrate_l2_error_boundary(
    mesh: &Mesh,
    dofs: &DofMap,
    coeffs: &[f64],
    exact: impl Fn(&Point) -> f64,
    quad_degree: usize,
) -> f64 {
    boundary_l2_error_with(mesh, dofs, coeffs, |q| q, exact, quad_degree)
}

/// `‖ρ̃^{1/2} ∇u_h‖_{L2(Ω)}` with `ρ̃ = sqrt(ρ² + κ²h²)`, `ρ` the distance to
/// the boundary and `h` the mesh size.
pub fn weighted_gradient_norm(mesh: &Mesh, coeffs: &[f64], kappa: f64) -> Result<f64> {
    if !(kappa >= 1.0) {
        return Err(Error::Data(alloc::format!("weight parameter κ = {kappa} must be ≥ 1")));
    }
    assert_eq!(coeffs.len(), mesh.n_vertices());
    let kh = kappa * mesh.mesh_size();
    let rule = TetRule::degree5();
    let ref_measure = rule.reference_measure();
    let mut sum = 0.0;
    for (c, t) in mesh.tets().iter().enumerate() {
        let p = mesh.tet_points(c);
        let geo = checked_geometry(mesh, c)?;
        let grad = geo.gradient(t.map(|v| coeffs[v]));
        let mut weight = 0.0;
        for (bary, w) in rule.iter() {
            let rho = mesh.domain().distance_to_boundary(&barycentric_point(p, bary))?;
            weight += w * (rho * rho + kh * kh).sqrt();
        }
        sum += dot(&grad, &grad) * weight * geo.volume / ref_measure;
    }
    Ok(sum.sqrt())
}

/// `‖∇u_h‖_{L2(Ω)}`.
pub fn gradient_norm(mesh: &Mesh, coeffs: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for (c, t) in mesh.tets().iter().enumerate() {
        let geo = checked_geometry(mesh, c)?;
        let g = geo.gradient(t.map(|v| coeffs[v]));
        sum += geo.volume * dot(&g, &g);
    }
    Ok(sum.sqrt())
}

/// Nodal interpolant on all vertices.
pub fn interpolate(mesh: &Mesh, g: impl Fn(&Point) -> f64) -> Vec<f64> {
    mesh.vertices().iter().map(g).collect()
}

/// Nodal interpolant on boundary dofs.
pub fn interpolate_boundary(mesh: &Mesh, dofs: &DofMap, g: impl Fn(&Point) -> f64) -> Vec<f64> {
    dofs.boundary().iter().map(|&v| g(&mesh.vertices()[v])).collect()
}
