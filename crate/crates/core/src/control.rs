//! Discrete building blocks of the reduced control problem.
//!
//! Controls live in the trace space `V_h^∂` (nodal values on boundary
//! vertices, in [`DofMap`] boundary numbering). The discrete state is
//! `u_h ∈ E_h q + V_h` with `(∇u_h, ∇φ) = (f, φ)` for all `φ ∈ V_h`, the
//! adjoint `z_h ∈ V_h` solves `(∇φ, ∇z_h) = (u_h - u_d, φ)`, and the
//! variational normal trace `t ∈ V_h^∂` is the Riesz representative in
//! `L2(∂Ω)` of `ψ ↦ (∇z_h, ∇B_h ψ) - (u_h - u_d, B_h ψ)`. The reduced
//! gradient is `α q - t`.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::ops::Deref;
use core::sync::atomic::{AtomicUsize, Ordering};

#[allow(unused_imports)]
use num_traits::Float;

use crate::fem::{
    assemble_boundary_load, assemble_load, assemble_mass_boundary, assemble_mass_domain,
    assemble_stiffness, for_each_face_point, integrate_l2_error_domain, DofMap,
};
use crate::mesh::Mesh;
use crate::quadrature::TriangleRule;
use crate::solver::{
    boundary_interior_apply, cg_solve, eliminate_dirichlet, CgOptions, InteriorOperator,
};
use crate::sparse::CsrMatrix;
use crate::{Error, Point, Result};

/// Quadrature degree used for data (`f`, `u_d`, boundary data) and errors.
pub const DATA_QUAD_DEGREE: usize = 4;

macro_rules! nodal_field {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Vec<f64>);

        impl $name {
            pub fn new(values: Vec<f64>) -> Self {
                Self(values)
            }

            pub fn zeros(n: usize) -> Self {
                Self(alloc::vec![0.0; n])
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }
    };
}

nodal_field!(
    /// Nodal coefficients of a boundary function in `V_h^∂`.
    ControlVector
);
nodal_field!(
    /// Nodal values of a discrete state on all vertices.
    StateField
);
nodal_field!(
    /// Nodal values of a discrete adjoint on all vertices; zero on the boundary.
    AdjointField
);

pub type ScalarField = Box<dyn Fn(&Point) -> f64 + Send + Sync>;

/// Regularization, control bounds, source and desired state.
pub struct ProblemData {
    alpha: f64,
    lower: f64,
    upper: f64,
    source: Option<ScalarField>,
    desired: Option<ScalarField>,
}

impl core::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ProblemData")
            .field("alpha", &self.alpha)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("source", &self.source.is_some())
            .field("desired", &self.desired.is_some())
            .finish()
    }
}

impl ProblemData {
    /// Unconstrained problem with `f = 0`, `u_d = 0`.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Data(alloc::format!("α = {alpha} must be positive")));
        }
        Ok(Self {
            alpha,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            source: None,
            desired: None,
        })
    }

    /// Box constraints `lower ≤ q ≤ upper`. Zero must be admissible; the
    /// degenerate box `lower = upper = 0` is allowed.
    pub fn with_bounds(mut self, lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || !(lower <= 0.0 && 0.0 <= upper) {
            return Err(Error::Data(alloc::format!(
                "bounds [{lower}, {upper}] must satisfy lower ≤ 0 ≤ upper"
            )));
        }
        self.lower = lower;
        self.upper = upper;
        Ok(self)
    }

    pub fn with_source(mut self, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        self.source = Some(Box::new(f));
        self
    }

    pub fn with_desired(mut self, u_d: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        self.desired = Some(Box::new(u_d));
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn has_finite_bounds(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }

    pub fn is_unconstrained(&self) -> bool {
        self.lower == f64::NEG_INFINITY && self.upper == f64::INFINITY
    }

    pub fn source(&self, x: &Point) -> f64 {
        self.source.as_ref().map_or(0.0, |f| f(x))
    }

    pub fn desired(&self, x: &Point) -> f64 {
        self.desired.as_ref().map_or(0.0, |f| f(x))
    }

    /// Pointwise projection onto `[lower, upper]`.
    #[inline]
    pub fn clamp(&self, q: f64) -> f64 {
        q.max(self.lower).min(self.upper)
    }
}

/// Which discrete extension `B_h` enters the normal trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Extension {
    /// Boundary values in place, zero at interior vertices.
    #[default]
    Zero,
    /// Discrete harmonic extension; costs one extra interior solve.
    Harmonic,
}

/// Assembled operators for one mesh and one set of problem data.
#[derive(Debug)]
pub struct ControlProblem<'a> {
    mesh: &'a Mesh,
    data: &'a ProblemData,
    dofs: DofMap,
    stiffness: CsrMatrix,
    mass: CsrMatrix,
    boundary_mass: CsrMatrix,
    interior_diagonal: Vec<f64>,
    boundary_mass_diagonal: Vec<f64>,
    source_load: Vec<f64>,
    desired_load: Vec<f64>,
    options: CgOptions,
    iterations: AtomicUsize,
}

impl<'a> ControlProblem<'a> {
    pub fn new(mesh: &'a Mesh, data: &'a ProblemData) -> Result<Self> {
        Self::with_options(mesh, data, CgOptions::default())
    }

    /// `options` governs every inner PDE and boundary-mass solve.
    pub fn with_options(mesh: &'a Mesh, data: &'a ProblemData, options: CgOptions) -> Result<Self> {
        let dofs = DofMap::new(mesh);
        let stiffness = assemble_stiffness(mesh)?;
        let mass = assemble_mass_domain(mesh)?;
        let boundary_mass = assemble_mass_boundary(mesh, &dofs);
        let interior_diagonal = InteriorOperator::new(&stiffness, &dofs).diagonal();
        let boundary_mass_diagonal = boundary_mass.diagonal();
        let source_load = match &data.source {
            Some(f) => assemble_load(mesh, f, DATA_QUAD_DEGREE),
            None => alloc::vec![0.0; mesh.n_vertices()],
        };
        let desired_load = match &data.desired {
            Some(u_d) => assemble_load(mesh, u_d, DATA_QUAD_DEGREE),
            None => alloc::vec![0.0; mesh.n_vertices()],
        };
        Ok(Self {
            mesh,
            data,
            dofs,
            stiffness,
            mass,
            boundary_mass,
            interior_diagonal,
            boundary_mass_diagonal,
            source_load,
            desired_load,
            options,
            iterations: AtomicUsize::new(0),
        })
    }

    pub fn mesh(&self) -> &'a Mesh {
        self.mesh
    }

    pub fn data(&self) -> &'a ProblemData {
        self.data
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn boundary_mass(&self) -> &CsrMatrix {
        &self.boundary_mass
    }

    /// `(u_d, φ_i)_Ω` on all vertices.
    pub fn desired_load(&self) -> &[f64] {
        &self.desired_load
    }

    /// `(f, φ_i)_Ω` on all vertices.
    pub fn source_load(&self) -> &[f64] {
        &self.source_load
    }

    pub fn options(&self) -> &CgOptions {
        &self.options
    }

    pub fn n_controls(&self) -> usize {
        self.dofs.n_boundary()
    }

    /// Conjugate-gradient iterations spent in inner solves so far.
    pub fn inner_iterations(&self) -> usize {
        self.iterations.load(Ordering::Relaxed)
    }

    fn count(&self, iterations: usize) {
        self.iterations.fetch_add(iterations, Ordering::Relaxed);
    }

    fn check_control(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.n_controls() {
            return Err(Error::Dimension {
                expected: self.n_controls(),
                found: q.len(),
            });
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("control has non-finite entries".into()));
        }
        Ok(())
    }

    /// `qᵀ M_∂ q`, the squared `L2(∂Ω)` norm of a trace function.
    pub fn boundary_norm_sq(&self, q: &[f64]) -> f64 {
        self.boundary_mass.bilinear(q, q)
    }

    pub fn boundary_norm(&self, q: &[f64]) -> f64 {
        self.boundary_norm_sq(q).max(0.0).sqrt()
    }

    /// `M_∂ q`.
    pub fn boundary_mass_apply(&self, q: &[f64]) -> Vec<f64> {
        self.boundary_mass.mul_vec(q)
    }

    /// Solves `M_∂ x = rhs`.
    pub fn solve_boundary_mass(&self, rhs: &[f64]) -> Result<ControlVector> {
        let (x, report) = cg_solve(
            &self.boundary_mass,
            rhs,
            &self.options,
            Some(&self.boundary_mass_diagonal),
        )?;
        self.count(report.iterations);
        report.ok()?;
        Ok(ControlVector(x))
    }

    /// `(g, φ_y)_∂Ω` on boundary dofs.
    pub fn boundary_load(&self, g: impl Fn(&Point) -> f64) -> Vec<f64> {
        assemble_boundary_load(self.mesh, &self.dofs, g, DATA_QUAD_DEGREE)
    }

    /// The `L2(∂Ω)` projection `P_h^∂ g`.
    pub fn project_boundary(&self, g: impl Fn(&Point) -> f64) -> Result<ControlVector> {
        self.solve_boundary_mass(&self.boundary_load(g))
    }

    /// `P_h^∂` of the pointwise cutoff `clamp(p(x), lower, upper)` of the
    /// trace function `p`.
    pub fn project_cutoff(&self, p: &[f64]) -> Result<ControlVector> {
        self.check_control(p)?;
        let rule = TriangleRule::with_degree(DATA_QUAD_DEGREE);
        let faces = self.mesh.boundary_faces();
        let local: Vec<[usize; 3]> = faces
            .iter()
            .map(|f| f.vertices.map(|v| self.dofs.boundary_index(v).unwrap()))
            .collect();
        let mut load = alloc::vec![0.0; self.n_controls()];
        for_each_face_point(self.mesh, &rule, |k, bary, _, w| {
            let l = local[k];
            let value: f64 = (0..3).map(|i| bary[i] * p[l[i]]).sum();
            let cut = self.data.clamp(value) * w;
            for i in 0..3 {
                load[l[i]] += cut * bary[i];
            }
        });
        self.solve_boundary_mass(&load)
    }

    /// Solves `A_II x = rhs` on interior dofs.
    fn solve_interior(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let op = InteriorOperator::new(&self.stiffness, &self.dofs);
        let (x, report) = cg_solve(&op, rhs, &self.options, Some(&self.interior_diagonal))?;
        self.count(report.iterations);
        report.ok()?;
        Ok(x)
    }

    fn state_with(&self, q: &[f64], with_source: bool) -> Result<StateField> {
        self.check_control(q)?;
        let (_, lift) = eliminate_dirichlet(&self.stiffness, &self.dofs, q);
        let mut rhs = lift;
        if with_source {
            for (r, &g) in rhs.iter_mut().zip(self.dofs.interior()) {
                *r += self.source_load[g];
            }
        }
        let interior = self.solve_interior(&rhs)?;
        Ok(StateField(self.dofs.combine(q, &interior)))
    }

    /// `u_h = S_h q` including the source term.
    pub fn solve_state(&self, q: &ControlVector) -> Result<StateField> {
        self.state_with(q, true)
    }

    /// `S_h^0 q`: the discrete harmonic extension, source ignored.
    pub fn solve_state_homogeneous(&self, q: &[f64]) -> Result<StateField> {
        self.state_with(q, false)
    }

    /// `(M u)_i - (u_d, φ_i)`, the load of `u_h - u_d`, on all vertices.
    fn tracking_load(&self, u: &[f64], with_desired: bool) -> Vec<f64> {
        let mut load = self.mass.mul_vec(u);
        if with_desired {
            load.iter_mut().zip(&self.desired_load).for_each(|(l, d)| *l -= d);
        }
        load
    }

    fn adjoint_with(&self, u: &[f64], with_desired: bool) -> Result<AdjointField> {
        if u.len() != self.dofs.n_dofs() {
            return Err(Error::Dimension {
                expected: self.dofs.n_dofs(),
                found: u.len(),
            });
        }
        let load = self.tracking_load(u, with_desired);
        let rhs = self.dofs.restrict_interior(&load);
        let interior = self.solve_interior(&rhs)?;
        let zeros = alloc::vec![0.0; self.n_controls()];
        Ok(AdjointField(self.dofs.combine(&zeros, &interior)))
    }

    /// `z_h ∈ V_h` with `(∇φ, ∇z_h) = (u_h - u_d, φ)` for all `φ ∈ V_h`.
    pub fn solve_adjoint(&self, u: &StateField) -> Result<AdjointField> {
        self.adjoint_with(u, true)
    }

    /// Full-length residual vector `v_j = (∇z, ∇φ_j) - (u - u_d, φ_j)`.
    fn trace_functional(&self, u: &[f64], z: &[f64], with_desired: bool) -> Vec<f64> {
        let mut v = self.stiffness.mul_vec(z);
        let load = self.tracking_load(u, with_desired);
        v.iter_mut().zip(load).for_each(|(v, l)| *v -= l);
        v
    }

    fn trace_rhs(&self, v: &[f64], extension: Extension) -> Result<Vec<f64>> {
        let mut r = self.dofs.restrict_boundary(v);
        if extension == Extension::Harmonic {
            // B_h^T v = v_B - A_BI A_II^{-1} v_I.
            let w = self.solve_interior(&self.dofs.restrict_interior(v))?;
            let correction = boundary_interior_apply(&self.stiffness, &self.dofs, &w);
            r.iter_mut().zip(correction).for_each(|(r, c)| *r -= c);
        }
        Ok(r)
    }

    /// The right-hand side `r_y = (∇z_h, ∇E_h φ_y) - (u_h - u_d, E_h φ_y)` of
    /// the normal-trace system `M_∂ t = r`.
    pub fn normal_trace_load(&self, u: &StateField, z: &AdjointField) -> Vec<f64> {
        let v = self.trace_functional(u, z, true);
        self.dofs.restrict_boundary(&v)
    }

    /// The discrete variational normal trace `∂_n^h z_h`, using extension by
    /// zero.
    pub fn normal_trace(&self, u: &StateField, z: &AdjointField) -> Result<ControlVector> {
        self.normal_trace_with(u, z, Extension::Zero)
    }

    pub fn normal_trace_with(
        &self,
        u: &StateField,
        z: &AdjointField,
        extension: Extension,
    ) -> Result<ControlVector> {
        let v = self.trace_functional(u, z, true);
        let r = self.trace_rhs(&v, extension)?;
        self.solve_boundary_mass(&r)
    }

    /// `½‖u_h - u_d‖²_{L2(Ω)}` by quadrature.
    pub fn tracking_cost(&self, u: &StateField) -> f64 {
        0.5 * integrate_l2_error_domain(self.mesh, u, |x| self.data.desired(x), DATA_QUAD_DEGREE)
            .powi(2)
    }

    /// `j_h(q) = ½‖S_h q - u_d‖² + (α/2) ‖q‖²_{L2(∂Ω)}`.
    pub fn reduced_cost(&self, q: &ControlVector) -> Result<f64> {
        let u = self.solve_state(q)?;
        Ok(self.tracking_cost(&u) + 0.5 * self.data.alpha * self.boundary_norm_sq(q))
    }

    /// `M_∂ (α q - ∂_n^h z_h(q))`: the gradient as a functional on `V_h^∂`.
    pub fn gradient_functional(&self, q: &ControlVector) -> Result<Vec<f64>> {
        let u = self.solve_state(q)?;
        let z = self.solve_adjoint(&u)?;
        let r = self.normal_trace_load(&u, &z);
        let mut g = self.boundary_mass.mul_vec(q);
        g.iter_mut().zip(r).for_each(|(g, r)| *g = self.data.alpha * *g - r);
        Ok(g)
    }

    /// `α q - ∂_n^h z_h(q)` as an element of `V_h^∂`.
    pub fn reduced_gradient(&self, q: &ControlVector) -> Result<ControlVector> {
        let u = self.solve_state(q)?;
        let z = self.solve_adjoint(&u)?;
        let t = self.normal_trace(&u, &z)?;
        Ok(ControlVector(
            q.iter().zip(t.iter()).map(|(q, t)| self.data.alpha * q - t).collect(),
        ))
    }

    /// `M_∂ H dq`; the Hessian as a symmetric matrix in nodal coordinates,
    /// `ψᵀ M_∂ H dq = α (ψ, dq)_∂Ω + (S_h^0 ψ, S_h^0 dq)_Ω`.
    pub fn hessian_functional(&self, dq: &[f64]) -> Result<Vec<f64>> {
        let du = self.solve_state_homogeneous(dq)?;
        let dz = self.adjoint_with(&du, false)?;
        let v = self.trace_functional(&du, &dz, false);
        let r = self.dofs.restrict_boundary(&v);
        let mut h = self.boundary_mass.mul_vec(dq);
        h.iter_mut().zip(r).for_each(|(h, r)| *h = self.data.alpha * *h - r);
        Ok(h)
    }

    /// The Hessian applied to `dq`, as an element of `V_h^∂`: one state, one
    /// adjoint and one boundary mass solve.
    pub fn hessian_apply(&self, dq: &ControlVector) -> Result<ControlVector> {
        let h = self.hessian_functional(dq)?;
        self.solve_boundary_mass(&h)
    }
}

/// Runs `f` inside a closure that cannot return errors (operator applies),
/// parking the first error for later.
pub(crate) struct ErrorSlot(RefCell<Option<Error>>);

impl ErrorSlot {
    pub(crate) fn new() -> Self {
        Self(RefCell::new(None))
    }

    /// Fills `y` from `f`, or with NaN after an error so the caller's
    /// iteration stops.
    pub(crate) fn fill(&self, y: &mut [f64], f: impl FnOnce() -> Result<Vec<f64>>) {
        if self.0.borrow().is_some() {
            y.fill(f64::NAN);
            return;
        }
        match f() {
            Ok(v) => y.copy_from_slice(&v),
            Err(e) => {
                *self.0.borrow_mut() = Some(e);
                y.fill(f64::NAN);
            }
        }
    }

    pub(crate) fn take(&self) -> Option<Error> {
        self.0.borrow_mut().take()
    }
}
