//! Solvers for the discrete reduced problem under both control concepts.
//!
//! With the piecewise linear concept the control is sought in `V_h^∂` with
//! the bounds imposed at boundary vertices, which turns the problem into a
//! box-constrained quadratic program solved by a primal-dual active set
//! method. With the variational concept the optimal control is the pointwise
//! cutoff `clamp(α^{-1} ∂_n^h z_h)` of a trace function; it is computed by a
//! damped fixed-point iteration on that representation.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::control::{
    AdjointField, ControlProblem, ControlVector, ErrorSlot, StateField, DATA_QUAD_DEGREE,
};
use crate::fem::{boundary_l2_error_with, for_each_face_point, DofMap};
use crate::mesh::Mesh;
use crate::quadrature::TriangleRule;
use crate::solver::{cg_solve_with, CgOptions, FnOperator, SolveReport};
use crate::{Error, Point, Result};

/// How the discrete control space is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Concept {
    /// Controls are the cutoff of a discrete normal derivative.
    Variational,
    /// Controls are continuous piecewise linear with nodal bounds.
    #[default]
    PiecewiseLinear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Relative tolerance of the outer iteration.
    pub tol: f64,
    /// Active-set or fixed-point iterations.
    pub max_outer: usize,
    /// Conjugate-gradient iterations per reduced Hessian solve.
    pub max_cg: usize,
    pub concept: Concept,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_outer: 100,
            max_cg: 2000,
            concept: Concept::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn with_concept(concept: Concept) -> Self {
        Self {
            concept,
            ..Self::default()
        }
    }
}

/// Activity of a boundary vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Lower,
    Free,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ActiveCounts {
    pub lower: usize,
    pub upper: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizerReport {
    pub converged: bool,
    pub outer_iterations: usize,
    /// Iterations of the reduced-Hessian conjugate gradients.
    pub cg_iterations: usize,
    /// Final optimality residual, see [`optimality_residual`].
    pub residual: f64,
    pub cost_history: Vec<f64>,
    pub active_history: Vec<ActiveCounts>,
}

/// A discrete optimal control with its state and adjoint.
#[derive(Debug, Clone)]
pub struct Solution {
    pub concept: Concept,
    /// Nodal coefficients. For the variational concept these describe the
    /// trace function whose cutoff is the control.
    pub control: ControlVector,
    pub state: StateField,
    pub adjoint: AdjointField,
    pub report: OptimizerReport,
}

impl Solution {
    /// Control value at a boundary point where the nodal representation
    /// evaluates to `nodal`.
    pub fn control_value(&self, problem: &ControlProblem<'_>, nodal: f64) -> f64 {
        match self.concept {
            Concept::Variational => problem.data().clamp(nodal),
            Concept::PiecewiseLinear => nodal,
        }
    }

    /// `‖q_h - exact‖_{L2(∂Ω)}`.
    pub fn control_error(&self, problem: &ControlProblem<'_>, exact: impl Fn(&Point) -> f64) -> f64 {
        boundary_l2_error_with(
            problem.mesh(),
            problem.dofs(),
            &self.control,
            |v| self.control_value(problem, v),
            exact,
            DATA_QUAD_DEGREE,
        )
    }
}

/// Solves the discrete problem with the configured concept.
pub fn solve(problem: &ControlProblem<'_>, config: &OptimizerConfig) -> Result<Solution> {
    match config.concept {
        Concept::Variational => solve_variational(problem, config),
        Concept::PiecewiseLinear if problem.data().is_unconstrained() => {
            solve_unconstrained(problem, config)
        }
        Concept::PiecewiseLinear => solve_pdas(problem, config),
    }
}

/// Lumped boundary mass: row sums of `M_∂`.
fn lumped_mass(problem: &ControlProblem<'_>) -> Vec<f64> {
    problem.boundary_mass().row_sums()
}

/// Solves `K_FF x_F = rhs_F` on the free vertices, where `K = M_∂ H` and the
/// remaining entries of `x` stay fixed at their values in `x0`.
fn solve_reduced(
    problem: &ControlProblem<'_>,
    config: &OptimizerConfig,
    rhs: &[f64],
    x0: &[f64],
    free: &[usize],
) -> Result<(Vec<f64>, SolveReport)> {
    let n = problem.n_controls();
    let slot = ErrorSlot::new();
    let op = FnOperator::new(free.len(), |x: &[f64], y: &mut [f64]| {
        slot.fill(y, || {
            let mut full = alloc::vec![0.0; n];
            free.iter().zip(x).for_each(|(&i, &v)| full[i] = v);
            let k = problem.hessian_functional(&full)?;
            Ok(free.iter().map(|&i| k[i]).collect())
        });
    });
    let alpha = problem.data().alpha();
    let diagonal = problem.boundary_mass().diagonal();
    let precond: Vec<f64> = free.iter().map(|&i| alpha * diagonal[i]).collect();
    let opts = CgOptions {
        tol_rel: config.tol,
        max_iter: Some(config.max_cg),
    };
    let start = free.iter().map(|&i| x0[i]).collect();
    let result = cg_solve_with(&op, rhs, start, &opts, Some(&precond), |_| {});
    if let Some(e) = slot.take() {
        return Err(e);
    }
    let (x_free, report) = result?;
    let mut x = x0.to_vec();
    free.iter().zip(x_free).for_each(|(&i, v)| x[i] = v);
    Ok((x, report))
}

fn finish(
    problem: &ControlProblem<'_>,
    concept: Concept,
    control: ControlVector,
    state: StateField,
    mut report: OptimizerReport,
) -> Result<Solution> {
    let adjoint = problem.solve_adjoint(&state)?;
    let mut solution = Solution {
        concept,
        control,
        state,
        adjoint,
        report: OptimizerReport::default(),
    };
    report.residual = optimality_residual(problem, &solution)?;
    solution.report = report;
    Ok(solution)
}

/// Minimizes the reduced cost without bounds: one conjugate-gradient solve
/// of `M_∂ H q = -∇j(0)` in nodal coordinates.
pub fn solve_unconstrained(problem: &ControlProblem<'_>, config: &OptimizerConfig) -> Result<Solution> {
    let n = problem.n_controls();
    let zero = ControlVector::zeros(n);
    let c: Vec<f64> = problem.gradient_functional(&zero)?.iter().map(|g| -g).collect();
    let all: Vec<usize> = (0..n).collect();
    let (q, cg) = solve_reduced(problem, config, &c, &zero, &all)?;
    let q = ControlVector::new(q);
    let state = problem.solve_state(&q)?;
    let report = OptimizerReport {
        converged: cg.converged,
        outer_iterations: 1,
        cg_iterations: cg.iterations,
        cost_history: alloc::vec![problem.reduced_cost(&q)?],
        active_history: alloc::vec![ActiveCounts::default()],
        ..Default::default()
    };
    finish(problem, Concept::PiecewiseLinear, q, state, report)
}

fn classify(problem: &ControlProblem<'_>, q: &[f64], gradient: &[f64]) -> Vec<Bound> {
    let data = problem.data();
    let alpha = data.alpha();
    q.iter()
        .zip(gradient)
        .map(|(&q, &g)| {
            let trial = q - g / alpha;
            if data.lower() == data.upper() || trial < data.lower() {
                Bound::Lower
            } else if trial > data.upper() {
                Bound::Upper
            } else {
                Bound::Free
            }
        })
        .collect()
}

/// Primal-dual active set method for the nodal box constraints.
///
/// The multiplier is the nodal gradient `(M_∂ H q - c) / m` with the lumped
/// boundary mass `m`. Stops when the active set repeats; running out of
/// iterations is reported as [`Error::ActiveSetCycling`].
pub fn solve_pdas(problem: &ControlProblem<'_>, config: &OptimizerConfig) -> Result<Solution> {
    let data = problem.data();
    if !data.has_finite_bounds() {
        return Err(Error::Data("active set method needs finite bounds".into()));
    }
    let n = problem.n_controls();
    let m = lumped_mass(problem);
    let zero = ControlVector::zeros(n);
    let cost0 = problem.reduced_cost(&zero)?;
    let c: Vec<f64> = problem.gradient_functional(&zero)?.iter().map(|g| -g).collect();

    let mut q = alloc::vec![0.0; n];
    let mut gradient: Vec<f64> = c.iter().zip(&m).map(|(c, m)| -c / m).collect();
    let mut previous: Option<Vec<Bound>> = None;
    let mut report = OptimizerReport::default();
    let mut changes = Vec::new();

    for _ in 0..config.max_outer {
        let active = classify(problem, &q, &gradient);
        if let Some(prev) = &previous {
            let changed = prev.iter().zip(&active).filter(|(a, b)| a != b).count();
            changes.push(changed);
            if changed == 0 {
                report.converged = true;
                break;
            }
        }
        report.outer_iterations += 1;
        let mut free = Vec::new();
        let mut counts = ActiveCounts::default();
        for (i, b) in active.iter().enumerate() {
            match b {
                Bound::Lower => {
                    q[i] = data.lower();
                    counts.lower += 1;
                }
                Bound::Upper => {
                    q[i] = data.upper();
                    counts.upper += 1;
                }
                Bound::Free => free.push(i),
            }
        }
        report.active_history.push(counts);

        if !free.is_empty() {
            // K_FF q_F = c_F - K_FA q_A
            let mut fixed = q.clone();
            free.iter().for_each(|&i| fixed[i] = 0.0);
            let k_fixed = problem.hessian_functional(&fixed)?;
            let rhs: Vec<f64> = free.iter().map(|&i| c[i] - k_fixed[i]).collect();
            let (solved, cg) = solve_reduced(problem, config, &rhs, &q, &free)?;
            report.cg_iterations += cg.iterations;
            q = solved;
        }
        let kq = problem.hessian_functional(&q)?;
        gradient = kq.iter().zip(&c).zip(&m).map(|((k, c), m)| (k - c) / m).collect();
        let quadratic: f64 = q.iter().zip(&kq).zip(&c).map(|((q, k), c)| q * (0.5 * k - c)).sum();
        report.cost_history.push(cost0 + quadratic);
        previous = Some(active);
    }
    if !report.converged {
        return Err(Error::ActiveSetCycling {
            iterations: report.outer_iterations,
            changes,
        });
    }
    let q = ControlVector::new(q);
    let state = problem.solve_state(&q)?;
    finish(problem, Concept::PiecewiseLinear, q, state, report)
}

/// `‖clamp(a) - clamp(b)‖_{L2(∂Ω)}` for two trace functions.
fn cutoff_distance(problem: &ControlProblem<'_>, a: &[f64], b: &[f64]) -> f64 {
    let data = problem.data();
    let rule = TriangleRule::with_degree(DATA_QUAD_DEGREE);
    let faces = problem.mesh().boundary_faces();
    let dofs = problem.dofs();
    let mut sum = 0.0;
    for_each_face_point(problem.mesh(), &rule, |k, bary, _, w| {
        let (mut va, mut vb) = (0.0, 0.0);
        for (&v, &l) in faces[k].vertices.iter().zip(bary) {
            let j = dofs.boundary_index(v).unwrap();
            va += l * a[j];
            vb += l * b[j];
        }
        sum += w * (data.clamp(va) - data.clamp(vb)).powi(2);
    });
    sum.sqrt()
}

/// One evaluation of `p ↦ α^{-1} ∂_n^h z_h(P_h^∂ clamp(p))`.
fn trace_map(problem: &ControlProblem<'_>, p: &[f64]) -> Result<(ControlVector, StateField)> {
    let q = problem.project_cutoff(p)?;
    let u = problem.solve_state(&q)?;
    let z = problem.solve_adjoint(&u)?;
    let t = problem.normal_trace(&u, &z)?;
    let alpha = problem.data().alpha();
    Ok((ControlVector::new(t.iter().map(|t| t / alpha).collect()), u))
}

/// Variational concept. Without bounds, or when the unconstrained optimum
/// is admissible, this coincides with the unconstrained problem.
pub fn solve_variational(problem: &ControlProblem<'_>, config: &OptimizerConfig) -> Result<Solution> {
    let data = problem.data();
    let unconstrained = solve_unconstrained(problem, config)?;
    let admissible = unconstrained
        .control
        .iter()
        .all(|&q| data.lower() <= q && q <= data.upper());
    if data.is_unconstrained() || admissible {
        return Ok(Solution {
            concept: Concept::Variational,
            ..unconstrained
        });
    }
    solve_variational_fixed_point(problem, config)
}

/// Damped fixed-point iteration `p ← p + θ (α^{-1} ∂_n^h z_h(P_h^∂ clamp(p)) - p)`
/// from `p = 0`, regardless of whether any bound is active.
pub fn solve_variational_fixed_point(
    problem: &ControlProblem<'_>,
    config: &OptimizerConfig,
) -> Result<Solution> {
    let n = problem.n_controls();
    let mut report = OptimizerReport::default();
    let mut p = ControlVector::zeros(n);
    let (mut tp, mut state) = trace_map(problem, &p)?;
    let mut residual = cutoff_distance(problem, &p, &tp);
    let scale = cutoff_distance(problem, &alloc::vec![0.0; n], &tp);
    let mut residuals = alloc::vec![residual];
    let mut theta = 1.0;
    while residual > config.tol * scale {
        if report.outer_iterations == config.max_outer {
            return Err(Error::FixedPoint { residuals });
        }
        report.outer_iterations += 1;
        // Halve the step until the residual decreases; a step at the floor
        // is taken regardless.
        loop {
            let candidate = ControlVector::new(
                p.iter().zip(tp.iter()).map(|(p, t)| p + theta * (t - p)).collect(),
            );
            let (t_candidate, u_candidate) = trace_map(problem, &candidate)?;
            let r = cutoff_distance(problem, &candidate, &t_candidate);
            if r < residual || theta <= 1.0 / 16.0 {
                p = candidate;
                tp = t_candidate;
                state = u_candidate;
                residual = r;
                theta = (2.0 * theta).min(1.0);
                break;
            }
            theta *= 0.5;
        }
        residuals.push(residual);
        report.cost_history.push(variational_cost(problem, &p, &state));
    }
    report.converged = true;
    report.active_history.push(active_counts(problem, &p));
    finish(problem, Concept::Variational, p, state, report)
}

/// `½‖u_h - u_d‖² + (α/2) ‖clamp(p)‖²_{L2(∂Ω)}` for the state `u_h` of `clamp(p)`.
pub fn variational_cost(problem: &ControlProblem<'_>, p: &[f64], state: &StateField) -> f64 {
    let zero = alloc::vec![0.0; p.len()];
    let norm = cutoff_distance(problem, p, &zero);
    problem.tracking_cost(state) + 0.5 * problem.data().alpha() * norm * norm
}

fn active_counts(problem: &ControlProblem<'_>, p: &[f64]) -> ActiveCounts {
    let data = problem.data();
    ActiveCounts {
        lower: p.iter().filter(|&&v| v < data.lower()).count(),
        upper: p.iter().filter(|&&v| v > data.upper()).count(),
    }
}

/// Distance of a solution from satisfying its discrete optimality system.
///
/// For the piecewise linear concept this is `‖q - clamp(q - μ)‖_{M_∂}` with
/// the nodal gradient `μ`; for the variational concept it is
/// `‖clamp(p) - clamp(α^{-1} ∂_n^h z_h)‖_{L2(∂Ω)}`.
pub fn optimality_residual(problem: &ControlProblem<'_>, solution: &Solution) -> Result<f64> {
    match solution.concept {
        Concept::PiecewiseLinear => {
            let data = problem.data();
            let m = lumped_mass(problem);
            let g = problem.gradient_functional(&solution.control)?;
            let rho: Vec<f64> = solution
                .control
                .iter()
                .zip(g.iter().zip(&m))
                .map(|(&q, (g, m))| q - data.clamp(q - g / m))
                .collect();
            Ok(problem.boundary_norm(&rho))
        }
        Concept::Variational => {
            let (tp, _) = trace_map(problem, &solution.control)?;
            Ok(cutoff_distance(problem, &solution.control, &tp))
        }
    }
}

/// Nodal quasi-interpolation `(g, φ_y)_∂Ω / (1, φ_y)_∂Ω` onto `V_h^∂`.
///
/// Each value is a convex combination of samples of `g`, and is clipped to
/// the range of those samples so that bounds on `g` survive rounding.
pub fn quasi_interpolate(mesh: &Mesh, dofs: &DofMap, g: impl Fn(&Point) -> f64) -> ControlVector {
    let n = dofs.n_boundary();
    let rule = TriangleRule::with_degree(DATA_QUAD_DEGREE);
    let faces = mesh.boundary_faces();
    let mut weighted = alloc::vec![0.0; n];
    let mut mass = alloc::vec![0.0; n];
    let mut range = alloc::vec![(f64::INFINITY, f64::NEG_INFINITY); n];
    for_each_face_point(mesh, &rule, |k, bary, x, w| {
        let gx = g(x);
        for (&v, &l) in faces[k].vertices.iter().zip(bary) {
            let j = dofs.boundary_index(v).unwrap();
            weighted[j] += w * l * gx;
            mass[j] += w * l;
            range[j] = (range[j].0.min(gx), range[j].1.max(gx));
        }
    });
    ControlVector::new(
        weighted
            .iter()
            .zip(&mass)
            .zip(&range)
            .map(|((a, m), &(lo, hi))| (a / m).clamp(lo, hi))
            .collect(),
    )
}
