//! Derivative consistency and structural properties of the reduced problem.

use std::f64::consts::PI;

use dbcontrol_core::control::{ControlProblem, ControlVector, Extension, ProblemData};
use dbcontrol_core::mesh::{build_prism_mesh, HalfSpaceDomain, Mesh};
use dbcontrol_core::optimizer::{
    quasi_interpolate, solve, solve_pdas, solve_variational_fixed_point, variational_cost, Concept,
    OptimizerConfig,
};
use dbcontrol_core::solver::CgOptions;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn mesh(omega: f64, level: usize) -> Mesh {
    build_prism_mesh(&HalfSpaceDomain::benchmark(omega).unwrap(), level).unwrap()
}

fn data() -> ProblemData {
    ProblemData::new(0.3)
        .unwrap()
        .with_source(|x| (2.0 * x[0]).cos() + x[2])
        .with_desired(|x| x[0] * x[1] - x[2] * x[2] + 0.5)
}

fn random_vector(rng: &mut StdRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn gradient_matches_central_differences() {
    let m = mesh(3.0 * PI / 4.0, 2).perturb_interior(0.1, 2).unwrap();
    let data = data();
    let p = ControlProblem::with_options(&m, &data, CgOptions::with_tol(1e-14)).unwrap();
    let mut rng = StdRng::seed_from_u64(17);
    let q = ControlVector::new(random_vector(&mut rng, p.n_controls()));
    let g = p.gradient_functional(&q).unwrap();
    for _ in 0..10 {
        let d = random_vector(&mut rng, p.n_controls());
        let eps = 1e-3;
        let shifted = |s: f64| {
            ControlVector::new(q.iter().zip(&d).map(|(q, d)| q + s * eps * d).collect())
        };
        let fd = (p.reduced_cost(&shifted(1.0)).unwrap() - p.reduced_cost(&shifted(-1.0)).unwrap()) / (2.0 * eps);
        let exact = dot(&g, &d);
        assert!((fd - exact).abs() <= 1e-6 * exact.abs(), "{fd} vs {exact}");
    }
}

#[test]
fn hessian_energy_identity() {
    let m = mesh(2.0 * PI / 3.0, 2);
    let data = data();
    let p = ControlProblem::with_options(&m, &data, CgOptions::with_tol(1e-14)).unwrap();
    let mut rng = StdRng::seed_from_u64(4);
    for _ in 0..5 {
        let dq = random_vector(&mut rng, p.n_controls());
        let lhs = dot(&dq, &p.hessian_functional(&dq).unwrap());
        let du = p.solve_state_homogeneous(&dq).unwrap();
        let rhs = data.alpha() * p.boundary_norm_sq(&dq) + p.mass().bilinear(&du, &du);
        assert!((lhs - rhs).abs() <= 1e-8 * rhs, "{lhs} vs {rhs}");
    }
}

#[test]
fn hessian_is_symmetric() {
    let m = mesh(PI / 2.0, 1);
    let data = data();
    let p = ControlProblem::with_options(&m, &data, CgOptions::with_tol(1e-14)).unwrap();
    let mut rng = StdRng::seed_from_u64(8);
    let a = random_vector(&mut rng, p.n_controls());
    let b = random_vector(&mut rng, p.n_controls());
    let ab = dot(&a, &p.hessian_functional(&b).unwrap());
    let ba = dot(&b, &p.hessian_functional(&a).unwrap());
    assert!((ab - ba).abs() <= 1e-10 * ab.abs().max(1.0));
}

#[test]
fn normal_trace_is_independent_of_the_extension() {
    for omega in [PI / 2.0, 3.0 * PI / 4.0] {
        let m = mesh(omega, 2).perturb_interior(0.2, 3).unwrap();
        let data = data();
        let p = ControlProblem::with_options(&m, &data, CgOptions::with_tol(1e-14)).unwrap();
        let mut rng = StdRng::seed_from_u64(6);
        let q = ControlVector::new(random_vector(&mut rng, p.n_controls()));
        let u = p.solve_state(&q).unwrap();
        let z = p.solve_adjoint(&u).unwrap();
        let t0 = p.normal_trace_with(&u, &z, Extension::Zero).unwrap();
        let t1 = p.normal_trace_with(&u, &z, Extension::Harmonic).unwrap();
        let diff: Vec<f64> = t0.iter().zip(t1.iter()).map(|(a, b)| a - b).collect();
        assert!(p.boundary_norm(&diff) <= 1e-8 * p.boundary_norm(&t0));
    }
}

#[test]
fn boundary_projection_is_orthogonal() {
    let m = mesh(2.0 * PI / 3.0, 2);
    let data = ProblemData::new(1.0).unwrap();
    let p = ControlProblem::with_options(&m, &data, CgOptions::with_tol(1e-14)).unwrap();
    let g = |x: &[f64; 3]| (3.0 * x[0]).sin() + x[1] * x[2];
    let q = p.project_boundary(g).unwrap();
    // (g - P g, φ_y) = 0 for every boundary hat function.
    let load = p.boundary_load(g);
    let mq = p.boundary_mass_apply(&q);
    let err = load.iter().zip(&mq).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");
}

#[test]
fn fixed_point_agrees_with_active_set_method_without_active_bounds() {
    let m = mesh(3.0 * PI / 4.0, 1);
    let data = data().with_bounds(-1e3, 1e3).unwrap();
    let p = ControlProblem::with_options(&m, &data, CgOptions::with_tol(1e-14)).unwrap();
    let config = OptimizerConfig { tol: 1e-11, ..Default::default() };
    let a = solve_variational_fixed_point(&p, &config).unwrap();
    let b = solve_pdas(&p, &config).unwrap();
    let diff: Vec<f64> = a.control.iter().zip(b.control.iter()).map(|(a, b)| a - b).collect();
    assert!(p.boundary_norm(&diff) <= 1e-8 * p.boundary_norm(&b.control));
}

#[test]
fn variational_cost_is_below_the_piecewise_linear_cost() {
    // Admissible piecewise linear controls are admissible for the
    // variational concept, with the same state and cost.
    for (lo, hi) in [(-0.03, 0.04), (-0.1, 0.0), (0.0, 0.2)] {
        let m = mesh(3.0 * PI / 4.0, 1);
        let data = data().with_bounds(lo, hi).unwrap();
        let p = ControlProblem::with_options(&m, &data, CgOptions::with_tol(1e-14)).unwrap();
        // With α = 0.3 on this coarse mesh the iteration contracts slowly.
        let config = OptimizerConfig { tol: 1e-11, max_outer: 500, ..Default::default() };
        let a = solve_variational_fixed_point(&p, &config).unwrap();
        assert!(a.report.converged && a.report.residual < 1e-9, "{:?}", a.report);
        let b = solve_pdas(&p, &config).unwrap();
        let var = variational_cost(&p, &a.control, &a.state);
        let pl = p.reduced_cost(&b.control).unwrap();
        assert!(var <= pl + 1e-12, "[{lo}, {hi}]: {var} vs {pl}");
        assert!(a.control.iter().any(|&v| v < lo || v > hi));
    }
}

#[test]
fn concepts_coincide_through_solve() {
    let m = mesh(PI / 2.0, 2);
    let data = data().with_bounds(-1e3, 1e3).unwrap();
    let p = ControlProblem::with_options(&m, &data, CgOptions::with_tol(1e-13)).unwrap();
    let a = solve(&p, &OptimizerConfig::with_concept(Concept::Variational)).unwrap();
    let b = solve(&p, &OptimizerConfig::with_concept(Concept::PiecewiseLinear)).unwrap();
    let diff: Vec<f64> = a.control.iter().zip(b.control.iter()).map(|(a, b)| a - b).collect();
    assert!(p.boundary_norm(&diff) <= 1e-7);
}

#[test]
fn refinement_preserves_volume_and_shape() {
    for omega in [PI / 2.0, 2.0 * PI / 3.0, 3.0 * PI / 4.0, 5.0 * PI / 6.0] {
        let domain = HalfSpaceDomain::benchmark(omega).unwrap();
        let mut m = build_prism_mesh(&domain, 0).unwrap();
        let volume = domain.volume().unwrap();
        let area = domain.surface_area().unwrap();
        let shape0 = m.shape_regularity();
        for _ in 0..3 {
            m = m.refine_uniform();
            m.validate().unwrap();
            assert!((m.total_volume() - volume).abs() < 1e-12 * volume);
            assert!((m.boundary_area() - area).abs() < 1e-12 * area);
            assert!(m.shape_regularity() >= 0.2 * shape0, "ω = {omega}");
        }
    }
}

#[test]
fn perturbation_is_deterministic_and_keeps_the_boundary() {
    let m = mesh(3.0 * PI / 4.0, 2);
    let a = m.perturb_interior(0.2, 9).unwrap();
    let b = m.perturb_interior(0.2, 9).unwrap();
    assert_eq!(a.vertices(), b.vertices());
    a.validate().unwrap();
    for v in 0..m.n_vertices() {
        if m.is_boundary_vertex(v) {
            assert_eq!(a.vertices()[v], m.vertices()[v]);
        }
    }
    assert!((a.total_volume() - m.total_volume()).abs() < 1e-12);
    assert!(m.perturb_interior(0.5, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn quasi_interpolation_is_admissible(
        lo in -2.0f64..0.0,
        width in 0.0f64..3.0,
        freq in proptest::array::uniform3(-8.0f64..8.0),
        phase in 0.0f64..6.3,
        jump in 0.0f64..1.0,
    ) {
        let m = mesh(3.0 * PI / 4.0, 1);
        let dofs = dbcontrol_core::fem::DofMap::new(&m);
        let hi = lo + width;
        // smooth oscillation plus a jump across x1 = 0.5, kept inside [lo, hi]
        let g = |x: &[f64; 3]| {
            let s = 0.5 + 0.5 * (freq[0] * x[0] + freq[1] * x[1] + freq[2] * x[2] + phase).sin();
            let t = if x[0] > 0.5 { (s + jump).min(1.0) } else { s };
            lo + width * t
        };
        let q = quasi_interpolate(&m, &dofs, g);
        prop_assert!(q.iter().all(|&v| lo <= v && v <= hi));
    }

    #[test]
    fn state_is_linear_in_the_control(seed in 0u64..1000, s in -3.0f64..3.0) {
        let m = mesh(PI / 2.0, 1);
        let data = ProblemData::new(1.0).unwrap();
        let p = ControlProblem::with_options(&m, &data, CgOptions::with_tol(1e-14)).unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        let a = random_vector(&mut rng, p.n_controls());
        let b = random_vector(&mut rng, p.n_controls());
        let combo: Vec<f64> = a.iter().zip(&b).map(|(a, b)| a + s * b).collect();
        let ua = p.solve_state_homogeneous(&a).unwrap();
        let ub = p.solve_state_homogeneous(&b).unwrap();
        let uc = p.solve_state_homogeneous(&combo).unwrap();
        for ((a, b), c) in ua.iter().zip(ub.iter()).zip(uc.iter()) {
            prop_assert!((a + s * b - c).abs() < 1e-10);
        }
    }
}
