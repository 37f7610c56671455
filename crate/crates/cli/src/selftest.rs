//! Quick runtime checks of the discrete operators on coarse meshes, for
//! verifying a build on a new machine. The full suites live in the tests.

use std::f64::consts::PI;

use anyhow::bail;
use dbcontrol_core::control::{ControlProblem, ControlVector, Extension, ProblemData};
use dbcontrol_core::fem::DofMap;
use dbcontrol_core::mesh::{build_prism_mesh, HalfSpaceDomain};
use dbcontrol_core::optimizer::{quasi_interpolate, solve, Concept, OptimizerConfig};
use dbcontrol_core::solver::CgOptions;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value <= self.limit
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Deterministic pseudo-random values in [-1, 1].
fn wave(n: usize, seed: f64) -> Vec<f64> {
    (0..n).map(|k| (seed * (k as f64 + 1.0)).sin()).collect()
}

pub fn checks() -> anyhow::Result<Vec<Check>> {
    let omega = 3.0 * PI / 4.0;
    let mesh = build_prism_mesh(&HalfSpaceDomain::benchmark(omega)?, 2)?.perturb_interior(0.1, 1)?;
    let data = ProblemData::new(0.5)?
        .with_bounds(-1e3, 1e3)?
        .with_source(|x| 1.0 + x[2])
        .with_desired(|x| x[0] * x[1] + 0.25);
    let problem = ControlProblem::with_options(&mesh, &data, CgOptions::with_tol(1e-14))?;
    let n = problem.n_controls();
    let mut out = Vec::new();

    let q = ControlVector::new(wave(n, 1.3));
    let d = wave(n, 0.7);
    let g = problem.gradient_functional(&q)?;
    let eps = 1e-3;
    let shifted = |s: f64| ControlVector::new(q.iter().zip(&d).map(|(q, d)| q + s * eps * d).collect());
    let fd = (problem.reduced_cost(&shifted(1.0))? - problem.reduced_cost(&shifted(-1.0))?) / (2.0 * eps);
    let exact = dot(&g, &d);
    out.push(Check {
        name: "gradient vs central differences",
        value: (fd - exact).abs() / exact.abs(),
        limit: 1e-6,
    });

    let hd = problem.hessian_functional(&d)?;
    let du = problem.solve_state_homogeneous(&d)?;
    let energy = data.alpha() * problem.boundary_norm_sq(&d) + problem.mass().bilinear(&du, &du);
    out.push(Check {
        name: "Hessian energy identity",
        value: (dot(&d, &hd) - energy).abs() / energy,
        limit: 1e-8,
    });

    let u = problem.solve_state(&q)?;
    let z = problem.solve_adjoint(&u)?;
    let t0 = problem.normal_trace_with(&u, &z, Extension::Zero)?;
    let t1 = problem.normal_trace_with(&u, &z, Extension::Harmonic)?;
    let diff: Vec<f64> = t0.iter().zip(t1.iter()).map(|(a, b)| a - b).collect();
    out.push(Check {
        name: "normal trace extension independence",
        value: problem.boundary_norm(&diff) / problem.boundary_norm(&t0),
        limit: 1e-8,
    });

    let dofs = DofMap::new(&mesh);
    let pi = quasi_interpolate(&mesh, &dofs, |x| if x[2] > 0.5 { 1.0 } else { -2.0 });
    let violation = pi
        .iter()
        .map(|&v| (v - 1.0).max(-2.0 - v).max(0.0))
        .fold(0.0, f64::max);
    out.push(Check {
        name: "quasi-interpolation admissibility",
        value: violation,
        limit: 0.0,
    });

    let a = solve(&problem, &OptimizerConfig::with_concept(Concept::Variational))?;
    let b = solve(&problem, &OptimizerConfig::with_concept(Concept::PiecewiseLinear))?;
    let diff: Vec<f64> = a.control.iter().zip(b.control.iter()).map(|(a, b)| a - b).collect();
    out.push(Check {
        name: "concept coincidence with inactive bounds",
        value: problem.boundary_norm(&diff),
        limit: 1e-7,
    });
    out.push(Check {
        name: "optimality residual",
        value: b.report.residual / problem.boundary_norm(&b.control),
        limit: 1e-7,
    });
    Ok(out)
}

pub fn run() -> anyhow::Result<()> {
    let checks = checks()?;
    for c in &checks {
        let status = if c.passed() { "PASS" } else { "FAIL" };
        println!("{status} {:<42} {:.3e} (limit {:.1e})", c.name, c.value, c.limit);
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        bail!("{failed} of {} checks failed", checks.len());
    }
    Ok(())
}
