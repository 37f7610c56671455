//! Closed-form benchmark data against finite differences.

use std::f64::consts::PI;

use dbcontrol_core::manufactured::{expected_rate, ManufacturedCase};
use dbcontrol_core::mesh::HalfSpaceDomain;
use dbcontrol_core::Point;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const OMEGAS: [f64; 3] = [PI / 2.0, 2.0 * PI / 3.0, 3.0 * PI / 4.0];
const STEP: f64 = 1e-4;

/// Fourth-order central difference Laplacian.
fn fd_laplacian(g: impl Fn(&Point) -> f64, x: &Point, h: f64) -> f64 {
    (0..3)
        .map(|d| {
            let at = |s: f64| {
                let mut y = *x;
                y[d] += s * h;
                g(&y)
            };
            (-at(2.0) + 16.0 * at(1.0) - 30.0 * at(0.0) + 16.0 * at(-1.0) - at(-2.0)) / (12.0 * h * h)
        })
        .sum()
}

/// Interior points away from the boundary and from the singular edge.
fn interior_points(domain: &HalfSpaceDomain, n: usize, seed: u64) -> Vec<Point> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut points = Vec::new();
    while points.len() < n {
        let x = [rng.random_range(-1.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        if domain.signed_distance(&x) > 0.02 && x[0].hypot(x[1]) > 0.1 {
            points.push(x);
        }
    }
    points
}

#[test]
fn source_and_desired_match_finite_differences() {
    for omega in OMEGAS {
        let case = ManufacturedCase::new(omega).unwrap();
        let domain = HalfSpaceDomain::benchmark(omega).unwrap();
        for x in interior_points(&domain, 50, 7) {
            let f_fd = -fd_laplacian(|y| case.state(y), &x, STEP);
            let ud_fd = case.state(&x) + fd_laplacian(|y| case.adjoint(y), &x, STEP);
            let f = case.source(&x);
            let ud = case.desired(&x);
            assert!((f - f_fd).abs() <= 1e-6 * f.abs(), "ω = {omega}, x = {x:?}: f {f} vs {f_fd}");
            assert!((ud - ud_fd).abs() <= 1e-6 * ud.abs(), "ω = {omega}, x = {x:?}: u_d {ud} vs {ud_fd}");
        }
    }
}

#[test]
fn singular_function_is_harmonic() {
    for omega in OMEGAS {
        let lambda = PI / omega;
        let s = |x: &Point| {
            let r = x[0].hypot(x[1]);
            r.powf(lambda) * (lambda * x[1].atan2(x[0])).sin()
        };
        let domain = HalfSpaceDomain::benchmark(omega).unwrap();
        for x in interior_points(&domain, 50, 11) {
            // The Hessian of r^λ sin(λφ) has magnitude ~ λ(λ-1) r^(λ-2).
            let scale = lambda * (lambda - 1.0) * x[0].hypot(x[1]).powf(lambda - 2.0);
            let lap = fd_laplacian(s, &x, STEP);
            assert!(lap.abs() <= 1e-6 * scale, "ω = {omega}, x = {x:?}: {lap} vs {scale}");
        }
    }
}

#[test]
fn adjoint_vanishes_on_the_boundary_and_state_on_the_edge() {
    let mut rng = StdRng::seed_from_u64(3);
    for omega in OMEGAS {
        let case = ManufacturedCase::new(omega).unwrap();
        let domain = HalfSpaceDomain::benchmark(omega).unwrap();
        for x in boundary_points(&domain, 200, 21) {
            assert!(case.adjoint(&x).abs() <= 1e-12, "{x:?}");
        }
        for _ in 0..20 {
            let x = [0.0, 0.0, rng.random_range(0.0..1.0)];
            assert_eq!(case.state(&x), 0.0);
            assert!(case.source(&x).is_finite() && case.desired(&x).is_finite());
        }
    }
}

/// Points on face interiors, with the outward unit normal of their face.
fn boundary_points_with_normals(domain: &HalfSpaceDomain, n: usize, seed: u64) -> Vec<(Point, Point)> {
    let mut rng = StdRng::seed_from_u64(seed);
    let planes = domain.halfspaces();
    let mut out = Vec::new();
    while out.len() < n {
        let k = rng.random_range(0..planes.len());
        let h = planes[k];
        let mut x = [rng.random_range(-1.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let s = h.slack(&x);
        for (x, n) in x.iter_mut().zip(h.normal) {
            *x += s * n;
        }
        let interior = planes
            .iter()
            .enumerate()
            .all(|(j, p)| j == k || p.slack(&x) > 1e-3);
        if interior {
            out.push((x, h.normal));
        }
    }
    out
}

fn boundary_points(domain: &HalfSpaceDomain, n: usize, seed: u64) -> Vec<Point> {
    boundary_points_with_normals(domain, n, seed).into_iter().map(|(x, _)| x).collect()
}

#[test]
fn optimality_holds_on_faces() {
    for omega in OMEGAS {
        let case = ManufacturedCase::new(omega).unwrap();
        let domain = HalfSpaceDomain::benchmark(omega).unwrap();
        for (x, n) in boundary_points_with_normals(&domain, 200, 5) {
            let g = case.adjoint_gradient(&x);
            let flux = g[0] * n[0] + g[1] * n[1] + g[2] * n[2];
            let q = case.control(&x);
            let scale = q.abs().max(flux.abs()).max(1e-300);
            assert!(
                (case.alpha * q - flux).abs() <= 1e-8 * scale,
                "ω = {omega}, x = {x:?}: {q} vs {flux}"
            );
        }
    }
}

#[test]
fn theoretical_rates() {
    let r = expected_rate(3.0 * PI / 4.0).unwrap();
    assert!((r.expected_rate - 5.0 / 6.0).abs() < 1e-12 && !r.log_factor);
    for omega in [2.0 * PI / 3.0, PI / 2.0] {
        let r = expected_rate(omega).unwrap();
        assert!((r.expected_rate - 1.0).abs() < 1e-12 && r.log_factor);
    }
    assert!(expected_rate(PI).is_err());
}
