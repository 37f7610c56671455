//! Sparse/iterative pipeline against dense linear algebra on coarse meshes.

use std::f64::consts::PI;

use dbcontrol_core::control::{ControlProblem, ControlVector, Extension, ProblemData};
use dbcontrol_core::fem::DofMap;
use dbcontrol_core::mesh::{build_prism_mesh, HalfSpaceDomain, Mesh};
use dbcontrol_core::optimizer::{solve_pdas, solve_unconstrained, OptimizerConfig};
use dbcontrol_core::solver::{cg_solve, CgOptions};
use dbcontrol_core::sparse::CsrMatrix;
use nalgebra::{DMatrix, DVector, Matrix3};

fn mesh(omega: f64, level: usize) -> Mesh {
    build_prism_mesh(&HalfSpaceDomain::benchmark(omega).unwrap(), level).unwrap()
}

fn dense(m: &CsrMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.n_rows(), m.n_cols(), |i, j| m.get(i, j))
}

fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

fn pick(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

fn data() -> ProblemData {
    ProblemData::new(0.7)
        .unwrap()
        .with_source(|x| 1.0 + x[0] * x[2])
        .with_desired(|x| (x[0] - x[1]).sin() + 2.0 * x[2])
}

/// Dense reduced quantities: `S0 = [I; -A_II^{-1} A_IB]`, the source state
/// `u_f`, `K = S0ᵀ M S0 + α M_∂` and `c = S0ᵀ (d - M u_f)`.
struct DenseModel {
    dofs: DofMap,
    s0: DMatrix<f64>,
    u_f: DVector<f64>,
    k: DMatrix<f64>,
    c: DVector<f64>,
}

fn dense_model(p: &ControlProblem<'_>) -> DenseModel {
    let dofs = p.dofs().clone();
    let (b, i) = (dofs.boundary().to_vec(), dofs.interior().to_vec());
    let a = dense(p.stiffness());
    let m = dense(p.mass());
    let mb = dense(p.boundary_mass());
    let aii = select(&a, &i, &i).cholesky().expect("A_II is SPD");
    let aib = select(&a, &i, &b);
    let n = dofs.n_dofs();

    let mut s0 = DMatrix::zeros(n, b.len());
    let interior_part = -aii.solve(&aib);
    for (k, &v) in b.iter().enumerate() {
        s0[(v, k)] = 1.0;
    }
    for (r, &v) in i.iter().enumerate() {
        for k in 0..b.len() {
            s0[(v, k)] = interior_part[(r, k)];
        }
    }
    let f = DVector::from_column_slice(p.source_load());
    let uf_i = aii.solve(&pick(&f, &i));
    let mut u_f = DVector::zeros(n);
    for (r, &v) in i.iter().enumerate() {
        u_f[v] = uf_i[r];
    }
    let d = DVector::from_column_slice(p.desired_load());
    let k = s0.transpose() * &m * &s0 + p.data().alpha() * &mb;
    let c = s0.transpose() * (d - &m * &u_f);
    DenseModel { dofs, s0, u_f, k, c }
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / scale.max(1e-300)
}

/// Element stiffness from the inverse Jacobian, assembled densely.
fn dense_stiffness_oracle(mesh: &Mesh) -> DMatrix<f64> {
    let n = mesh.n_vertices();
    let mut a = DMatrix::zeros(n, n);
    for tet in mesh.tets() {
        let p: Vec<[f64; 3]> = tet.iter().map(|&v| mesh.vertices()[v]).collect();
        let j = Matrix3::from_fn(|r, c| p[c + 1][r] - p[0][r]);
        let vol = j.determinant().abs() / 6.0;
        let jinv_t = j.try_inverse().unwrap().transpose();
        let ref_grads = [[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let grads: Vec<nalgebra::Vector3<f64>> = ref_grads
            .iter()
            .map(|g| jinv_t * nalgebra::Vector3::from_column_slice(g))
            .collect();
        for a_ in 0..4 {
            for b_ in 0..4 {
                a[(tet[a_], tet[b_])] += vol * grads[a_].dot(&grads[b_]);
            }
        }
    }
    a
}

#[test]
fn stiffness_matches_element_oracle() {
    let m = mesh(3.0 * PI / 4.0, 1).perturb_interior(0.2, 5).unwrap();
    let data = ProblemData::new(1.0).unwrap();
    let p = ControlProblem::new(&m, &data).unwrap();
    let diff = (dense(p.stiffness()) - dense_stiffness_oracle(&m)).amax();
    assert!(diff < 1e-13, "{diff}");
}

#[test]
fn cg_matches_dense_solve() {
    let m = mesh(PI / 2.0, 2);
    let data = ProblemData::new(1.0).unwrap();
    let p = ControlProblem::new(&m, &data).unwrap();
    let i = p.dofs().interior().to_vec();
    let aii = select(&dense(p.stiffness()), &i, &i);
    let rhs: Vec<f64> = (0..i.len()).map(|k| ((k * 7919) % 13) as f64 - 6.0).collect();
    let exact = aii.clone().lu().solve(&DVector::from_column_slice(&rhs)).unwrap();
    let op = dbcontrol_core::solver::InteriorOperator::new(p.stiffness(), p.dofs());
    let (x, report) = cg_solve(&op, &rhs, &CgOptions::with_tol(1e-13), None).unwrap();
    assert!(report.converged);
    assert!(rel(&x, exact.as_slice()) < 1e-10);
}

#[test]
fn state_adjoint_and_trace_match_dense() {
    let m = mesh(2.0 * PI / 3.0, 1).perturb_interior(0.15, 1).unwrap();
    let data = data();
    let p = ControlProblem::with_options(&m, &data, CgOptions::with_tol(1e-14)).unwrap();
    let model = dense_model(&p);
    let q = ControlVector::new((0..p.n_controls()).map(|k| (k as f64 * 0.37).cos()).collect());

    let u = p.solve_state(&q).unwrap();
    let u_dense = &model.s0 * DVector::from_column_slice(&q) + &model.u_f;
    assert!(rel(&u, u_dense.as_slice()) < 1e-10);

    let z = p.solve_adjoint(&u).unwrap();
    let i = model.dofs.interior().to_vec();
    let a = dense(p.stiffness());
    let load = dense(p.mass()) * &u_dense - DVector::from_column_slice(p.desired_load());
    let z_i = select(&a, &i, &i).lu().solve(&pick(&load, &i)).unwrap();
    assert!(rel(&model.dofs.restrict_interior(&z), z_i.as_slice()) < 1e-10);

    // M_∂ t = -(K q - c) + α M_∂ q
    let mb = dense(p.boundary_mass());
    let qv = DVector::from_column_slice(&q);
    let rhs = &model.c - &model.k * &qv + p.data().alpha() * &mb * &qv;
    let t_dense = mb.lu().solve(&rhs).unwrap();
    for ext in [Extension::Zero, Extension::Harmonic] {
        let t = p.normal_trace_with(&u, &z, ext).unwrap();
        assert!(rel(&t, t_dense.as_slice()) < 1e-9, "{ext:?}");
    }
}

#[test]
fn hessian_is_the_dense_reduced_matrix() {
    let m = mesh(3.0 * PI / 4.0, 1);
    let data = data();
    let p = ControlProblem::with_options(&m, &data, CgOptions::with_tol(1e-14)).unwrap();
    let model = dense_model(&p);
    let dq: Vec<f64> = (0..p.n_controls()).map(|k| ((k * 31) % 7) as f64 - 3.0).collect();
    let h = p.hessian_functional(&dq).unwrap();
    let h_dense = &model.k * DVector::from_column_slice(&dq);
    assert!(rel(&h, h_dense.as_slice()) < 1e-10);
    let g0 = p.gradient_functional(&ControlVector::zeros(p.n_controls())).unwrap();
    let c: Vec<f64> = g0.iter().map(|g| -g).collect();
    assert!(rel(&c, model.c.as_slice()) < 1e-10);
}

#[test]
fn unconstrained_matches_dense_kkt() {
    for (omega, level) in [(PI / 2.0, 0), (3.0 * PI / 4.0, 1), (2.0 * PI / 3.0, 1)] {
        let m = mesh(omega, level);
        let data = data();
        let p = ControlProblem::with_options(&m, &data, CgOptions::with_tol(1e-14)).unwrap();
        let model = dense_model(&p);
        let q_dense = model.k.clone().cholesky().unwrap().solve(&model.c);
        let config = OptimizerConfig { tol: 1e-12, ..Default::default() };
        let s = solve_unconstrained(&p, &config).unwrap();
        assert!(rel(&s.control, q_dense.as_slice()) < 1e-6, "ω = {omega}");
    }
}

/// Box QP by projected gradient descent with step 1/λ_max.
fn dense_box_qp(k: &DMatrix<f64>, c: &DVector<f64>, lo: f64, hi: f64) -> DVector<f64> {
    let lmax = k.clone().symmetric_eigen().eigenvalues.max();
    let mut q = DVector::zeros(c.len());
    for _ in 0..200_000 {
        let g = k * &q - c;
        let next = (&q - g / lmax).map(|v| v.clamp(lo, hi));
        let step = (&next - &q).amax();
        q = next;
        if step < 1e-15 {
            break;
        }
    }
    q
}

#[test]
fn pdas_matches_dense_box_qp() {
    for (omega, level, lo, hi) in [
        (PI / 2.0, 1, -0.02, 0.03),
        (3.0 * PI / 4.0, 1, -0.05, 0.0),
        (2.0 * PI / 3.0, 0, 0.0, 1.0),
    ] {
        let m = mesh(omega, level);
        let data = data().with_bounds(lo, hi).unwrap();
        let p = ControlProblem::with_options(&m, &data, CgOptions::with_tol(1e-14)).unwrap();
        let model = dense_model(&p);
        let q_dense = dense_box_qp(&model.k, &model.c, lo, hi);
        let active = q_dense.iter().filter(|&&v| v == lo || v == hi).count();
        assert!(active > 0 && active < q_dense.len(), "ω = {omega}: {active} active");
        let config = OptimizerConfig { tol: 1e-12, ..Default::default() };
        let s = solve_pdas(&p, &config).unwrap();
        let diff = (DVector::from_column_slice(&s.control) - &q_dense).amax();
        assert!(diff < 1e-6 * q_dense.amax().max(1e-3), "ω = {omega}: {diff}");
    }
}
