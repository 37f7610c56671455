//! Preconditioned conjugate gradients and Dirichlet elimination.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::fem::DofMap;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// A symmetric linear map on `R^n`.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// `y = A x`; `y` is fully overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y);
    }
}

/// Wraps a closure as an operator.
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> core::fmt::Debug for FnOperator<F> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("FnOperator").field("dim", &self.dim).finish()
    }
}

impl<F: Fn(&[f64], &mut [f64])> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Stop once `‖b - A x‖₂ ≤ tol_rel ‖b‖₂`.
    pub tol_rel: f64,
    /// Defaults to `10 n`.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol_rel: 1e-10,
            max_iter: None,
        }
    }
}

impl CgOptions {
    pub fn with_tol(tol_rel: f64) -> Self {
        Self {
            tol_rel,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖b - A x‖₂ / ‖b‖₂`, recomputed from the returned iterate.
    pub residual: f64,
    pub converged: bool,
}

impl SolveReport {
    /// Turns a non-converged report into an error.
    pub fn ok(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                residual: self.residual,
            })
        }
    }
}

pub fn cg_solve<A: LinearOperator + ?Sized>(
    op: &A,
    rhs: &[f64],
    opts: &CgOptions,
    precond: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveReport)> {
    cg_solve_with(op, rhs, alloc::vec![0.0; rhs.len()], opts, precond, |_| {})
}

/// Conjugate gradients from the initial guess `x0`. `precond` is the
/// diagonal of a Jacobi preconditioner; `observe` sees every iterate.
pub fn cg_solve_with<A: LinearOperator + ?Sized>(
    op: &A,
    rhs: &[f64],
    x0: Vec<f64>,
    opts: &CgOptions,
    precond: Option<&[f64]>,
    mut observe: impl FnMut(&[f64]),
) -> Result<(Vec<f64>, SolveReport)> {
    let n = op.dim();
    for len in [rhs.len(), x0.len()] {
        if len != n {
            return Err(Error::Dimension { expected: n, found: len });
        }
    }
    if let Some(d) = precond {
        if d.len() != n {
            return Err(Error::Dimension { expected: n, found: d.len() });
        }
    }
    let rhs_norm = norm2(rhs);
    if !rhs_norm.is_finite() {
        return Err(Error::NonFinite { iteration: 0 });
    }
    if rhs_norm == 0.0 {
        let report = SolveReport {
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
        return Ok((alloc::vec![0.0; n], report));
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let target = opts.tol_rel * rhs_norm;

    let mut x = x0;
    let mut r = alloc::vec![0.0; n];
    let mut ap = alloc::vec![0.0; n];
    let mut z = alloc::vec![0.0; n];
    let mut p = alloc::vec![0.0; n];
    let precondition = |r: &[f64], z: &mut [f64]| match precond {
        Some(d) => z.iter_mut().zip(r).zip(d).for_each(|((z, r), d)| *z = r / d),
        None => z.copy_from_slice(r),
    };
    let true_residual = |x: &[f64], r: &mut [f64], ax: &mut [f64]| {
        op.apply(x, ax);
        r.iter_mut().zip(rhs).zip(ax.iter()).for_each(|((r, b), ax)| *r = b - ax);
    };

    true_residual(&x, &mut r, &mut ap);
    observe(&x);
    let mut iterations = 0;
    let mut res_norm = norm2(&r);
    // The outer loop restarts from the true residual whenever the recursive
    // one has drifted below the target on its own.
    'restart: loop {
        if res_norm <= target {
            break;
        }
        precondition(&r, &mut z);
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            iterations += 1;
            op.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !pap.is_finite() || !rz.is_finite() {
                return Err(Error::NonFinite { iteration: iterations });
            }
            if pap <= 0.0 {
                break 'restart;
            }
            let alpha = rz / pap;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            observe(&x);
            res_norm = norm2(&r);
            if !res_norm.is_finite() {
                return Err(Error::NonFinite { iteration: iterations });
            }
            if res_norm <= target {
                true_residual(&x, &mut r, &mut ap);
                res_norm = norm2(&r);
                continue 'restart;
            }
            precondition(&r, &mut z);
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
        }
        break;
    }

    true_residual(&x, &mut r, &mut ap);
    let residual = norm2(&r) / rhs_norm;
    if !residual.is_finite() {
        return Err(Error::NonFinite { iteration: iterations });
    }
    let report = SolveReport {
        iterations,
        residual,
        converged: residual <= opts.tol_rel,
    };
    Ok((x, report))
}

/// The interior block `A_II` of a full matrix, applied by masking rows and
/// columns of the boundary dofs.
#[derive(Debug, Clone, Copy)]
pub struct InteriorOperator<'a> {
    matrix: &'a CsrMatrix,
    dofs: &'a DofMap,
}

impl<'a> InteriorOperator<'a> {
    pub fn new(matrix: &'a CsrMatrix, dofs: &'a DofMap) -> Self {
        assert_eq!(matrix.n_rows(), dofs.n_dofs());
        Self { matrix, dofs }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.dofs.interior().iter().map(|&g| self.matrix.get(g, g)).collect()
    }
}

impl LinearOperator for InteriorOperator<'_> {
    fn dim(&self) -> usize {
        self.dofs.n_interior()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (yi, &g) in y.iter_mut().zip(self.dofs.interior()) {
            let (cols, vals) = self.matrix.row(g);
            *yi = cols
                .iter()
                .zip(vals)
                .filter_map(|(&j, &a)| self.dofs.interior_index(j).map(|k| a * x[k]))
                .sum();
        }
    }
}

/// Splits `A u = F` with `u = g` on the boundary into the interior operator
/// and the lift contribution `-A_IB g` to be added to `F_I`.
pub fn eliminate_dirichlet<'a>(
    matrix: &'a CsrMatrix,
    dofs: &'a DofMap,
    boundary_values: &[f64],
) -> (InteriorOperator<'a>, Vec<f64>) {
    assert_eq!(boundary_values.len(), dofs.n_boundary());
    let lift: Vec<f64> = dofs
        .interior()
        .iter()
        .map(|&g| {
            let (cols, vals) = matrix.row(g);
            -cols
                .iter()
                .zip(vals)
                .filter_map(|(&j, &a)| dofs.boundary_index(j).map(|k| a * boundary_values[k]))
                .sum::<f64>()
        })
        .collect();
    (InteriorOperator::new(matrix, dofs), lift)
}

/// `A_BI x_I`: boundary rows of `A` against interior values.
pub fn boundary_interior_apply(matrix: &CsrMatrix, dofs: &DofMap, interior_values: &[f64]) -> Vec<f64> {
    dofs.boundary()
        .iter()
        .map(|&g| {
            let (cols, vals) = matrix.row(g);
            cols.iter()
                .zip(vals)
                .filter_map(|(&j, &a)| dofs.interior_index(j).map(|k| a * interior_values[k]))
                .sum()
        })
        .collect()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}
