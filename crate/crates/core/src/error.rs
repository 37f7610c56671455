use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("point lies outside the domain (signed distance {0:e})")]
    OutsideDomain(f64),
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("degenerate tetrahedron {cell} (volume {volume:e})")]
    DegenerateCell { cell: usize, volume: f64 },
    #[error("non-finite value encountered in iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("conjugate gradients stalled after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid problem data: {0}")]
    Data(String),
    #[error("active set did not settle within {iterations} outer iterations (changes per iteration: {changes:?})")]
    ActiveSetCycling { iterations: usize, changes: Vec<usize> },
    #[error("damped fixed-point iteration did not converge (residuals: {residuals:?})")]
    FixedPoint { residuals: Vec<f64> },
}
