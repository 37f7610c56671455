//! Finite-element building blocks for Dirichlet boundary control of the
//! Poisson equation on convex polyhedral prisms.
//!
//! The crate is `no_std` and only needs `alloc`; float math comes from
//! `num_traits::Float` (libm). When std ends up linked, its inherent float
//! methods win and those imports go unused, hence the `allow`s.
//!
//! File formats, the study driver and the command-line interface live in the
//! `dbcontrol` crate.
//!
//! The pieces, bottom-up:
//!
//! * [`mesh`]: half-space prism domains, tetrahedral meshes, red refinement,
//!   interior perturbation and the distance-to-boundary weight.
//! * [`quadrature`], [`sparse`] and [`fem`]: P1 assembly of stiffness, mass
//!   and boundary mass matrices, load vectors and error integrals.
//! * [`solver`]: preconditioned conjugate gradients and Dirichlet elimination.
//! * [`control`]: boundary L2 projection, discrete state and adjoint, the
//!   variational normal trace, reduced cost, gradient and Hessian.
//! * [`optimizer`]: the two control discretizations (variational and
//!   piecewise linear), primal-dual active sets and quasi-interpolation.
//! * [`manufactured`]: closed-form benchmark solutions and theoretical rates.

#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod control;
mod error;
pub mod fem;
pub mod geom;
pub mod manufactured;
pub mod mesh;
pub mod optimizer;
pub mod quadrature;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};

/// A point in physical space.
pub type Point = [f64; 3];
