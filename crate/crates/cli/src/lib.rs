//! Convergence studies for Dirichlet boundary control on prism domains,
//! with CSV and VTK output. The command-line driver lives in `main.rs`.

pub mod selftest;
pub mod study;
pub mod table;
pub mod vtk;

pub use study::{compute_rates, run_study, run_study_with, ConvergenceRecord, StudyConfig, StudyError};
pub use table::{parse_csv, write_csv, TableWriter};
