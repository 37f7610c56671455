//! Mesh-refinement convergence studies against the manufactured benchmark.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use dbcontrol_core::control::{ControlProblem, ProblemData};
use dbcontrol_core::fem::{integrate_l2_error_domain, weighted_gradient_norm};
use dbcontrol_core::manufactured::ManufacturedCase;
use dbcontrol_core::mesh::{build_prism_mesh, HalfSpaceDomain, Mesh};
use dbcontrol_core::optimizer::{solve, Concept, OptimizerConfig, Solution};
use dbcontrol_core::solver::CgOptions;

/// Tolerance for every inner solve of a study. Tight enough that the
/// algebraic error stays far below the discretization error on all levels.
pub const INNER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    /// ω = omega_num / omega_den · π.
    pub omega_num: u32,
    pub omega_den: u32,
    /// Number of refinement levels in the study.
    pub levels: usize,
    /// Refinement level of the first (coarsest) mesh of the study.
    pub start_level: usize,
    pub concept: Concept,
    pub alpha: f64,
    pub qa: f64,
    pub qb: f64,
    pub perturb: f64,
    pub seed: u64,
    pub kappa: f64,
    pub vtk_dir: Option<PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            omega_num: 3,
            omega_den: 4,
            levels: 4,
            start_level: 2,
            concept: Concept::PiecewiseLinear,
            alpha: 1.0,
            qa: -1e3,
            qb: 1e3,
            perturb: 0.0,
            seed: 42,
            kappa: 1.0,
            vtk_dir: None,
        }
    }
}

impl StudyConfig {
    pub fn omega(&self) -> f64 {
        f64::from(self.omega_num) / f64::from(self.omega_den) * PI
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        let invalid = |msg: String| Err(StudyError::Config(msg));
        if self.omega_den == 0 {
            return invalid("omega denominator must be positive".into());
        }
        let ratio = f64::from(self.omega_num) / f64::from(self.omega_den);
        if !(0.5..1.0).contains(&ratio) {
            return invalid(format!("ω/π = {ratio} must lie in [1/2, 1)"));
        }
        if self.levels < 2 {
            return invalid(format!("at least two levels are needed, got {}", self.levels));
        }
        if self.kappa.is_nan() || self.kappa < 1.0 {
            return invalid(format!("kappa = {} must be at least 1", self.kappa));
        }
        Ok(())
    }
}

/// One row of the convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub level: usize,
    pub h: f64,
    pub ndof_total: usize,
    pub ndof_boundary: usize,
    pub err_q_l2: f64,
    pub err_u_l2: f64,
    pub rate_q: Option<f64>,
    pub rate_u: Option<f64>,
    pub cg_iters_total: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("level {level}")]
    Level {
        level: usize,
        #[source]
        source: dbcontrol_core::Error,
    },
    #[error("level {level}")]
    Output {
        level: usize,
        #[source]
        source: std::io::Error,
    },
}

/// Observed order between consecutive entries; `None` for the first one.
pub fn compute_rates(errors: &[f64], hs: &[f64]) -> Vec<Option<f64>> {
    assert_eq!(errors.len(), hs.len());
    (0..errors.len())
        .map(|l| (l > 0).then(|| (errors[l - 1] / errors[l]).ln() / (hs[l - 1] / hs[l]).ln()))
        .collect()
}

/// Everything computed on one level; the study keeps only the record.
#[derive(Debug)]
pub struct LevelResult {
    pub mesh: Mesh,
    pub solution: Solution,
    pub record: ConvergenceRecord,
    /// `‖ρ̃^{1/2} ∇u_h‖ / ‖q_h‖_{L2(∂Ω)}` for the computed control.
    pub stability_ratio: f64,
}

/// The mesh of `level` for this study: uniform refinement of the coarse
/// prism mesh, then interior perturbation with a level-dependent seed.
pub fn study_mesh(config: &StudyConfig, base: &Mesh, level: usize) -> Result<Mesh, dbcontrol_core::Error> {
    let mut mesh = base.clone();
    while mesh.level() < level {
        mesh = mesh.refine_uniform();
    }
    mesh.perturb_interior(config.perturb, config.seed.wrapping_add(level as u64))
}

pub fn solve_level(
    config: &StudyConfig,
    case: &ManufacturedCase,
    mesh: Mesh,
) -> Result<LevelResult, dbcontrol_core::Error> {
    let started = Instant::now();
    let exact = *case;
    let source = *case;
    let data = ProblemData::new(config.alpha)?
        .with_bounds(config.qa, config.qb)?
        .with_source(move |x| source.source(x))
        .with_desired(move |x| exact.desired(x));
    let problem = ControlProblem::with_options(&mesh, &data, CgOptions::with_tol(INNER_TOL))?;
    let solution = solve(&problem, &OptimizerConfig::with_concept(config.concept))?;
    let err_q_l2 = solution.control_error(&problem, |x| case.control(x));
    let err_u_l2 = integrate_l2_error_domain(&mesh, &solution.state, |x| case.state(x), 4);
    let energy = weighted_gradient_norm(&mesh, &solution.state, config.kappa)?;
    let stability_ratio = energy / problem.boundary_norm(&solution.control);
    let record = ConvergenceRecord {
        level: mesh.level(),
        h: mesh.mesh_size(),
        ndof_total: mesh.n_vertices(),
        ndof_boundary: problem.n_controls(),
        err_q_l2,
        err_u_l2,
        rate_q: None,
        rate_u: None,
        cg_iters_total: problem.inner_iterations() + solution.report.cg_iterations,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    drop(problem);
    Ok(LevelResult {
        mesh,
        solution,
        record,
        stability_ratio,
    })
}

/// Runs the study, handing each finished level (with rates filled in) to
/// `on_level` before starting the next one. On error the levels already
/// handed out are all that was produced.
pub fn run_study_with(
    config: &StudyConfig,
    mut on_level: impl FnMut(&LevelResult) -> std::io::Result<()>,
) -> Result<Vec<ConvergenceRecord>, StudyError> {
    config.validate()?;
    let omega = config.omega();
    let at = |level: usize| move |source| StudyError::Level { level, source };
    let case = ManufacturedCase::new(omega).map_err(at(config.start_level))?;
    let domain = HalfSpaceDomain::benchmark(omega).map_err(at(config.start_level))?;
    let base = build_prism_mesh(&domain, 0).map_err(at(config.start_level))?;

    let mut records: Vec<ConvergenceRecord> = Vec::new();
    for level in config.start_level..config.start_level + config.levels {
        let mesh = study_mesh(config, &base, level).map_err(at(level))?;
        let mut result = solve_level(config, &case, mesh).map_err(at(level))?;
        if let Some(prev) = records.last() {
            let r = &mut result.record;
            let ratio = (prev.h / r.h).ln();
            r.rate_q = Some((prev.err_q_l2 / r.err_q_l2).ln() / ratio);
            r.rate_u = Some((prev.err_u_l2 / r.err_u_l2).ln() / ratio);
        }
        on_level(&result).map_err(|source| StudyError::Output { level, source })?;
        records.push(result.record);
    }
    Ok(records)
}

pub fn run_study(config: &StudyConfig) -> Result<Vec<ConvergenceRecord>, StudyError> {
    run_study_with(config, |_| Ok(()))
}
