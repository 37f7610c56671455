use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use dbcontrol::study::{run_study_with, LevelResult, StudyConfig};
use dbcontrol::table::TableWriter;
use dbcontrol::vtk::write_vtk;
use dbcontrol_core::optimizer::Concept;

#[derive(Parser)]
#[command(version, about = "Dirichlet boundary control convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a mesh-refinement study on the manufactured benchmark.
    Study(StudyArgs),
    /// Run the built-in consistency checks on coarse meshes.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConceptArg {
    Variational,
    P1,
}

#[derive(clap::Args)]
struct StudyArgs {
    /// Interior edge angle ω = num/den · π.
    #[arg(long, default_value_t = 3)]
    omega_num: u32,
    #[arg(long, default_value_t = 4)]
    omega_den: u32,
    /// Number of refinement levels.
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// Refinement level of the coarsest mesh.
    #[arg(long, default_value_t = 2)]
    start_level: usize,
    #[arg(long, value_enum, default_value_t = ConceptArg::P1)]
    concept: ConceptArg,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = -1e3, allow_hyphen_values = true)]
    qa: f64,
    #[arg(long, default_value_t = 1e3, allow_hyphen_values = true)]
    qb: f64,
    /// Relative interior vertex perturbation, in [0, 0.3].
    #[arg(long, default_value_t = 0.0)]
    perturb: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Regularization parameter of the weighted stability report.
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    /// CSV output; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for per-level VTK files of state and adjoint.
    #[arg(long)]
    vtk_dir: Option<PathBuf>,
}

impl StudyArgs {
    fn config(&self) -> StudyConfig {
        StudyConfig {
            omega_num: self.omega_num,
            omega_den: self.omega_den,
            levels: self.levels,
            start_level: self.start_level,
            concept: match self.concept {
                ConceptArg::Variational => Concept::Variational,
                ConceptArg::P1 => Concept::PiecewiseLinear,
            },
            alpha: self.alpha,
            qa: self.qa,
            qb: self.qb,
            perturb: self.perturb,
            seed: self.seed,
            kappa: self.kappa,
            vtk_dir: self.vtk_dir.clone(),
        }
    }
}

fn export_vtk(dir: &std::path::Path, result: &LevelResult) -> io::Result<()> {
    let path = dir.join(format!("level_{}.vtk", result.record.level));
    let out = BufWriter::new(File::create(path)?);
    let fields = [
        ("state", result.solution.state.as_slice()),
        ("adjoint", result.solution.adjoint.as_slice()),
    ];
    write_vtk(&result.mesh, &fields, out)
}

fn study(args: &StudyArgs) -> anyhow::Result<()> {
    let config = args.config();
    let out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    if let Some(dir) = &config.vtk_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let mut table = TableWriter::new(out)?;
    run_study_with(&config, |result| {
        table.write(&result.record)?;
        eprintln!(
            "level {}: {} vertices, err_q {:.3e}, err_u {:.3e}, weighted stability ratio {:.4}",
            result.record.level,
            result.record.ndof_total,
            result.record.err_q_l2,
            result.record.err_u_l2,
            result.stability_ratio,
        );
        match &config.vtk_dir {
            Some(dir) => export_vtk(dir, result),
            None => Ok(()),
        }
    })?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Study(args) => study(args),
        Command::Selftest => dbcontrol::selftest::run(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
