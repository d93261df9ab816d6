//! `blocktet` command-line front end.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use blocktet::function::MAX_LEVEL;

/// Matrix-free finite elements on block-structured tetrahedral grids.
#[derive(Parser, Debug)]
#[command(name = "blocktet", version, about)]
struct Cli {
    /// Worker threads for macro-cell parallel kernels.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    threads: u16,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print primitive counts, graph links and boundary faces of a mesh.
    MeshInfo(MeshInfoArgs),
    /// Classify the refined reference tetrahedron and check the width table.
    VerifyTaxonomy(TaxonomyArgs),
    /// Manufactured-solution Poisson convergence study.
    Poisson(PoissonArgs),
    /// Write a function on one level as a legacy VTK file.
    ExportVtk(VtkArgs),
    /// Write an assembled operator in MatrixMarket format.
    ExportMatrix(MatrixArgs),
    /// Print the frozen subgroup tables regenerated from the oracle.
    GenTables(TablesArgs),
}

#[derive(Args, Debug, Clone)]
struct MeshArg {
    /// Mesh file, or one of the built-in meshes ref-tet, cube-kuhn, two-tets.
    #[arg(long, default_value = "cube-kuhn")]
    mesh: String,
}

#[derive(Args, Debug)]
struct MeshInfoArgs {
    #[command(flatten)]
    mesh: MeshArg,
}

#[derive(Args, Debug)]
struct TaxonomyArgs {
    /// Refinement level, at most 5.
    #[arg(long, default_value_t = 3)]
    level: u32,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormArg {
    Diffusion,
    Mass,
    Divkgrad,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelArg {
    Elementwise,
    Stencil,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayoutArg {
    Aos,
    Soa,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverArg {
    Cg,
    Vcycle,
    Fmg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmootherArg {
    Gs,
    Jacobi,
    Chebyshev,
}

#[derive(Args, Debug, Clone)]
struct DiscretizationArgs {
    #[command(flatten)]
    mesh: MeshArg,
    /// Bilinear form; divkgrad uses k = 1.
    #[arg(long, value_enum, default_value_t = FormArg::Diffusion)]
    form: FormArg,
    /// Operator kernel; stencil by default, element-wise for divkgrad.
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    /// Memory layout of the DoF arrays; does not change any result.
    #[arg(long, value_enum, default_value_t = LayoutArg::Aos)]
    layout: LayoutArg,
}

#[derive(Args, Debug)]
struct PoissonArgs {
    #[command(flatten)]
    disc: DiscretizationArgs,
    /// Finest level; shorthand for --max-level.
    #[arg(long, conflicts_with = "max_level")]
    level: Option<u32>,
    /// First level reported.
    #[arg(long, default_value_t = 2)]
    min_level: u32,
    /// Finest level [default: 5].
    #[arg(long)]
    max_level: Option<u32>,
    #[arg(long, value_enum, default_value_t = SolverArg::Fmg)]
    solver: SolverArg,
    #[arg(long, value_enum, default_value_t = SmootherArg::Gs)]
    smoother: SmootherArg,
    /// Pre-smoothing sweeps.
    #[arg(long, default_value_t = 1)]
    nu1: usize,
    /// Post-smoothing sweeps.
    #[arg(long, default_value_t = 1)]
    nu2: usize,
    /// V-cycles per level (fmg, default 5) or maximum V-cycles (vcycle, default 100).
    #[arg(long)]
    cycles: Option<usize>,
    /// Relative residual target for cg and vcycle.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Seed of the spectral estimate used by the Chebyshev smoother.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the finest solution as VTK.
    #[arg(long)]
    vtk: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldArg {
    /// sin(pi x) sin(pi y) sin(pi z)
    Sine,
    /// x + 2y + 3z
    Linear,
    /// FMG solution of the Poisson model problem.
    Solution,
}

#[derive(Args, Debug)]
struct VtkArgs {
    #[command(flatten)]
    mesh: MeshArg,
    #[arg(long, default_value_t = 2)]
    level: u32,
    #[arg(long, value_enum, default_value_t = FieldArg::Sine)]
    field: FieldArg,
    /// Name of the point-data array.
    #[arg(long, default_value = "u")]
    name: String,
    #[arg(long, value_enum, default_value_t = LayoutArg::Aos)]
    layout: LayoutArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MatrixArgs {
    #[command(flatten)]
    disc: DiscretizationArgs,
    #[arg(long, default_value_t = 2)]
    level: u32,
    /// Replace Dirichlet rows by identity rows.
    #[arg(long)]
    dirichlet: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TablesArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare against an existing file instead of writing.
    #[arg(long, conflicts_with = "out")]
    check: Option<PathBuf>,
}

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    VerificationFailed = 1,
    Usage = 2,
    Diverged = 3,
    Io = 4,
}

fn validate_level(level: u32, name: &str) -> Result<(), String> {
    if !(2..=MAX_LEVEL).contains(&level) {
        return Err(format!("{name} must be in 2..={MAX_LEVEL}, got {level}"));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads as usize)
        .build_global()
    {
        eprintln!("error: cannot start thread pool: {e}");
        return ExitCode::from(Status::Usage as u8);
    }
    let status = commands::run(cli.command);
    ExitCode::from(status as u8)
}
