use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use blocktet::assembly::assemble;
use blocktet::function::{write_vtk, FeFunction, FunctionSpace, SpaceDescriptor};
use blocktet::index::{intervals, n_tet, width, Layout, PrimitiveKind, SubgroupId, WIDTH_DEVIATIONS};
use blocktet::mesh::{build_primitive_graph, parse_mesh, CoarseMesh, Point};
use blocktet::operator::{BoundaryMode, Form, Kernel, P1Operator};
use blocktet::oracle;
use blocktet::solver::{
    cg, interpolate_rhs, l2_error, GridHierarchy, MultigridConfig, SmootherConfig, SmootherKind,
};
use blocktet::Error;

use crate::{
    validate_level, Command, DiscretizationArgs, FieldArg, FormArg, KernelArg, LayoutArg, MatrixArgs,
    MeshInfoArgs, PoissonArgs, SmootherArg, SolverArg, Status, TablesArgs, TaxonomyArgs, VtkArgs,
};

/// Largest level accepted by `verify-taxonomy`.
const MAX_TAXONOMY_LEVEL: u32 = 5;

/// Failure of a subcommand, carrying the exit status.
struct Failure {
    status: Status,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            status: Status::Usage,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self {
            status: Status::Io,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse { .. }
            | Error::DegenerateCell { .. }
            | Error::NonConforming(_)
            | Error::LevelRange { .. }
            | Error::Unsupported(_)
            | Error::OutOfBounds(_)
            | Error::AbsentSubgroup { .. } => Status::Usage,
            Error::Divergence(_) | Error::Breakdown(_) | Error::ZeroDiagonal => Status::Diverged,
            Error::Io(_) => Status::Io,
            _ => Status::VerificationFailed,
        };
        Self {
            status,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<Status, Failure>;

pub fn run(command: Command) -> Status {
    let result = match command {
        Command::MeshInfo(a) => mesh_info(a),
        Command::VerifyTaxonomy(a) => verify_taxonomy(a),
        Command::Poisson(a) => poisson(a),
        Command::ExportVtk(a) => export_vtk(a),
        Command::ExportMatrix(a) => export_matrix(a),
        Command::GenTables(a) => gen_tables(a),
    };
    match result {
        Ok(status) => status,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.status
        }
    }
}

fn load_mesh(source: &str) -> Result<CoarseMesh, Failure> {
    if let Some(mesh) = CoarseMesh::builtin(source) {
        return Ok(mesh);
    }
    let path = Path::new(source);
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    parse_mesh(&text).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{source}: {}", f.message);
        f
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::io(path, e))
}

fn layout(arg: LayoutArg) -> Layout {
    match arg {
        LayoutArg::Aos => Layout::Aos,
        LayoutArg::Soa => Layout::Soa,
    }
}

fn form(arg: FormArg) -> Form {
    match arg {
        FormArg::Diffusion => Form::Diffusion,
        FormArg::Mass => Form::Mass,
        FormArg::Divkgrad => Form::div_k_grad(|_| 1.0),
    }
}

/// Variable-coefficient forms fall back to the element-wise kernel unless
/// the stencil kernel is requested explicitly.
fn kernel(disc: &DiscretizationArgs) -> Result<Kernel, Failure> {
    match (disc.kernel, disc.form) {
        (Some(KernelArg::Stencil), FormArg::Divkgrad) => Err(Failure::usage(
            "the stencil kernel needs a constant-coefficient form; use --kernel elementwise",
        )),
        (Some(KernelArg::Stencil), _) | (None, FormArg::Diffusion | FormArg::Mass) => Ok(Kernel::Stencil),
        _ => Ok(Kernel::Elementwise),
    }
}

fn exact(p: Point) -> f64 {
    (PI * p[0]).sin() * (PI * p[1]).sin() * (PI * p[2]).sin()
}

fn mesh_info(args: MeshInfoArgs) -> CmdResult {
    let mesh = load_mesh(&args.mesh.mesh)?;
    let graph = build_primitive_graph(&mesh);
    println!(
        "cells {}, faces {}, edges {}, vertices {}",
        graph.count(PrimitiveKind::Cell),
        graph.count(PrimitiveKind::Face),
        graph.count(PrimitiveKind::Edge),
        graph.count(PrimitiveKind::Vertex)
    );
    println!("graph links {}, cell-cell links {}", graph.link_count(), graph.cell_links());
    let dirichlet = (0..mesh.faces().len()).filter(|&f| mesh.is_dirichlet_face(f)).count();
    println!("boundary faces {}, dirichlet faces {}", mesh.num_boundary_faces(), dirichlet);
    println!("volume {}", mesh.volume());
    Ok(Status::Ok)
}

fn verify_taxonomy(args: TaxonomyArgs) -> CmdResult {
    let level = args.level;
    if level > MAX_TAXONOMY_LEVEL {
        return Err(Failure::usage(format!(
            "level must be at most {MAX_TAXONOMY_LEVEL}, got {level}"
        )));
    }
    let classification = oracle::classify(level)?;
    let complete = level >= 2;
    if !complete {
        log::warn!("taxonomy incomplete below level 2");
        eprintln!("warning: taxonomy incomplete below level 2");
    }
    let mut ok = true;
    println!("subgroup,count,width,n_tet(width),status");
    for s in SubgroupId::all() {
        let count = classification.count(s);
        match width(s, level) {
            Ok(w) => {
                let found = classification.get(s).and_then(|c| c.polytope_width());
                let good = count == n_tet(w) && found == Some(w);
                ok &= good || !complete;
                println!("{s},{count},{w},{},{}", n_tet(w), if good { "ok" } else { "MISMATCH" });
            }
            Err(_) if count == 0 => println!("{s},0,-,-,absent"),
            Err(_) => {
                ok &= !complete;
                println!("{s},{count},-,-,MISMATCH");
            }
        }
    }
    for kind in [PrimitiveKind::Vertex, PrimitiveKind::Edge, PrimitiveKind::Face, PrimitiveKind::Cell] {
        let found = classification.of_kind(kind).count();
        let expected = SubgroupId::of_kind(kind).count();
        let good = found == expected;
        ok &= good || !complete;
        let status = match (good, complete) {
            (true, _) => "ok",
            (false, true) => "MISMATCH",
            (false, false) => "incomplete",
        };
        println!("{} classes {found} (expected {expected}) {status}", kind.as_str());
    }
    let [v, e, f, c] = oracle::primitive_counts(level)?;
    let euler = v as i64 - e as i64 + f as i64 - c as i64;
    let n = intervals(level);
    let counts_ok = c == 8usize.pow(level) && v == n_tet(n + 1);
    ok &= euler == 1 && counts_ok;
    println!(
        "V {v}, E {e}, F {f}, C {c}, euler {euler} {}",
        if euler == 1 && counts_ok { "ok" } else { "MISMATCH" }
    );
    for d in WIDTH_DEVIATIONS {
        let nominal = n as i64 + d.nominal_delta as i64;
        let shipped = n as i64 + d.shipped_delta as i64;
        println!(
            "note: {} width is 2^l{:+} = {shipped} (nominal table 2^l{:+} = {nominal}); the shipped table follows the constructive classification",
            d.subgroup, d.shipped_delta, d.nominal_delta
        );
    }
    Ok(if ok { Status::Ok } else { Status::VerificationFailed })
}

struct Row {
    level: u32,
    dofs: usize,
    error: f64,
    residual: f64,
    iterations: usize,
    seconds: f64,
}

fn poisson(args: PoissonArgs) -> CmdResult {
    let max = args.level.or(args.max_level).unwrap_or(5);
    let min = args.min_level;
    validate_level(min, "--min-level").map_err(Failure::usage)?;
    validate_level(max, "--max-level").map_err(Failure::usage)?;
    if min > max {
        return Err(Failure::usage(format!("--min-level {min} exceeds the finest level {max}")));
    }
    if !(args.tol > 0.0) {
        return Err(Failure::usage("--tol must be positive"));
    }
    let smoother = SmootherConfig {
        kind: match args.smoother {
            SmootherArg::Gs => SmootherKind::GaussSeidel,
            SmootherArg::Jacobi => SmootherKind::Jacobi { omega: 0.6 },
            SmootherArg::Chebyshev => SmootherKind::chebyshev(),
        },
        pre: args.nu1,
        post: args.nu2,
    };
    let cycles = args.cycles.unwrap_or(match args.solver {
        SolverArg::Fmg => 5,
        _ => 100,
    });
    if cycles == 0 {
        return Err(Failure::usage("--cycles must be at least 1"));
    }
    let kernel = kernel(&args.disc)?;
    let mesh = Arc::new(load_mesh(&args.disc.mesh.mesh)?);

    let space = FunctionSpace::new(mesh, SpaceDescriptor::p1(layout(args.disc.layout)), 2, max)?;
    let op = P1Operator::new(form(args.disc.form), &space, kernel)?;
    let mass = P1Operator::new(Form::Mass, &space, Kernel::Stencil)?;
    let source: fn(Point) -> f64 = match args.disc.form {
        FormArg::Mass => exact,
        _ => |p| 3.0 * PI * PI * exact(p),
    };
    let mut b = FeFunction::new(&space, "rhs");
    for level in 2..=max {
        interpolate_rhs(&mass, source, |_| 0.0, &mut b, level)?;
    }
    let mut x = FeFunction::new(&space, "u");
    let config = MultigridConfig {
        cycles_per_level: if args.solver == SolverArg::Fmg { cycles } else { 5 },
        smoother,
        seed: args.seed,
        ..MultigridConfig::default()
    };
    let dofs = |level: u32| -> Result<usize, Failure> { Ok(space.level(level)?.owned_count()) };

    let mut rows = Vec::new();
    match args.solver {
        SolverArg::Fmg => {
            let mut h = GridHierarchy::new(op, config)?;
            let report = h.fmg(&b, &mut x, max, Some(&exact))?;
            let mut previous = 0.0;
            for r in report.final_rows().into_iter().filter(|r| r.level >= min) {
                rows.push(Row {
                    level: r.level,
                    dofs: dofs(r.level)?,
                    error: r.error.unwrap_or(f64::NAN),
                    residual: r.residual,
                    iterations: r.cycle,
                    seconds: r.seconds - previous,
                });
                previous = r.seconds;
            }
        }
        SolverArg::Cg => {
            for level in min..=max {
                let start = Instant::now();
                let report = cg(&op, &b, &mut x, level, args.tol, 100_000)?;
                if !report.converged {
                    return Err(Failure {
                        status: Status::Diverged,
                        message: format!("CG did not reach {:e} on level {level}", args.tol),
                    });
                }
                rows.push(Row {
                    level,
                    dofs: dofs(level)?,
                    error: l2_error(&x, level, &exact)?,
                    residual: report.residual,
                    iterations: report.iterations,
                    seconds: start.elapsed().as_secs_f64(),
                });
            }
        }
        SolverArg::Vcycle => {
            let mut h = GridHierarchy::new(op, config)?;
            for level in min..=max {
                let start = Instant::now();
                let (residual, iterations) = if level == config.coarse_level {
                    let r = cg(h.operator(), &b, &mut x, level, args.tol, 100_000)?;
                    (r.residual, r.iterations)
                } else {
                    let report = h.solve(&b, &mut x, level, args.tol, cycles, None)?;
                    let last = report.rows.last().copied().expect("initial row");
                    (last.residual, last.cycle)
                };
                if !(residual <= args.tol) {
                    return Err(Failure {
                        status: Status::Diverged,
                        message: format!("V-cycles did not reach {:e} on level {level}", args.tol),
                    });
                }
                rows.push(Row {
                    level,
                    dofs: dofs(level)?,
                    error: l2_error(&x, level, &exact)?,
                    residual,
                    iterations,
                    seconds: start.elapsed().as_secs_f64(),
                });
            }
        }
    }

    let mut csv: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let io = |e: std::io::Error| Failure {
        status: Status::Io,
        message: e.to_string(),
    };
    writeln!(csv, "level,dofs,l2_error,order,residual,iterations,seconds").map_err(io)?;
    let mut last_order = None;
    for (i, r) in rows.iter().enumerate() {
        let order = (i > 0).then(|| (rows[i - 1].error / r.error).log2());
        last_order = order.or(last_order);
        writeln!(
            csv,
            "{},{},{:e},{},{:e},{},{:.6}",
            r.level,
            r.dofs,
            r.error,
            order.map(|o| format!("{o:.4}")).unwrap_or_default(),
            r.residual,
            r.iterations,
            r.seconds
        )
        .map_err(io)?;
    }
    csv.flush().map_err(io)?;

    if let Some(path) = &args.vtk {
        let mut out = create(path)?;
        write_vtk(&mut out, max, &[&x])?;
        out.flush().map_err(|e| Failure::io(path, e))?;
    }
    Ok(match last_order {
        Some(o) if !(o >= 1.9) => {
            eprintln!("observed order {o:.3} on the last level pair is below 1.9");
            Status::VerificationFailed
        }
        _ => Status::Ok,
    })
}

fn export_vtk(args: VtkArgs) -> CmdResult {
    if args.name.trim().is_empty() {
        return Err(Failure::usage("--name must not be empty"));
    }
    validate_level(args.level, "--level").map_err(Failure::usage)?;
    let mesh = Arc::new(load_mesh(&args.mesh.mesh)?);
    let space = FunctionSpace::new(mesh, SpaceDescriptor::p1(layout(args.layout)), 2, args.level)?;
    let mut u = FeFunction::new(&space, &args.name);
    match args.field {
        FieldArg::Sine => u.interpolate(args.level, exact)?,
        FieldArg::Linear => u.interpolate(args.level, |p| p[0] + 2.0 * p[1] + 3.0 * p[2])?,
        FieldArg::Solution => {
            let op = P1Operator::new(Form::Diffusion, &space, Kernel::Stencil)?;
            let mass = P1Operator::new(Form::Mass, &space, Kernel::Stencil)?;
            let mut b = u.zeros_like("rhs");
            for level in 2..=args.level {
                interpolate_rhs(&mass, |p| 3.0 * PI * PI * exact(p), |_| 0.0, &mut b, level)?;
            }
            let mut h = GridHierarchy::new(op, MultigridConfig::default())?;
            h.fmg(&b, &mut u, args.level, None)?;
        }
    }
    let mut out = create(&args.out)?;
    write_vtk(&mut out, args.level, &[&u])?;
    out.flush().map_err(|e| Failure::io(&args.out, e))?;
    Ok(Status::Ok)
}

fn export_matrix(args: MatrixArgs) -> CmdResult {
    validate_level(args.level, "--level").map_err(Failure::usage)?;
    let mesh = Arc::new(load_mesh(&args.disc.mesh.mesh)?);
    let space = FunctionSpace::new(mesh, SpaceDescriptor::p1(layout(args.disc.layout)), args.level, args.level)?;
    let bc = if args.dirichlet {
        BoundaryMode::DirichletIdentity
    } else {
        BoundaryMode::None
    };
    let matrix = assemble(&form(args.disc.form), &space, args.level, bc)?;
    let mut out = create(&args.out)?;
    matrix.write_matrix_market(&mut out)?;
    out.flush().map_err(|e| Failure::io(&args.out, e))?;
    println!("rows {}, nonzeros {}", matrix.n, matrix.nnz());
    Ok(Status::Ok)
}

fn gen_tables(args: TablesArgs) -> CmdResult {
    let artifact = oracle::table_artifact()?;
    if let Some(path) = &args.check {
        let stored = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        if stored == artifact {
            println!("{}: up to date", path.display());
            return Ok(Status::Ok);
        }
        eprintln!("{}: differs from the oracle output", path.display());
        return Ok(Status::VerificationFailed);
    }
    match &args.out {
        Some(path) => std::fs::write(path, &artifact).map_err(|e| Failure::io(path, e))?,
        None => print!("{artifact}"),
    }
    Ok(Status::Ok)
}
