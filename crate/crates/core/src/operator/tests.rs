use super::*;
use crate::assembly::{assemble, assemble_in_order, GlobalEnumeration};
use crate::function::SpaceDescriptor;
use crate::index::Layout;
use crate::mesh::CoarseMesh;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn space(mesh: CoarseMesh, min: u32, max: u32, layout: Layout) -> Arc<FunctionSpace> {
    FunctionSpace::new(Arc::new(mesh), SpaceDescriptor::p1(layout), min, max).unwrap()
}

fn random_function(space: &Arc<FunctionSpace>, level: u32, seed: u64) -> (FeFunction, Vec<f64>) {
    let numbering = GlobalEnumeration::new(space, level).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..numbering.count).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut f = FeFunction::new(space, "x");
    numbering.scatter(&v, &mut f).unwrap();
    (f, v)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn apply_dense(op: &P1Operator, kernel: Kernel, x: &FeFunction, level: u32, bc: BoundaryMode) -> Vec<f64> {
    let mut y = x.zeros_like("y");
    op.apply_with(kernel, x, &mut y, level, ApplyMode::Replace, bc).unwrap();
    assert_eq!(y.replica_mismatch(level).unwrap(), 0.0);
    GlobalEnumeration::new(op.space(), level).unwrap().gather(&y).unwrap()
}

fn forms() -> Vec<Form> {
    vec![Form::Diffusion, Form::Mass]
}

#[test]
fn kernels_match_assembled_matrix() {
    let meshes = [CoarseMesh::reference_tet(), CoarseMesh::cube_kuhn(), CoarseMesh::two_tets()];
    for mesh in meshes {
        let sp = space(mesh, 2, 4, Layout::Aos);
        for form in forms() {
            let op = P1Operator::new(form.clone(), &sp, Kernel::Elementwise).unwrap();
            for level in 2..=4 {
                for bc in [BoundaryMode::None, BoundaryMode::DirichletIdentity] {
                    let a = assemble(&form, &sp, level, bc).unwrap();
                    let (x, v) = random_function(&sp, level, 7 + level as u64);
                    let expected = a.spmv(&v).unwrap();
                    let tol = 1e-12 * a.max_abs().max(1.0);
                    for kernel in [Kernel::Elementwise, Kernel::Stencil] {
                        let got = apply_dense(&op, kernel, &x, level, bc);
                        let err = max_diff(&got, &expected);
                        assert!(err <= tol, "{form:?} {kernel:?} level {level}: {err}");
                    }
                }
            }
        }
    }
}

#[test]
fn variable_coefficient_matches_assembly() {
    let sp = space(CoarseMesh::cube_kuhn(), 2, 3, Layout::Aos);
    let form = Form::div_k_grad(|p| 1.0 + p[0] * p[0] + 0.5 * p[1] * p[2]);
    let op = P1Operator::new(form.clone(), &sp, Kernel::Elementwise).unwrap();
    assert!(P1Operator::new(form.clone(), &sp, Kernel::Stencil).is_err());
    for level in 2..=3 {
        let a = assemble(&form, &sp, level, BoundaryMode::DirichletIdentity).unwrap();
        let (x, v) = random_function(&sp, level, 3);
        let got = apply_dense(&op, Kernel::Elementwise, &x, level, BoundaryMode::DirichletIdentity);
        assert!(max_diff(&got, &a.spmv(&v).unwrap()) <= 1e-12 * a.max_abs());
        let mut y = x.zeros_like("y");
        assert!(op
            .apply_with(Kernel::Stencil, &x, &mut y, level, ApplyMode::Replace, BoundaryMode::None)
            .is_err());
    }
}

#[test]
fn constant_coefficient_scales_diffusion() {
    let sp = space(CoarseMesh::two_tets(), 3, 3, Layout::Aos);
    let diff = P1Operator::new(Form::Diffusion, &sp, Kernel::Elementwise).unwrap();
    let k2 = P1Operator::new(Form::div_k_grad(|_| 2.0), &sp, Kernel::Elementwise).unwrap();
    let (x, _) = random_function(&sp, 3, 11);
    let a = apply_dense(&diff, Kernel::Elementwise, &x, 3, BoundaryMode::None);
    let b = apply_dense(&k2, Kernel::Elementwise, &x, 3, BoundaryMode::None);
    for (u, v) in a.iter().zip(&b) {
        assert!((v - 2.0 * u).abs() <= 1e-12 * u.abs().max(1.0));
    }
}

#[test]
fn diffusion_annihilates_constants() {
    let sp = space(CoarseMesh::cube_kuhn(), 2, 4, Layout::Aos);
    let op = P1Operator::new(Form::Diffusion, &sp, Kernel::Stencil).unwrap();
    for level in 2..=4 {
        let mut one = FeFunction::new(&sp, "one");
        one.interpolate(level, |_| 1.0).unwrap();
        for kernel in [Kernel::Elementwise, Kernel::Stencil] {
            let y = apply_dense(&op, kernel, &one, level, BoundaryMode::None);
            assert!(y.iter().all(|v| v.abs() < 1e-12), "{kernel:?} level {level}");
        }
    }
}

#[test]
fn mass_of_unit_function_is_volume() {
    let sp = space(CoarseMesh::cube_kuhn(), 2, 4, Layout::Soa);
    let op = P1Operator::new(Form::Mass, &sp, Kernel::Stencil).unwrap();
    for level in 2..=4 {
        let mut one = FeFunction::new(&sp, "one");
        one.interpolate(level, |_| 1.0).unwrap();
        let mut m1 = one.zeros_like("m1");
        op.apply(&one, &mut m1, level, ApplyMode::Replace, BoundaryMode::None).unwrap();
        assert!((one.dot(&m1, level).unwrap() - 1.0).abs() < 1e-13);
    }
}

#[test]
fn stencil_rows_are_consistent() {
    let mesh = CoarseMesh::reference_tet();
    for level in 2..=4 {
        let table = compute_stencil(&Form::Diffusion, &mesh, level).unwrap();
        let w = &table.weights[0];
        assert!(w.iter().sum::<f64>().abs() < 1e-13);
        assert!(w[0] > 0.0);
        for (d, dir) in STENCIL_DIRECTIONS.iter().enumerate() {
            assert_eq!(table.weight(0, *dir), Some(w[d]));
        }
        assert_eq!(table.weight(0, [1, 1, 0]), None);
        if level >= 3 {
            let other = stencil_at_probe(&Form::Diffusion, &mesh, 0, level, [2, 1, 1]).unwrap();
            assert_eq!(&other, w);
        }
    }
    // level 2 has a single interior vertex, (1, 1, 1)
    let table = compute_stencil(&Form::Diffusion, &mesh, 2).unwrap();
    let sp = space(mesh.clone(), 2, 2, Layout::Aos);
    let a = assemble(&Form::Diffusion, &sp, 2, BoundaryMode::None).unwrap();
    let numbering = GlobalEnumeration::new(&sp, 2).unwrap();
    let row = numbering.ids[0][tet_offset(5, 1, 1, 1)];
    for (d, dir) in STENCIL_DIRECTIONS.iter().enumerate() {
        let q = dir.map(|v| (1 + v) as usize);
        let col = numbering.ids[0][tet_offset(5, q[0], q[1], q[2])];
        assert!((table.weights[0][d] - a.get(row, col)).abs() < 1e-15);
    }
    assert_eq!(a.row(row).0.len(), 15);
    assert!(stencil_at_probe(&Form::Diffusion, &mesh, 0, 2, [0, 1, 1]).is_err());
    assert!(compute_stencil(&Form::div_k_grad(|_| 1.0), &mesh, 2).is_err());
}

#[test]
fn stencil_is_translation_invariant() {
    let base = CoarseMesh::cube_kuhn();
    let shifted = CoarseMesh::new(
        base.vertices().iter().map(|p| [p[0] + 3.25, p[1] - 1.5, p[2] + 100.0]).collect(),
        base.cells().to_vec(),
        &[],
    )
    .unwrap();
    for level in 2..=4 {
        let a = compute_stencil(&Form::Diffusion, &base, level).unwrap();
        let b = compute_stencil(&Form::Diffusion, &shifted, level).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn assembled_operator_is_symmetric() {
    let sp = space(CoarseMesh::two_tets(), 3, 3, Layout::Aos);
    let op = P1Operator::new(Form::Diffusion, &sp, Kernel::Stencil).unwrap();
    let (x, _) = random_function(&sp, 3, 1);
    let (y, _) = random_function(&sp, 3, 2);
    let mut ax = x.zeros_like("ax");
    let mut ay = x.zeros_like("ay");
    op.apply(&x, &mut ax, 3, ApplyMode::Replace, BoundaryMode::None).unwrap();
    op.apply(&y, &mut ay, 3, ApplyMode::Replace, BoundaryMode::None).unwrap();
    let (yax, xay) = (y.dot(&ax, 3).unwrap(), x.dot(&ay, 3).unwrap());
    assert!((yax - xay).abs() <= 1e-12 * yax.abs().max(1.0));
}

#[test]
fn add_mode_accumulates() {
    let sp = space(CoarseMesh::cube_kuhn(), 3, 3, Layout::Aos);
    let op = P1Operator::new(Form::Mass, &sp, Kernel::Elementwise).unwrap();
    let (x, _) = random_function(&sp, 3, 5);
    let (mut y, base) = random_function(&sp, 3, 6);
    let ax = apply_dense(&op, Kernel::Elementwise, &x, 3, BoundaryMode::None);
    op.apply(&x, &mut y, 3, ApplyMode::Add, BoundaryMode::None).unwrap();
    let got = GlobalEnumeration::new(&sp, 3).unwrap().gather(&y).unwrap();
    let expected: Vec<f64> = base.iter().zip(&ax).map(|(a, b)| a + b).collect();
    assert!(max_diff(&got, &expected) < 1e-14);
}

#[test]
fn diagonal_matches_assembly() {
    for mesh in [CoarseMesh::cube_kuhn(), CoarseMesh::two_tets()] {
        let sp = space(mesh, 2, 3, Layout::Aos);
        for form in forms() {
            let op = P1Operator::new(form.clone(), &sp, Kernel::Elementwise).unwrap();
            let numbering = GlobalEnumeration::new(&sp, 3).unwrap();
            let a = assemble(&form, &sp, 3, BoundaryMode::None).unwrap();
            let d = op.extract_diagonal(3, BoundaryMode::None).unwrap();
            assert!(max_diff(&numbering.gather(&d).unwrap(), &a.diagonal()) < 1e-12 * a.max_abs());
            let a = assemble(&form, &sp, 3, BoundaryMode::DirichletIdentity).unwrap();
            let stored = numbering.gather(op.diagonal()).unwrap();
            assert!(max_diff(&stored, &a.diagonal()) < 1e-12 * a.max_abs().max(1.0));
        }
    }
}

#[test]
fn diagonal_equals_stencil_center_inside_a_macro_cell() {
    let sp = space(CoarseMesh::reference_tet(), 3, 3, Layout::Aos);
    let op = P1Operator::new(Form::Diffusion, &sp, Kernel::Stencil).unwrap();
    let center = op.stencil(3).unwrap().center(0);
    let plan = sp.level(3).unwrap();
    let d = op.diagonal().cells(3).unwrap();
    let mut seen = 0;
    for t in 0..d[0].len() {
        if !plan.is_replicated(0, t) && !plan.is_dirichlet(0, t) {
            assert_eq!(d[0][t], center);
            seen += 1;
        }
    }
    assert_eq!(seen, 35);
}

fn energy(op: &P1Operator, x: &FeFunction, b: &FeFunction, level: u32) -> f64 {
    let mut ax = x.zeros_like("ax");
    op.apply(x, &mut ax, level, ApplyMode::Replace, BoundaryMode::None).unwrap();
    0.5 * x.dot(&ax, level).unwrap() - x.dot(b, level).unwrap()
}

#[test]
fn gauss_seidel_fixed_point_and_convergence() {
    let sp = space(CoarseMesh::cube_kuhn(), 3, 3, Layout::Aos);
    let op = P1Operator::new(Form::Diffusion, &sp, Kernel::Stencil).unwrap();
    let level = 3;
    let numbering = GlobalEnumeration::new(&sp, level).unwrap();
    let a = assemble(&Form::Diffusion, &sp, level, BoundaryMode::DirichletIdentity).unwrap();

    // exact solution of the assembled system is a fixed point
    let (mut u, _) = random_function(&sp, level, 21);
    u.fill_dirichlet(level, 0.0).unwrap();
    let uv = numbering.gather(&u).unwrap();
    let mut b = u.zeros_like("b");
    numbering.scatter(&a.spmv(&uv).unwrap(), &mut b).unwrap();
    let mut x = u.clone();
    for dir in [SweepDirection::Forward, SweepDirection::Backward] {
        op.gauss_seidel(&b, &mut x, level, dir).unwrap();
        assert!(max_diff(&numbering.gather(&x).unwrap(), &uv) < 1e-12);
    }

    // energy decreases monotonically from zero, Dirichlet values stay put
    let mut x = b.zeros_like("x");
    let mut r = b.zeros_like("r");
    op.residual(&b, &x, &mut r, level).unwrap();
    let r0 = r.norm(level).unwrap();
    let mut last = energy(&op, &x, &b, level);
    for sweep in 0..20 {
        let dir = if sweep % 2 == 0 { SweepDirection::Forward } else { SweepDirection::Backward };
        op.gauss_seidel(&b, &mut x, level, dir).unwrap();
        assert_eq!(x.replica_mismatch(level).unwrap(), 0.0);
        let e = energy(&op, &x, &b, level);
        assert!(e <= last + 1e-14 * last.abs(), "sweep {sweep}: {e} > {last}");
        last = e;
    }
    op.residual(&b, &x, &mut r, level).unwrap();
    assert!(r.norm(level).unwrap() < 0.5 * r0);
    let plan = sp.level(level).unwrap();
    for (c, cell) in x.cells(level).unwrap().iter().enumerate() {
        for (o, v) in cell.iter().enumerate() {
            if plan.is_dirichlet(c, o) {
                assert_eq!(*v, 0.0);
            }
        }
    }
}

#[test]
fn mass_is_positive_definite() {
    let sp = space(CoarseMesh::two_tets(), 2, 2, Layout::Aos);
    let op = P1Operator::new(Form::Mass, &sp, Kernel::Elementwise).unwrap();
    for seed in 0..10 {
        let (x, _) = random_function(&sp, 2, seed);
        let mut mx = x.zeros_like("mx");
        op.apply(&x, &mut mx, 2, ApplyMode::Replace, BoundaryMode::None).unwrap();
        assert!(x.dot(&mx, 2).unwrap() > 0.0);
    }
}

#[test]
fn result_independent_of_layout_and_threads() {
    let mut results = Vec::new();
    for layout in [Layout::Aos, Layout::Soa] {
        for threads in [1, 4] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let sp = space(CoarseMesh::cube_kuhn(), 3, 3, layout);
            let (x, _) = random_function(&sp, 3, 99);
            let y = pool.install(|| {
                let op = P1Operator::new(Form::Diffusion, &sp, Kernel::Stencil).unwrap();
                let mut y = x.zeros_like("y");
                op.apply(&x, &mut y, 3, ApplyMode::Replace, BoundaryMode::DirichletIdentity).unwrap();
                op.gauss_seidel(&x, &mut y, 3, SweepDirection::Forward).unwrap();
                (y.dot(&y, 3).unwrap(), GlobalEnumeration::new(&sp, 3).unwrap().gather(&y).unwrap())
            });
            results.push(y);
        }
    }
    for r in &results[1..] {
        assert_eq!(r.0.to_bits(), results[0].0.to_bits());
        assert_eq!(r.1, results[0].1);
    }
}

#[test]
fn sparse_oracle_is_order_independent() {
    let sp = space(CoarseMesh::cube_kuhn(), 3, 3, Layout::Aos);
    let a = assemble(&Form::Diffusion, &sp, 3, BoundaryMode::DirichletIdentity).unwrap();
    let b = assemble_in_order(
        &Form::Diffusion,
        &sp,
        3,
        BoundaryMode::DirichletIdentity,
        &[5, 2, 0, 4, 1, 3],
    )
    .unwrap();
    assert_eq!(a.row_ptr, b.row_ptr);
    assert_eq!(a.cols, b.cols);
    let scale = a.max_abs();
    assert!(max_diff(&a.vals, &b.vals) <= 1e-14 * scale);
}
