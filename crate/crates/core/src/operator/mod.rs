//! Matrix-free P1 operators.
//!
//! Both kernels share the six element matrices each macro-cell carries per
//! level, one per micro-cell subgroup. They are computed from the macro-map's
//! linear part only, so every micro-cell of a subgroup sees bitwise the same
//! matrix. Variable coefficients are folded in as one quadrature mean per
//! micro-cell.

mod form;
mod stencil;

pub use form::{
    local_matrix, mean_coefficient, p1_gradients, quad4_points, Coefficient, Form, Mat4, QUAD4_A,
    QUAD4_B,
};
pub use stencil::{compute_stencil, stencil_at_probe, StencilTable, STENCIL_DIRECTIONS};

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::function::{FeFunction, FunctionSpace, LevelLayout};
use crate::index::{delinearize, index_set, intervals, n_tet, tet_offset, width, CellType, SubgroupId};
use crate::mesh::{MacroCellMap, Point};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Kernel {
    #[default]
    Elementwise,
    Stencil,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApplyMode {
    Replace,
    Add,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryMode {
    None,
    /// Dirichlet rows act as the identity: `dst[b] = src[b]`.
    DirichletIdentity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepDirection {
    Forward,
    Backward,
}

/// Lattice vertex offsets of the six micro-cell subgroups.
pub(crate) fn cell_offsets() -> [[[usize; 3]; 4]; 6] {
    std::array::from_fn(|s| {
        let offs = SubgroupId::Cell(CellType::ALL[s]).vertex_offsets();
        std::array::from_fn(|c| offs[c].map(|v| v as usize))
    })
}

/// Physical vertices of a micro-cell relative to its first vertex's anchor,
/// using the linear part of the macro-map only.
pub(crate) fn micro_cell_shape(map: &MacroCellMap, level: u32, offs: &[[usize; 3]; 4]) -> [Point; 4] {
    let h = 1.0 / intervals(level) as f64;
    offs.map(|o| map.apply_linear([o[0] as f64 * h, o[1] as f64 * h, o[2] as f64 * h]))
}

/// Element data for one macro-cell on one level.
#[derive(Clone, Debug)]
pub(crate) struct CellData {
    pub local: [Mat4; 6],
    /// Per subgroup, one coefficient mean per micro-cell (variable forms).
    pub coeff: Option<[Vec<f64>; 6]>,
}

#[derive(Clone, Debug)]
struct LevelData {
    cells: Vec<CellData>,
    stencil: Option<StencilTable>,
}

/// Geometry shared by all kernels on one level.
#[derive(Clone, Copy)]
pub(crate) struct Lattice {
    pub n1: usize,
    pub widths: [usize; 6],
    pub offs: [[[usize; 3]; 4]; 6],
}

impl Lattice {
    pub fn new(level: u32) -> Self {
        Self {
            n1: intervals(level) + 1,
            widths: std::array::from_fn(|s| {
                width(SubgroupId::Cell(CellType::ALL[s]), level).expect("level >= 2")
            }),
            offs: cell_offsets(),
        }
    }

    #[inline(always)]
    pub fn vertex(&self, p: [usize; 3]) -> usize {
        tet_offset(self.n1, p[0], p[1], p[2])
    }

    /// True for vertices strictly inside the macro-cell.
    #[inline(always)]
    pub fn is_interior(&self, p: [usize; 3]) -> bool {
        p[0] > 0 && p[1] > 0 && p[2] > 0 && p[0] + p[1] + p[2] < self.n1 - 1
    }
}

impl CellData {
    #[inline(always)]
    fn entry(&self, s: usize, t: usize, c: usize, l: usize) -> f64 {
        match &self.coeff {
            None => self.local[s][c][l],
            Some(k) => self.local[s][c][l] * k[s][t],
        }
    }

    /// Row of vertex `p` restricted to the micro-cells of this macro-cell.
    pub fn partial_row(&self, lat: &Lattice, p: [usize; 3], x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for s in 0..6 {
            let offs = &lat.offs[s];
            for c in 0..4 {
                let o = offs[c];
                if p[0] < o[0] || p[1] < o[1] || p[2] < o[2] {
                    continue;
                }
                let q = [p[0] - o[0], p[1] - o[1], p[2] - o[2]];
                if q[0] + q[1] + q[2] >= lat.widths[s] {
                    continue;
                }
                let t = tet_offset(lat.widths[s], q[0], q[1], q[2]);
                for l in 0..4 {
                    let v = [q[0] + offs[l][0], q[1] + offs[l][1], q[2] + offs[l][2]];
                    sum += self.entry(s, t, c, l) * x[lat.vertex(v)];
                }
            }
        }
        sum
    }

    /// Scatter-adds `A x` over all micro-cells into `y`.
    pub fn apply_elements(&self, lat: &Lattice, x: &[f64], y: &mut [f64]) {
        for s in 0..6 {
            let offs = &lat.offs[s];
            let w = lat.widths[s];
            let a = &self.local[s];
            let mut t = 0;
            for k in 0..w {
                for j in 0..w - k {
                    let rows: [usize; 4] = std::array::from_fn(|c| {
                        tet_offset(lat.n1, 0, j + offs[c][1], k + offs[c][2]) + offs[c][0]
                    });
                    for i in 0..w - k - j {
                        let idx = rows.map(|r| r + i);
                        let xs = idx.map(|v| x[v]);
                        let scale = match &self.coeff {
                            None => 1.0,
                            Some(kk) => kk[s][t],
                        };
                        for c in 0..4 {
                            let row = &a[c];
                            let v = row[0] * xs[0] + row[1] * xs[1] + row[2] * xs[2] + row[3] * xs[3];
                            y[idx[c]] += if self.coeff.is_some() { scale * v } else { v };
                        }
                        t += 1;
                    }
                }
            }
        }
    }

    /// Scatter-adds the element diagonals into `y`.
    pub fn add_diagonal(&self, lat: &Lattice, y: &mut [f64]) {
        for s in 0..6 {
            let offs = &lat.offs[s];
            for (t, q) in index_set(lat.widths[s]).enumerate() {
                for c in 0..4 {
                    let v = [q.i + offs[c][0], q.j + offs[c][1], q.k + offs[c][2]];
                    y[lat.vertex(v)] += self.entry(s, t, c, c);
                }
            }
        }
    }
}

/// A P1 operator on every level of a function space.
#[derive(Clone, Debug)]
pub struct P1Operator {
    form: Form,
    space: Arc<FunctionSpace>,
    kernel: Kernel,
    levels: Vec<LevelData>,
    diagonal: FeFunction,
}

impl P1Operator {
    pub fn new(form: Form, space: &Arc<FunctionSpace>, kernel: Kernel) -> Result<Self> {
        if !space.descriptor().is_p1() {
            return Err(Error::Unsupported("operators need a P1 space".into()));
        }
        if kernel == Kernel::Stencil && !form.is_constant() {
            return Err(Error::Unsupported(
                "stencil kernel needs a constant-coefficient form".into(),
            ));
        }
        let mesh = space.mesh();
        let maps = (0..mesh.num_cells())
            .map(|c| mesh.macro_cell_map(c))
            .collect::<Result<Vec<_>>>()?;
        let mut levels = Vec::new();
        for level in space.min_level()..=space.max_level() {
            let cells = maps
                .par_iter()
                .map(|map| cell_data(&form, map, level))
                .collect::<Result<Vec<_>>>()?;
            let stencil = if form.is_constant() {
                Some(StencilTable::from_cells(level, &cells))
            } else {
                None
            };
            levels.push(LevelData { cells, stencil });
        }
        let mut op = Self {
            form,
            space: Arc::clone(space),
            kernel,
            levels,
            diagonal: FeFunction::new(space, "diagonal"),
        };
        let mut diag = FeFunction::new(space, "diagonal");
        for level in space.min_level()..=space.max_level() {
            op.extract_diagonal_into(&mut diag, level, BoundaryMode::DirichletIdentity)?;
        }
        op.diagonal = diag;
        Ok(op)
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn space(&self) -> &Arc<FunctionSpace> {
        &self.space
    }

    fn level_data(&self, level: u32) -> Result<&LevelData> {
        self.space.level(level)?;
        Ok(&self.levels[(level - self.space.min_level()) as usize])
    }

    pub fn stencil(&self, level: u32) -> Option<&StencilTable> {
        self.level_data(level).ok()?.stencil.as_ref()
    }

    /// Diagonal with identity rows at Dirichlet DoFs, synchronized.
    pub fn diagonal(&self) -> &FeFunction {
        &self.diagonal
    }

    fn check(&self, f: &FeFunction) -> Result<()> {
        if self.space.compatible(f.space()) {
            Ok(())
        } else {
            Err(Error::DescriptorMismatch)
        }
    }

    /// `dst = A src` (or `dst += A src`) with the configured kernel.
    pub fn apply(
        &self,
        src: &FeFunction,
        dst: &mut FeFunction,
        level: u32,
        mode: ApplyMode,
        bc: BoundaryMode,
    ) -> Result<()> {
        self.apply_with(self.kernel, src, dst, level, mode, bc)
    }

    pub fn apply_with(
        &self,
        kernel: Kernel,
        src: &FeFunction,
        dst: &mut FeFunction,
        level: u32,
        mode: ApplyMode,
        bc: BoundaryMode,
    ) -> Result<()> {
        self.check(src)?;
        self.check(dst)?;
        if mode == ApplyMode::Add {
            let mut tmp = dst.zeros_like("tmp");
            self.apply_with(kernel, src, &mut tmp, level, ApplyMode::Replace, bc)?;
            return dst.axpy(1.0, &tmp, level);
        }
        let data = self.level_data(level)?;
        let lat = Lattice::new(level);
        let x = src.cells(level)?;
        match kernel {
            Kernel::Elementwise => {
                dst.cells_mut(level)?
                    .par_iter_mut()
                    .enumerate()
                    .for_each(|(c, y)| {
                        y.fill(0.0);
                        data.cells[c].apply_elements(&lat, &x[c], y);
                    });
            }
            Kernel::Stencil => {
                let table = data.stencil.as_ref().ok_or_else(|| {
                    Error::Unsupported("no stencil table for a variable-coefficient form".into())
                })?;
                dst.cells_mut(level)?
                    .par_iter_mut()
                    .enumerate()
                    .for_each(|(c, y)| {
                        table.apply_cell(c, &data.cells[c], &lat, &x[c], y);
                    });
            }
        }
        dst.sync_additive(level)?;
        if bc == BoundaryMode::DirichletIdentity {
            dst.copy_dirichlet_from(src, level)?;
        }
        Ok(())
    }

    /// Writes the operator diagonal on `level` into `diag`.
    pub fn extract_diagonal_into(&self, diag: &mut FeFunction, level: u32, bc: BoundaryMode) -> Result<()> {
        self.check(diag)?;
        let data = self.level_data(level)?;
        let lat = Lattice::new(level);
        diag.cells_mut(level)?
            .par_iter_mut()
            .enumerate()
            .for_each(|(c, y)| {
                y.fill(0.0);
                data.cells[c].add_diagonal(&lat, y);
            });
        diag.sync_additive(level)?;
        if bc == BoundaryMode::DirichletIdentity {
            diag.fill_dirichlet(level, 1.0)?;
        }
        Ok(())
    }

    pub fn extract_diagonal(&self, level: u32, bc: BoundaryMode) -> Result<FeFunction> {
        let mut d = FeFunction::new(&self.space, "diagonal");
        self.extract_diagonal_into(&mut d, level, bc)?;
        Ok(d)
    }

    /// `r = b - A x` with Dirichlet identity rows.
    pub fn residual(&self, b: &FeFunction, x: &FeFunction, r: &mut FeFunction, level: u32) -> Result<()> {
        self.apply(x, r, level, ApplyMode::Replace, BoundaryMode::DirichletIdentity)?;
        r.axpby(1.0, b, -1.0, level)
    }

    /// One hybrid Gauss-Seidel sweep for `A x = b`.
    ///
    /// DoFs inside a macro-cell (not replicated, not Dirichlet) are relaxed
    /// lexicographically, cell by cell. Interface DoFs then receive one
    /// Jacobi step computed from partial rows summed over their replicas.
    /// The backward sweep runs the two phases in reverse. Dirichlet DoFs
    /// are left untouched.
    pub fn gauss_seidel(
        &self,
        b: &FeFunction,
        x: &mut FeFunction,
        level: u32,
        direction: SweepDirection,
    ) -> Result<()> {
        self.check(b)?;
        self.check(x)?;
        let diag = self.diagonal.cells(level)?;
        if diag.iter().flatten().any(|&d| d == 0.0) {
            return Err(Error::ZeroDiagonal);
        }
        match direction {
            SweepDirection::Forward => {
                self.interior_sweep(b, x, level, false)?;
                self.interface_jacobi(b, x, level)
            }
            SweepDirection::Backward => {
                self.interface_jacobi(b, x, level)?;
                self.interior_sweep(b, x, level, true)
            }
        }
    }

    fn interior_sweep(&self, b: &FeFunction, x: &mut FeFunction, level: u32, reverse: bool) -> Result<()> {
        let data = self.level_data(level)?;
        let plan = self.space.level(level)?;
        let lat = Lattice::new(level);
        let rhs = b.cells(level)?;
        let diag = self.diagonal.cells(level)?;
        let stencil = data.stencil.as_ref();
        let n1 = lat.n1;
        x.cells_mut(level)?
            .par_iter_mut()
            .enumerate()
            .for_each(|(c, xs)| {
                let relax = |p: [usize; 3], xs: &mut [f64]| {
                    let t = lat.vertex(p);
                    if plan.is_replicated(c, t) || plan.is_dirichlet(c, t) {
                        return;
                    }
                    let row = match stencil {
                        Some(st) if lat.is_interior(p) => st.interior_row(c, &lat, p, xs),
                        _ => data.cells[c].partial_row(&lat, p, xs),
                    };
                    xs[t] += (rhs[c][t] - row) / diag[c][t];
                };
                if reverse {
                    for k in (0..n1).rev() {
                        for j in (0..n1 - k).rev() {
                            for i in (0..n1 - k - j).rev() {
                                relax([i, j, k], xs);
                            }
                        }
                    }
                } else {
                    for k in 0..n1 {
                        for j in 0..n1 - k {
                            for i in 0..n1 - k - j {
                                relax([i, j, k], xs);
                            }
                        }
                    }
                }
            });
        Ok(())
    }

    fn interface_jacobi(&self, b: &FeFunction, x: &mut FeFunction, level: u32) -> Result<()> {
        let data = self.level_data(level)?;
        let plan: &LevelLayout = self.space.level(level)?;
        let lat = Lattice::new(level);
        let rhs = b.cells(level)?;
        let diag = self.diagonal.cells(level)?;
        let groups = plan.replicas();
        let updates: Vec<Option<f64>> = {
            let xs = x.cells(level)?;
            (0..groups.len())
                .into_par_iter()
                .map(|g| {
                    let members = groups.group(g);
                    let (oc, oo) = (members[0].0 as usize, members[0].1 as usize);
                    if plan.is_dirichlet(oc, oo) {
                        return None;
                    }
                    let mut row = 0.0;
                    for &(c, o) in members {
                        let p = delinearize(lat.n1, o as usize).expect("valid offset");
                        row += data.cells[c as usize].partial_row(&lat, [p.i, p.j, p.k], &xs[c as usize]);
                    }
                    Some(xs[oc][oo] + (rhs[oc][oo] - row) / diag[oc][oo])
                })
                .collect()
        };
        let xs = x.cells_mut(level)?;
        for (g, u) in updates.into_iter().enumerate() {
            if let Some(v) = u {
                for &(c, o) in groups.group(g) {
                    xs[c as usize][o as usize] = v;
                }
            }
        }
        Ok(())
    }

    /// Number of vertex DoFs on `level` of one macro-cell.
    pub fn cell_dofs(level: u32) -> usize {
        n_tet(intervals(level) + 1)
    }
}

fn cell_data(form: &Form, map: &MacroCellMap, level: u32) -> Result<CellData> {
    let offs = cell_offsets();
    let geometric = match form {
        Form::DivKGrad(_) => Form::Diffusion,
        other => other.clone(),
    };
    let mut local = [[[0.0; 4]; 4]; 6];
    for s in 0..6 {
        local[s] = local_matrix(&geometric, &micro_cell_shape(map, level, &offs[s]))?;
    }
    let coeff = match form {
        Form::DivKGrad(k) => {
            let h = 1.0 / intervals(level) as f64;
            let mut means: [Vec<f64>; 6] = Default::default();
            for s in 0..6 {
                let w = width(SubgroupId::Cell(CellType::ALL[s]), level)?;
                means[s] = index_set(w)
                    .map(|q| {
                        let pts = offs[s].map(|o| {
                            map.apply([
                                (q.i + o[0]) as f64 * h,
                                (q.j + o[1]) as f64 * h,
                                (q.k + o[2]) as f64 * h,
                            ])
                        });
                        mean_coefficient(k, &pts)
                    })
                    .collect::<Result<Vec<_>>>()?;
            }
            Some(means)
        }
        _ => None,
    };
    Ok(CellData { local, coeff })
}

#[cfg(test)]
mod tests;
