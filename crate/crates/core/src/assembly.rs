//! Assembled sparse matrices, used as the correctness oracle for the
//! matrix-free kernels.

use std::io::Write;

use crate::error::{Error, Result};
use crate::function::{FeFunction, FunctionSpace};
use crate::index::{
    index_set, intervals, micro_primitive_vertices, tet_offset, width, CellType, SubgroupId,
};
use crate::operator::{local_matrix, BoundaryMode, Form};

/// Dense numbering of the physical DoFs on one level.
#[derive(Clone, Debug)]
pub struct GlobalEnumeration {
    pub level: u32,
    /// `ids[cell][offset]`; replicas share the owner's id.
    pub ids: Vec<Vec<usize>>,
    pub count: usize,
    /// Cell and offset of the owner of each id.
    pub owners: Vec<(usize, usize)>,
}

impl GlobalEnumeration {
    pub fn new(space: &FunctionSpace, level: u32) -> Result<Self> {
        let plan = space.level(level)?;
        let (ids, count) = plan.global_numbering();
        let mut owners = vec![(0, 0); count];
        for (c, cell) in ids.iter().enumerate() {
            for (o, &id) in cell.iter().enumerate() {
                if plan.is_owned(c, o) {
                    owners[id] = (c, o);
                }
            }
        }
        Ok(Self {
            level,
            ids,
            count,
            owners,
        })
    }

    /// Owner values as a dense vector.
    pub fn gather(&self, f: &FeFunction) -> Result<Vec<f64>> {
        let data = f.cells(self.level)?;
        Ok(self.owners.iter().map(|&(c, o)| data[c][o]).collect())
    }

    /// Writes a dense vector into every replica.
    pub fn scatter(&self, v: &[f64], f: &mut FeFunction) -> Result<()> {
        if v.len() != self.count {
            return Err(Error::Dimension {
                expected: self.count,
                found: v.len(),
            });
        }
        for (cell, ids) in f.cells_mut(self.level)?.iter_mut().zip(&self.ids) {
            for (x, &id) in cell.iter_mut().zip(ids) {
                *x = v[id];
            }
        }
        Ok(())
    }
}

/// Compressed-row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SparseMatrix {
    /// Sums duplicate triplets; columns end up sorted within each row.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut last = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().expect("entry exists") += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map(|i| vals[i]).unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok((0..self.n)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect())
    }

    /// Dense copy, row-major.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (r, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        d
    }

    /// MatrixMarket coordinate format, 1-based.
    pub fn write_matrix_market<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.n, self.n, self.nnz())?;
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                writeln!(out, "{} {} {:e}", r + 1, c + 1, v)?;
            }
        }
        Ok(())
    }
}

/// Assembles `form` on `level`, looping over macro-cells in mesh order.
pub fn assemble(form: &Form, space: &FunctionSpace, level: u32, bc: BoundaryMode) -> Result<SparseMatrix> {
    let order: Vec<usize> = (0..space.num_cells()).collect();
    assemble_in_order(form, space, level, bc, &order)
}

/// Assembles with an explicit macro-cell processing order.
pub fn assemble_in_order(
    form: &Form,
    space: &FunctionSpace,
    level: u32,
    bc: BoundaryMode,
    order: &[usize],
) -> Result<SparseMatrix> {
    if !space.descriptor().is_p1() {
        return Err(Error::Unsupported("assembly needs a P1 space".into()));
    }
    let numbering = GlobalEnumeration::new(space, level)?;
    let plan = space.level(level)?;
    let mesh = space.mesh();
    let n1 = intervals(level) + 1;
    let h = 1.0 / intervals(level) as f64;
    let mut triplets = Vec::new();
    for &c in order {
        let map = mesh.macro_cell_map(c)?;
        for cell_type in CellType::ALL {
            let subgroup = SubgroupId::Cell(cell_type);
            for q in index_set(width(subgroup, level)?) {
                let verts = micro_primitive_vertices(subgroup, q, level)?;
                let lattice: [[usize; 3]; 4] = std::array::from_fn(|v| [verts[v].i, verts[v].j, verts[v].k]);
                let pts = lattice.map(|v| map.apply([v[0] as f64 * h, v[1] as f64 * h, v[2] as f64 * h]));
                let a = local_matrix(form, &pts)?;
                let ids = lattice.map(|v| numbering.ids[c][tet_offset(n1, v[0], v[1], v[2])]);
                for i in 0..4 {
                    for j in 0..4 {
                        triplets.push((ids[i], ids[j], a[i][j]));
                    }
                }
            }
        }
    }
    if bc == BoundaryMode::DirichletIdentity {
        let is_dirichlet: Vec<bool> = numbering
            .owners
            .iter()
            .map(|&(c, o)| plan.is_dirichlet(c, o))
            .collect();
        triplets.retain(|&(r, _, _)| !is_dirichlet[r]);
        triplets.extend((0..numbering.count).filter(|&r| is_dirichlet[r]).map(|r| (r, r, 1.0)));
    }
    Ok(SparseMatrix::from_triplets(numbering.count, triplets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::SpaceDescriptor;
    use crate::index::Layout;
    use crate::mesh::CoarseMesh;
    use std::sync::Arc;

    fn space(mesh: CoarseMesh, level: u32) -> Arc<FunctionSpace> {
        FunctionSpace::new(Arc::new(mesh), SpaceDescriptor::p1(Layout::Aos), level, level).unwrap()
    }

    #[test]
    fn enumeration_counts() {
        for (mesh, n) in [
            (CoarseMesh::reference_tet(), 35),
            (CoarseMesh::cube_kuhn(), 125),
            (CoarseMesh::two_tets(), 55),
        ] {
            assert_eq!(GlobalEnumeration::new(&space(mesh, 2), 2).unwrap().count, n);
        }
    }

    #[test]
    fn diffusion_matrix_structure() {
        let sp = space(CoarseMesh::cube_kuhn(), 3);
        let a = assemble(&Form::Diffusion, &sp, 3, BoundaryMode::None).unwrap();
        let scale = a.max_abs();
        for r in 0..a.n {
            let (_, vals) = a.row(r);
            assert!(vals.iter().sum::<f64>().abs() <= 1e-12 * scale);
        }
        assert!(a.asymmetry() <= 1e-13 * scale);
        // macro-interior vertices see the full 15-point pattern
        let numbering = GlobalEnumeration::new(&sp, 3).unwrap();
        let plan = sp.level(3).unwrap();
        let interior = (0..a.n)
            .filter(|&r| {
                let (c, o) = numbering.owners[r];
                !plan.is_dirichlet(c, o) && !plan.is_replicated(c, o)
            })
            .collect::<Vec<_>>();
        assert_eq!(interior.len(), 6 * 35);
        for r in interior {
            assert_eq!(a.row(r).0.len(), 15);
        }
    }

    #[test]
    fn identity_rows_and_products() {
        let sp = space(CoarseMesh::reference_tet(), 2);
        let a = assemble(&Form::Mass, &sp, 2, BoundaryMode::DirichletIdentity).unwrap();
        // only (1,1,1) is interior at level 2
        let identity_rows = (0..a.n).filter(|&r| a.row(r).0 == [r] && a.get(r, r) == 1.0).count();
        assert_eq!(identity_rows, 34);

        let id = SparseMatrix::identity(4);
        let x = vec![1.0, -2.0, 3.0, 0.5];
        assert_eq!(id.spmv(&x).unwrap(), x);
        assert_eq!(a.spmv(&[0.0; 35]).unwrap(), vec![0.0; 35]);
        assert!(a.spmv(&[0.0; 3]).is_err());
    }

    #[test]
    fn mass_total_is_volume() {
        let sp = space(CoarseMesh::cube_kuhn(), 2);
        let m = assemble(&Form::Mass, &sp, 2, BoundaryMode::None).unwrap();
        let total: f64 = m.vals.iter().sum();
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn matrix_market_dump() {
        let m = SparseMatrix::from_triplets(2, vec![(0, 0, 2.0), (1, 0, -1.0), (0, 0, 1.0)]);
        let mut out = Vec::new();
        m.write_matrix_market(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 3e0\n2 1 -1e0\n"
        );
    }

    #[test]
    fn gather_scatter_round_trip() {
        let sp = space(CoarseMesh::cube_kuhn(), 2);
        let numbering = GlobalEnumeration::new(&sp, 2).unwrap();
        let v: Vec<f64> = (0..numbering.count).map(|i| i as f64 * 0.5).collect();
        let mut f = FeFunction::new(&sp, "f");
        numbering.scatter(&v, &mut f).unwrap();
        assert_eq!(f.replica_mismatch(2).unwrap(), 0.0);
        assert_eq!(numbering.gather(&f).unwrap(), v);
    }
}
