//! Finite-element coefficient vectors stored per macro-cell.
//!
//! Every macro-cell owns one array per level holding all its DoFs,
//! including those on its boundary. DoFs on faces, edges and vertices shared
//! with neighbors are therefore replicated; the replica with the smallest
//! cell id is the owner. [`FeFunction::sync_additive`] and
//! [`FeFunction::sync_broadcast`] reconcile replicas, and reductions only
//! count owned DoFs.

mod space;
mod vtk;

pub use space::{
    BlockLayout, FunctionSpace, LevelLayout, ReplicaGroups, SpaceDescriptor, SpaceEntry,
    MAX_LEVEL, MIN_LEVEL,
};
pub use vtk::write_vtk;

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::index::{index_set, intervals, tet_offset, CellType, SubgroupId};
use crate::mesh::{CoarseMesh, Point};

/// Tolerance on barycentric coordinates when locating points.
pub const LOCATE_TOLERANCE: f64 = 1e-12;

/// Coefficients of one function on every macro-cell and level.
#[derive(Clone, Debug)]
pub struct FeFunction {
    name: String,
    space: Arc<FunctionSpace>,
    /// `[level - min_level][cell][offset]`
    data: Vec<Vec<Vec<f64>>>,
}

impl FeFunction {
    /// Zero function on all levels of `space`.
    pub fn new(space: &Arc<FunctionSpace>, name: &str) -> Self {
        let data = (space.min_level()..=space.max_level())
            .map(|l| {
                let len = space.level(l).expect("in range").cell_len;
                vec![vec![0.0; len]; space.num_cells()]
            })
            .collect();
        Self {
            name: name.to_string(),
            space: Arc::clone(space),
            data,
        }
    }

    /// Builds a fresh space and a zero function on it.
    pub fn allocate(
        descriptor: SpaceDescriptor,
        mesh: Arc<CoarseMesh>,
        min_level: u32,
        max_level: u32,
    ) -> Result<Self> {
        let space = FunctionSpace::new(mesh, descriptor, min_level, max_level)?;
        Ok(Self::new(&space, "u"))
    }

    /// Zero function sharing this function's space.
    pub fn zeros_like(&self, name: &str) -> Self {
        Self::new(&self.space, name)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: &str) {
        self.name = name.to_string();
    }

    pub fn space(&self) -> &Arc<FunctionSpace> {
        &self.space
    }

    pub fn mesh(&self) -> &Arc<CoarseMesh> {
        self.space.mesh()
    }

    pub fn layout(&self, level: u32) -> Result<&LevelLayout> {
        self.space.level(level)
    }

    fn slot(&self, level: u32) -> Result<usize> {
        self.space.level(level)?;
        Ok((level - self.space.min_level()) as usize)
    }

    /// Per-cell arrays on `level`.
    pub fn cells(&self, level: u32) -> Result<&[Vec<f64>]> {
        Ok(&self.data[self.slot(level)?])
    }

    pub fn cells_mut(&mut self, level: u32) -> Result<&mut [Vec<f64>]> {
        let s = self.slot(level)?;
        Ok(&mut self.data[s])
    }

    /// Number of arrays and total stored values on `level`.
    pub fn storage(&self, level: u32) -> Result<(usize, usize)> {
        let plan = self.space.level(level)?;
        let arrays = plan.blocks.len() * self.space.num_cells();
        Ok((arrays, plan.cell_len * self.space.num_cells()))
    }

    fn check(&self, other: &FeFunction) -> Result<()> {
        if self.space.compatible(&other.space) {
            Ok(())
        } else {
            Err(Error::DescriptorMismatch)
        }
    }

    fn for_each_cell(&mut self, level: u32, f: impl Fn(usize, &mut [f64]) + Sync + Send) -> Result<()> {
        let s = self.slot(level)?;
        self.data[s]
            .par_iter_mut()
            .enumerate()
            .for_each(|(c, v)| f(c, v));
        Ok(())
    }

    fn zip_cells(
        &mut self,
        other: &FeFunction,
        level: u32,
        f: impl Fn(&mut [f64], &[f64]) + Sync + Send,
    ) -> Result<()> {
        self.check(other)?;
        let s = self.slot(level)?;
        let src = &other.data[s];
        self.data[s]
            .par_iter_mut()
            .zip(src.par_iter())
            .for_each(|(y, x)| f(y, x));
        Ok(())
    }

    pub fn fill(&mut self, level: u32, value: f64) -> Result<()> {
        self.for_each_cell(level, |_, v| v.fill(value))
    }

    pub fn copy_from(&mut self, x: &FeFunction, level: u32) -> Result<()> {
        self.zip_cells(x, level, |y, x| y.copy_from_slice(x))
    }

    pub fn scale(&mut self, a: f64, level: u32) -> Result<()> {
        self.for_each_cell(level, |_, v| v.iter_mut().for_each(|y| *y *= a))
    }

    /// `self <- self + a x`
    pub fn axpy(&mut self, a: f64, x: &FeFunction, level: u32) -> Result<()> {
        self.zip_cells(x, level, |y, x| {
            y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x)
        })
    }

    /// `self <- a x + b self`
    pub fn axpby(&mut self, a: f64, x: &FeFunction, b: f64, level: u32) -> Result<()> {
        self.zip_cells(x, level, |y, x| {
            y.iter_mut().zip(x).for_each(|(y, x)| *y = a * x + b * *y)
        })
    }

    /// `self <- a x + b y`
    pub fn assign(&mut self, a: f64, x: &FeFunction, b: f64, y: &FeFunction, level: u32) -> Result<()> {
        self.check(x)?;
        self.check(y)?;
        let s = self.slot(level)?;
        let ys = &y.data[s];
        self.data[s]
            .par_iter_mut()
            .zip(x.data[s].par_iter().zip(ys.par_iter()))
            .for_each(|(d, (x, y))| {
                for ((d, x), y) in d.iter_mut().zip(x).zip(y) {
                    *d = a * x + b * y;
                }
            });
        Ok(())
    }

    /// Componentwise product `self <- self * x`.
    pub fn multiply(&mut self, x: &FeFunction, level: u32) -> Result<()> {
        self.zip_cells(x, level, |y, x| y.iter_mut().zip(x).for_each(|(y, x)| *y *= x))
    }

    /// Sum over owned DoFs of `self * y`.
    ///
    /// Each cell is reduced in logical DoF order (independent of the memory
    /// layout); cell partials are then added in cell order, so the result
    /// does not depend on the thread count.
    pub fn dot(&self, y: &FeFunction, level: u32) -> Result<f64> {
        self.check(y)?;
        let s = self.slot(level)?;
        let plan = self.space.level(level)?;
        let layout = self.space.layout();
        let partials: Vec<f64> = (0..self.space.num_cells())
            .into_par_iter()
            .map(|c| {
                let (a, b) = (&self.data[s][c], &y.data[s][c]);
                let owned = plan.owned_mask(c);
                let mut sum = 0.0;
                for blk in &plan.blocks {
                    let n = crate::index::n_tet(blk.width);
                    for t in 0..n {
                        for d in 0..blk.m {
                            let off = blk.base + layout.offset(blk.width, blk.m, t, d);
                            if owned[off] {
                                sum += a[off] * b[off];
                            }
                        }
                    }
                }
                sum
            })
            .collect();
        Ok(partials.iter().sum())
    }

    pub fn norm(&self, level: u32) -> Result<f64> {
        Ok(self.dot(self, level)?.sqrt())
    }

    pub fn max_abs(&self, level: u32) -> Result<f64> {
        Ok(self
            .cells(level)?
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |m, x| m.max(x.abs())))
    }

    /// Replaces every replica by the sum over all replicas, accumulated in
    /// cell order.
    pub fn sync_additive(&mut self, level: u32) -> Result<()> {
        let s = self.slot(level)?;
        let plan = self.space.level(level)?;
        let data = &mut self.data[s];
        for g in plan.replicas().iter() {
            let sum: f64 = g.iter().map(|&(c, o)| data[c as usize][o as usize]).sum();
            for &(c, o) in g {
                data[c as usize][o as usize] = sum;
            }
        }
        Ok(())
    }

    /// Copies the owner's value to all replicas.
    pub fn sync_broadcast(&mut self, level: u32) -> Result<()> {
        let s = self.slot(level)?;
        let plan = self.space.level(level)?;
        let data = &mut self.data[s];
        for g in plan.replicas().iter() {
            let (oc, oo) = g[0];
            let v = data[oc as usize][oo as usize];
            for &(c, o) in &g[1..] {
                data[c as usize][o as usize] = v;
            }
        }
        Ok(())
    }

    /// Zeroes every replica that is not the owner.
    pub fn zero_non_owned(&mut self, level: u32) -> Result<()> {
        let plan = Arc::clone(&self.space);
        let plan = plan.level(level)?;
        self.for_each_cell(level, |c, v| {
            for (x, &own) in v.iter_mut().zip(plan.owned_mask(c)) {
                if !own {
                    *x = 0.0;
                }
            }
        })
    }

    /// Largest difference between replicas of one physical DoF.
    pub fn replica_mismatch(&self, level: u32) -> Result<f64> {
        let s = self.slot(level)?;
        let plan = self.space.level(level)?;
        let data = &self.data[s];
        let mut worst = 0.0f64;
        for g in plan.replicas().iter() {
            let (oc, oo) = g[0];
            let v = data[oc as usize][oo as usize];
            for &(c, o) in &g[1..] {
                worst = worst.max((data[c as usize][o as usize] - v).abs());
            }
        }
        Ok(worst)
    }

    /// Sets every DoF to `f` at the physical centroid of its micro-primitive
    /// (the vertex itself, or the edge midpoint). Replicas are made
    /// bitwise identical afterwards.
    pub fn interpolate<F>(&mut self, level: u32, f: F) -> Result<()>
    where
        F: Fn(Point) -> f64 + Sync,
    {
        let plan = Arc::clone(&self.space);
        let plan = plan.level(level)?;
        let mesh = Arc::clone(self.space.mesh());
        let layout = self.space.layout();
        let h = 1.0 / intervals(level) as f64;
        let maps = (0..mesh.num_cells())
            .map(|c| mesh.macro_cell_map(c))
            .collect::<Result<Vec<_>>>()?;
        self.for_each_cell(level, |c, v| {
            for blk in &plan.blocks {
                let offsets = blk.subgroup.vertex_offsets();
                let r = offsets.len() as f64;
                let mut centroid = [0.0; 3];
                for o in offsets {
                    for d in 0..3 {
                        centroid[d] += o[d] as f64;
                    }
                }
                for (t, p) in index_set(blk.width).enumerate() {
                    let xi = [
                        h * (p.i as f64 + centroid[0] / r),
                        h * (p.j as f64 + centroid[1] / r),
                        h * (p.k as f64 + centroid[2] / r),
                    ];
                    let value = f(maps[c].apply(xi));
                    for d in 0..blk.m {
                        v[blk.base + layout.offset(blk.width, blk.m, t, d)] = value;
                    }
                }
            }
        })?;
        self.sync_broadcast(level)
    }

    /// Overwrites Dirichlet DoFs with the corresponding values of `src`.
    pub fn copy_dirichlet_from(&mut self, src: &FeFunction, level: u32) -> Result<()> {
        self.check(src)?;
        let plan = Arc::clone(&self.space);
        let plan = plan.level(level)?;
        self.zip_cells_indexed(src, level, |c, y, x| {
            for ((y, x), &b) in y.iter_mut().zip(x).zip(plan.dirichlet_mask(c)) {
                if b {
                    *y = *x;
                }
            }
        })
    }

    /// Sets all Dirichlet DoFs to `value`.
    pub fn fill_dirichlet(&mut self, level: u32, value: f64) -> Result<()> {
        let plan = Arc::clone(&self.space);
        let plan = plan.level(level)?;
        self.for_each_cell(level, |c, v| {
            for (y, &b) in v.iter_mut().zip(plan.dirichlet_mask(c)) {
                if b {
                    *y = value;
                }
            }
        })
    }

    fn zip_cells_indexed(
        &mut self,
        other: &FeFunction,
        level: u32,
        f: impl Fn(usize, &mut [f64], &[f64]) + Sync + Send,
    ) -> Result<()> {
        self.check(other)?;
        let s = self.slot(level)?;
        let src = &other.data[s];
        self.data[s]
            .par_iter_mut()
            .zip(src.par_iter())
            .enumerate()
            .for_each(|(c, (y, x))| f(c, y, x));
        Ok(())
    }

    /// Value of a P1 function at a physical point.
    ///
    /// Cells are searched in order; the point is mapped to reference
    /// coordinates, scaled to the lattice and the containing micro-cell is
    /// found among the candidates anchored around the lattice floor.
    pub fn evaluate_at(&self, level: u32, x: Point) -> Result<f64> {
        let plan = self.space.level(level)?;
        let block = plan
            .block_of(SubgroupId::Vertex)
            .filter(|&b| plan.blocks[b].m == 1)
            .ok_or_else(|| Error::Unsupported("evaluation needs a P1 vertex block".into()))?;
        let base = plan.blocks[block].base;
        let n = intervals(level);
        let nf = n as f64;
        let mesh = self.space.mesh();
        let s = self.slot(level)?;
        for c in 0..mesh.num_cells() {
            let xi = mesh.macro_cell_map(c)?.inverse_apply(x);
            let bary = [1.0 - xi[0] - xi[1] - xi[2], xi[0], xi[1], xi[2]];
            if bary.iter().any(|&b| b < -LOCATE_TOLERANCE) {
                continue;
            }
            let lat = xi.map(|v| v * nf);
            let values = &self.data[s][c];
            let floor = lat.map(|v| v.floor() as i64);
            for shift in 0..8i64 {
                let anchor = [
                    floor[0] - (shift & 1),
                    floor[1] - ((shift >> 1) & 1),
                    floor[2] - ((shift >> 2) & 1),
                ];
                if anchor.iter().any(|&a| a < 0) {
                    continue;
                }
                for cell in CellType::ALL {
                    let sub = SubgroupId::Cell(cell);
                    let w = crate::index::width(sub, level)? as i64;
                    if anchor.iter().sum::<i64>() >= w {
                        continue;
                    }
                    let verts: Vec<[f64; 3]> = sub
                        .vertex_offsets()
                        .iter()
                        .map(|o| {
                            [
                                (anchor[0] + o[0] as i64) as f64,
                                (anchor[1] + o[1] as i64) as f64,
                                (anchor[2] + o[2] as i64) as f64,
                            ]
                        })
                        .collect();
                    let Some(lambda) = barycentric(&verts, lat) else {
                        continue;
                    };
                    if lambda.iter().all(|&l| l >= -LOCATE_TOLERANCE * nf) {
                        let mut value = 0.0;
                        for (v, l) in verts.iter().zip(lambda) {
                            let t = tet_offset(n + 1, v[0] as usize, v[1] as usize, v[2] as usize);
                            value += l * values[base + t];
                        }
                        return Ok(value);
                    }
                }
            }
        }
        Err(Error::OutsideDomain(x[0], x[1], x[2]))
    }
}

fn barycentric(v: &[[f64; 3]], x: [f64; 3]) -> Option<[f64; 4]> {
    use crate::mesh::{cross, dot, sub};
    let (a, b, c, d) = (v[0], v[1], v[2], v[3]);
    let vol = dot(sub(b, a), cross(sub(c, a), sub(d, a)));
    if vol == 0.0 {
        return None;
    }
    let l1 = dot(sub(x, a), cross(sub(c, a), sub(d, a))) / vol;
    let l2 = dot(sub(b, a), cross(sub(x, a), sub(d, a))) / vol;
    let l3 = dot(sub(b, a), cross(sub(c, a), sub(x, a))) / vol;
    Some([1.0 - l1 - l2 - l3, l1, l2, l3])
}
