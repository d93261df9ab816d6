use super::{cell_data, CellData, Form, Lattice};
use crate::error::{Error, Result};
use crate::index::tet_offset;
use crate::mesh::CoarseMesh;

/// Center followed by the two orientations of the seven edge directions.
pub const STENCIL_DIRECTIONS: [[i32; 3]; 15] = {
    let mut dirs = [[0i32; 3]; 15];
    let edge = [
        [1, 0, 0],
        [0, 1, 0],
        [0, 0, 1],
        [1, -1, 0],
        [1, 0, -1],
        [0, 1, -1],
        [1, -1, 1],
    ];
    let mut e = 0;
    while e < 7 {
        dirs[1 + 2 * e] = edge[e];
        dirs[2 + 2 * e] = [-edge[e][0], -edge[e][1], -edge[e][2]];
        e += 1;
    }
    dirs
};

/// Matrix row of a macro-interior vertex, one per macro-cell.
#[derive(Clone, Debug, PartialEq)]
pub struct StencilTable {
    pub level: u32,
    pub weights: Vec<[f64; 15]>,
}

fn direction_slot(d: [i64; 3]) -> Option<usize> {
    STENCIL_DIRECTIONS
        .iter()
        .position(|s| s.iter().zip(&d).all(|(&a, &b)| a as i64 == b))
}

/// Row at `probe` assembled from the incident micro-cells' element
/// matrices, keyed by direction.
pub(crate) fn probe_row(cell: &CellData, lat: &Lattice, probe: [usize; 3]) -> Result<[f64; 15]> {
    let mut row = [0.0; 15];
    let mut incident = 0;
    for s in 0..6 {
        let offs = &lat.offs[s];
        for c in 0..4 {
            let o = offs[c];
            if probe[0] < o[0] || probe[1] < o[1] || probe[2] < o[2] {
                continue;
            }
            let q = [probe[0] - o[0], probe[1] - o[1], probe[2] - o[2]];
            if q[0] + q[1] + q[2] >= lat.widths[s] {
                continue;
            }
            incident += 1;
            let t = tet_offset(lat.widths[s], q[0], q[1], q[2]);
            for l in 0..4 {
                let d = [0, 1, 2].map(|a| offs[l][a] as i64 - o[a] as i64);
                let slot = direction_slot(d).ok_or_else(|| {
                    Error::Unsupported(format!("neighbor direction {d:?} outside stencil"))
                })?;
                row[slot] += cell.entry(s, t, c, l);
            }
        }
    }
    if incident != 24 {
        return Err(Error::Unsupported(format!(
            "probe {probe:?} has {incident} incident micro-cells, expected 24"
        )));
    }
    Ok(row)
}

impl StencilTable {
    pub(crate) fn from_cells(level: u32, cells: &[CellData]) -> Self {
        let lat = Lattice::new(level);
        let weights = cells
            .iter()
            .map(|c| probe_row(c, &lat, [1, 1, 1]).expect("level >= 2 has an interior probe"))
            .collect();
        Self { level, weights }
    }

    /// Row applied at a macro-interior vertex.
    #[inline]
    pub(crate) fn interior_row(&self, cell: usize, lat: &Lattice, p: [usize; 3], x: &[f64]) -> f64 {
        let w = &self.weights[cell];
        let mut sum = 0.0;
        for (d, dir) in STENCIL_DIRECTIONS.iter().enumerate() {
            let q = [0, 1, 2].map(|a| (p[a] as i64 + dir[a] as i64) as usize);
            sum += w[d] * x[lat.vertex(q)];
        }
        sum
    }

    /// `y = A x` on one macro-cell: full rows inside, partial rows from the
    /// cell's own micro-cells on its boundary.
    pub(crate) fn apply_cell(&self, cell: usize, data: &CellData, lat: &Lattice, x: &[f64], y: &mut [f64]) {
        let w = &self.weights[cell];
        let n1 = lat.n1;
        let mut t = 0;
        for k in 0..n1 {
            for j in 0..n1 - k {
                let interior_row = j > 0 && k > 0 && j + k < n1 - 2;
                // offsets of the neighboring rows (dj, dk) in {-1,0,1}^2
                let starts: [[usize; 3]; 3] = if interior_row {
                    std::array::from_fn(|a| {
                        std::array::from_fn(|b| tet_offset(n1, 0, j + a - 1, k + b - 1))
                    })
                } else {
                    [[0; 3]; 3]
                };
                for i in 0..n1 - k - j {
                    if interior_row && i > 0 && i + j + k < n1 - 1 {
                        let mut sum = 0.0;
                        for (d, dir) in STENCIL_DIRECTIONS.iter().enumerate() {
                            let start = starts[(dir[1] + 1) as usize][(dir[2] + 1) as usize];
                            sum += w[d] * x[(start as i64 + i as i64 + dir[0] as i64) as usize];
                        }
                        y[t] = sum;
                    } else {
                        y[t] = data.partial_row(lat, [i, j, k], x);
                    }
                    t += 1;
                }
            }
        }
    }

    pub fn center(&self, cell: usize) -> f64 {
        self.weights[cell][0]
    }

    /// Weight for a lattice direction, if it belongs to the stencil.
    pub fn weight(&self, cell: usize, direction: [i32; 3]) -> Option<f64> {
        direction_slot(direction.map(|v| v as i64)).map(|s| self.weights[cell][s])
    }
}

/// Stencil table of a constant-coefficient form on `level`.
pub fn compute_stencil(form: &Form, mesh: &CoarseMesh, level: u32) -> Result<StencilTable> {
    if !form.is_constant() {
        return Err(Error::Unsupported(
            "stencil tables need a constant-coefficient form".into(),
        ));
    }
    if level < 2 {
        return Err(Error::LevelRange {
            level,
            min: 2,
            max: crate::function::MAX_LEVEL,
        });
    }
    let cells = (0..mesh.num_cells())
        .map(|c| cell_data(form, &mesh.macro_cell_map(c)?, level))
        .collect::<Result<Vec<_>>>()?;
    Ok(StencilTable::from_cells(level, &cells))
}

/// Stencil recomputed at an arbitrary interior probe, for invariance checks.
pub fn stencil_at_probe(form: &Form, mesh: &CoarseMesh, cell: usize, level: u32, probe: [usize; 3]) -> Result<[f64; 15]> {
    let data = cell_data(form, &mesh.macro_cell_map(cell)?, level)?;
    let lat = Lattice::new(level);
    if !lat.is_interior(probe) {
        return Err(Error::OutOfBounds(format!("probe {probe:?} is not interior at level {level}")));
    }
    probe_row(&data, &lat, probe)
}
