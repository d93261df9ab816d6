use std::io::Write;

use super::FeFunction;
use crate::error::{Error, Result};
use crate::index::{index_set, intervals, tet_offset, CellType, SubgroupId};

/// VTK cell type of a linear tetrahedron.
const VTK_TETRA: u32 = 10;

/// Writes the micro-mesh of `level` as a legacy ASCII unstructured grid
/// with one scalar point field per function.
///
/// Points are the owned micro-vertices, numbered in cell order; every
/// micro-cell becomes one tetrahedron.
pub fn write_vtk<W: Write>(out: &mut W, level: u32, functions: &[&FeFunction]) -> Result<()> {
    let first = functions
        .first()
        .ok_or_else(|| Error::Unsupported("no function to export".into()))?;
    for f in functions {
        if !f.space().compatible(first.space()) {
            return Err(Error::DescriptorMismatch);
        }
        if f.name().is_empty() || f.name().contains(char::is_whitespace) {
            return Err(Error::Unsupported(format!(
                "invalid field name '{}'",
                f.name()
            )));
        }
    }
    let space = first.space();
    let plan = space.level(level)?;
    let block = plan
        .block_of(SubgroupId::Vertex)
        .filter(|&b| plan.blocks[b].m == 1)
        .ok_or_else(|| Error::Unsupported("export needs a P1 vertex block".into()))?;
    let base = plan.blocks[block].base;
    let n = intervals(level);
    let h = 1.0 / n as f64;
    let mesh = space.mesh();

    // vertex numbering and coordinates
    let nv = crate::index::n_tet(n + 1);
    let mut ids = vec![vec![usize::MAX; nv]; mesh.num_cells()];
    let mut points = Vec::new();
    let mut sources = Vec::new();
    for c in 0..mesh.num_cells() {
        let map = mesh.macro_cell_map(c)?;
        for (t, p) in index_set(n + 1).enumerate() {
            let off = base + t;
            if plan.is_owned(c, off) {
                ids[c][t] = points.len();
                points.push(map.apply([p.i as f64 * h, p.j as f64 * h, p.k as f64 * h]));
                sources.push((c, off));
            } else {
                let g = plan.group_of[c][off] as usize;
                let (oc, oo) = plan.replicas().group(g)[0];
                ids[c][t] = ids[oc as usize][oo as usize - base];
            }
        }
    }

    let mut cells = Vec::new();
    for c in 0..mesh.num_cells() {
        for ct in CellType::ALL {
            let s = SubgroupId::Cell(ct);
            let w = crate::index::width(s, level)?;
            for p in index_set(w) {
                let verts = s.vertex_offsets().iter().map(|o| {
                    let (i, j, k) = (p.i + o[0] as usize, p.j + o[1] as usize, p.k + o[2] as usize);
                    ids[c][tet_offset(n + 1, i, j, k)]
                });
                let mut quad = [0usize; 4];
                for (q, v) in quad.iter_mut().zip(verts) {
                    *q = v;
                }
                cells.push(quad);
            }
        }
    }

    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "blocktet level {level}")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", points.len())?;
    for p in &points {
        writeln!(out, "{:?} {:?} {:?}", p[0], p[1], p[2])?;
    }
    writeln!(out, "CELLS {} {}", cells.len(), 5 * cells.len())?;
    for q in &cells {
        writeln!(out, "4 {} {} {} {}", q[0], q[1], q[2], q[3])?;
    }
    writeln!(out, "CELL_TYPES {}", cells.len())?;
    for _ in &cells {
        writeln!(out, "{VTK_TETRA}")?;
    }
    writeln!(out, "POINT_DATA {}", points.len())?;
    for f in functions {
        writeln!(out, "SCALARS {} double 1", f.name())?;
        writeln!(out, "LOOKUP_TABLE default")?;
        let data = f.cells(level)?;
        for &(c, off) in &sources {
            writeln!(out, "{:?}", data[c][off])?;
        }
    }
    Ok(())
}
