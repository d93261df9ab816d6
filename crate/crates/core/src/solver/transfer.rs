use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::function::FeFunction;
use crate::index::{intervals, tet_offset};

/// Coarse lattice vertices a fine vertex interpolates from, with their
/// weight. Even vertices coincide with a coarse vertex; all others are
/// midpoints of the coarse micro-edge given by their parity pattern.
pub fn coarse_parents(p: [usize; 3]) -> ([[usize; 3]; 2], usize) {
    let [i, j, k] = p;
    let half = |a: [usize; 3]| a.map(|v| v / 2);
    let pair = |a: [usize; 3], b: [usize; 3]| ([half(a), half(b)], 2);
    match (i % 2, j % 2, k % 2) {
        (0, 0, 0) => ([half(p), half(p)], 1),
        (1, 0, 0) => pair([i - 1, j, k], [i + 1, j, k]),
        (0, 1, 0) => pair([i, j - 1, k], [i, j + 1, k]),
        (0, 0, 1) => pair([i, j, k - 1], [i, j, k + 1]),
        (1, 1, 0) => pair([i + 1, j - 1, k], [i - 1, j + 1, k]),
        (1, 0, 1) => pair([i + 1, j, k - 1], [i - 1, j, k + 1]),
        (0, 1, 1) => pair([i, j + 1, k - 1], [i, j - 1, k + 1]),
        _ => pair([i - 1, j + 1, k - 1], [i + 1, j - 1, k + 1]),
    }
}

fn check_pair(coarse: &FeFunction, fine: &FeFunction, fine_level: u32) -> Result<()> {
    if !coarse.space().compatible(fine.space()) {
        return Err(Error::DescriptorMismatch);
    }
    if !coarse.space().descriptor().is_p1() {
        return Err(Error::Unsupported("P1 transfers need a P1 space".into()));
    }
    let space = coarse.space();
    if fine_level <= space.min_level() || fine_level > space.max_level() {
        return Err(Error::LevelRange {
            level: fine_level,
            min: space.min_level() + 1,
            max: space.max_level(),
        });
    }
    Ok(())
}

/// Visits every fine lattice vertex of one macro-cell in offset order.
fn for_each_fine_vertex(fine_level: u32, mut f: impl FnMut(usize, [usize; 3])) {
    let n1 = intervals(fine_level) + 1;
    let mut t = 0;
    for k in 0..n1 {
        for j in 0..n1 - k {
            for i in 0..n1 - k - j {
                f(t, [i, j, k]);
                t += 1;
            }
        }
    }
}

/// Linear interpolation from `fine_level - 1` to `fine_level`.
pub fn prolongate_p1(coarse: &FeFunction, fine: &mut FeFunction, fine_level: u32) -> Result<()> {
    check_pair(coarse, fine, fine_level)?;
    let nc = intervals(fine_level - 1) + 1;
    let src = coarse.cells(fine_level - 1)?;
    fine.cells_mut(fine_level)?
        .par_iter_mut()
        .zip(src.par_iter())
        .for_each(|(dst, src)| {
            for_each_fine_vertex(fine_level, |t, p| {
                let ([a, b], n) = coarse_parents(p);
                dst[t] = if n == 1 {
                    src[tet_offset(nc, a[0], a[1], a[2])]
                } else {
                    0.5 * (src[tet_offset(nc, a[0], a[1], a[2])] + src[tet_offset(nc, b[0], b[1], b[2])])
                };
            });
        });
    Ok(())
}

/// Transpose of [`prolongate_p1`]: each physical fine DoF is counted once
/// (through its owner) and the coarse replicas are summed.
pub fn restrict_p1(fine: &FeFunction, coarse: &mut FeFunction, fine_level: u32) -> Result<()> {
    check_pair(coarse, fine, fine_level)?;
    let nc = intervals(fine_level - 1) + 1;
    let plan = fine.space().level(fine_level)?;
    let src = fine.cells(fine_level)?;
    coarse
        .cells_mut(fine_level - 1)?
        .par_iter_mut()
        .zip(src.par_iter())
        .enumerate()
        .for_each(|(c, (dst, src))| {
            dst.fill(0.0);
            let owned = plan.owned_mask(c);
            for_each_fine_vertex(fine_level, |t, p| {
                if !owned[t] {
                    return;
                }
                let ([a, b], n) = coarse_parents(p);
                if n == 1 {
                    dst[tet_offset(nc, a[0], a[1], a[2])] += src[t];
                } else {
                    dst[tet_offset(nc, a[0], a[1], a[2])] += 0.5 * src[t];
                    dst[tet_offset(nc, b[0], b[1], b[2])] += 0.5 * src[t];
                }
            });
        });
    coarse.sync_additive(fine_level - 1)
}
