//! Closed-form indexing of micro-primitives on a refined macro-cell.
//!
//! Every subgroup of micro-primitives on level `l` is in one-to-one
//! correspondence with the tetrahedral index set
//! `I_tet(w) = {(i, j, k) : i + j + k < w}` for the subgroup's side length
//! `w = width(subgroup, l)`. Arrays are laid out by the linearization
//! [`linearize`], which enumerates `I_tet(w)` with `i` fastest and `k`
//! slowest.

mod subgroup;
mod tables;

pub use subgroup::{CellType, EdgeDir, FaceType, PrimitiveKind, SubgroupId};
pub use tables::{WidthDeviation, WIDTH_DEVIATIONS};

use crate::error::{Error, Result};

/// Lowest level on which all 26 subgroups exist.
pub const MIN_TAXONOMY_LEVEL: u32 = 2;

/// `w`-th triangular number, the cardinality of `I_tri(w)`.
#[inline]
pub const fn n_tri(w: usize) -> usize {
    w * (w + 1) / 2
}

/// `w`-th tetrahedral number, the cardinality of `I_tet(w)`.
#[inline]
pub const fn n_tet(w: usize) -> usize {
    w * (w + 1) * (w + 2) / 6
}

/// Number of lattice intervals along a macro-edge on `level`.
#[inline]
pub const fn intervals(level: u32) -> usize {
    1 << level
}

/// Integer lattice coordinates of a micro-primitive (units of `h = 2^-level`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolytopeIndex {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl PolytopeIndex {
    pub const fn new(i: usize, j: usize, k: usize) -> Self {
        Self { i, j, k }
    }

    #[inline]
    pub fn sum(&self) -> usize {
        self.i + self.j + self.k
    }

    #[inline]
    pub fn contained_in(&self, w: usize) -> bool {
        self.sum() < w
    }

    /// Shifts by a signed lattice offset, `None` if a coordinate turns negative.
    #[inline]
    pub fn offset(&self, d: [i32; 3]) -> Option<PolytopeIndex> {
        let add = |a: usize, b: i32| -> Option<usize> {
            let v = a as i64 + b as i64;
            (v >= 0).then_some(v as usize)
        };
        Some(PolytopeIndex {
            i: add(self.i, d[0])?,
            j: add(self.j, d[1])?,
            k: add(self.k, d[2])?,
        })
    }

    pub fn to_array(self) -> [i64; 3] {
        [self.i as i64, self.j as i64, self.k as i64]
    }
}

impl From<(usize, usize, usize)> for PolytopeIndex {
    fn from((i, j, k): (usize, usize, usize)) -> Self {
        Self { i, j, k }
    }
}

/// Enumerates `I_tet(w)` in loop-nest order: `k` outer, `j` middle, `i` inner.
pub fn index_set(w: usize) -> impl Iterator<Item = PolytopeIndex> {
    (0..w).flat_map(move |k| {
        (0..w - k).flat_map(move |j| (0..w - k - j).map(move |i| PolytopeIndex { i, j, k }))
    })
}

/// Unchecked linearization `t_w(i, j, k)`; the caller guarantees `i+j+k < w`.
#[inline(always)]
pub fn tet_offset(w: usize, i: usize, j: usize, k: usize) -> usize {
    debug_assert!(i + j + k < w, "({i},{j},{k}) not in I_tet({w})");
    n_tet(w) - n_tet(w - k) + n_tri(w - k) - n_tri(w - k - j) + i
}

/// Bijection `I_tet(w) -> {0, .., n_tet(w) - 1}`.
pub fn linearize(w: usize, p: PolytopeIndex) -> Result<usize> {
    if !p.contained_in(w) {
        return Err(Error::OutOfBounds(format!(
            "({}, {}, {}) not in I_tet({w})",
            p.i, p.j, p.k
        )));
    }
    Ok(tet_offset(w, p.i, p.j, p.k))
}

/// Inverse of [`linearize`], by layer-wise subtraction.
pub fn delinearize(w: usize, offset: usize) -> Result<PolytopeIndex> {
    if offset >= n_tet(w) {
        return Err(Error::OutOfBounds(format!(
            "offset {offset} >= n_tet({w}) = {}",
            n_tet(w)
        )));
    }
    let mut rest = offset;
    let mut k = 0;
    while rest >= n_tri(w - k) {
        rest -= n_tri(w - k);
        k += 1;
    }
    let mut j = 0;
    while rest >= w - k - j {
        rest -= w - k - j;
        j += 1;
    }
    Ok(PolytopeIndex { i: rest, j, k })
}

/// Interleaving of the `m` scalars stored per micro-primitive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Layout {
    /// All `m` scalars of one micro-primitive are adjacent.
    #[default]
    Aos,
    /// Scalar `d` of all micro-primitives forms one contiguous run.
    Soa,
}

impl Layout {
    /// Unchecked array offset of scalar `d` on micro-primitive `t` (linearized).
    #[inline(always)]
    pub fn offset(self, w: usize, m: usize, t: usize, d: usize) -> usize {
        match self {
            Layout::Aos => m * t + d,
            Layout::Soa => d * n_tet(w) + t,
        }
    }

    pub fn linearize(self, w: usize, m: usize, p: PolytopeIndex, d: usize) -> Result<usize> {
        if d >= m {
            return Err(Error::OutOfBounds(format!("DoF index {d} >= m = {m}")));
        }
        Ok(self.offset(w, m, linearize(w, p)?, d))
    }
}

/// `m * t_w(p) + d`.
pub fn linearize_aos(w: usize, m: usize, p: PolytopeIndex, d: usize) -> Result<usize> {
    Layout::Aos.linearize(w, m, p, d)
}

/// `d * n_tet(w) + t_w(p)`.
pub fn linearize_soa(w: usize, m: usize, p: PolytopeIndex, d: usize) -> Result<usize> {
    Layout::Soa.linearize(w, m, p, d)
}

/// Side length of the tetrahedral index set of `subgroup` on `level`.
///
/// Defined whenever the subgroup has at least one member on `level`; on
/// levels 0 and 1 several subgroups are absent.
pub fn width(subgroup: SubgroupId, level: u32) -> Result<usize> {
    let w = intervals(level) as i64 + subgroup.width_delta() as i64;
    if w < 1 {
        return Err(Error::AbsentSubgroup {
            subgroup: subgroup.to_string(),
            level,
        });
    }
    Ok(w as usize)
}

/// Reference coordinate `h * (i, j, k)` of a micro-vertex.
pub fn micro_vertex_coord(level: u32, p: PolytopeIndex) -> Result<[f64; 3]> {
    let n = intervals(level);
    if !p.contained_in(n + 1) {
        return Err(Error::OutOfBounds(format!(
            "micro-vertex ({}, {}, {}) outside level {level}",
            p.i, p.j, p.k
        )));
    }
    let h = 1.0 / n as f64;
    Ok([p.i as f64 * h, p.j as f64 * h, p.k as f64 * h])
}

/// Micro-vertex lattice indices of the instance `p` of `subgroup`.
pub fn micro_primitive_vertices(
    subgroup: SubgroupId,
    p: PolytopeIndex,
    level: u32,
) -> Result<Vec<PolytopeIndex>> {
    let w = width(subgroup, level)?;
    if !p.contained_in(w) {
        return Err(Error::OutOfBounds(format!(
            "({}, {}, {}) not in I_tet({w}) of {subgroup}",
            p.i, p.j, p.k
        )));
    }
    Ok(subgroup
        .vertex_offsets()
        .iter()
        .map(|&o| p.offset(o).expect("offsets are non-negative"))
        .collect())
}

/// Total scalars on one macro-cell for `(subgroup, m)` entries on `level`.
pub fn dof_count<I>(entries: I, level: u32) -> Result<usize>
where
    I: IntoIterator<Item = (SubgroupId, usize)>,
{
    entries
        .into_iter()
        .map(|(s, m)| Ok(m * n_tet(width(s, level)?)))
        .sum()
}
