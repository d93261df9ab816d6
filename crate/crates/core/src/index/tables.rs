//! Frozen subgroup tables, generated by the refinement oracle on level 2.
//!
//! The same data is checked in as `data/subgroup_tables.txt` together with a
//! content hash; `tests/frozen_tables.rs` regenerates both from the oracle.
//! Vertex offsets are listed in k, then j, then i loop order.

/// `w(level) = 2^level + WIDTH_DELTA`, indexed by `SubgroupId::index`.
pub(crate) const WIDTH_DELTA: [i32; 26] = [
    // vertex
    1, //
    // edges x y z xy xz yz xyz
    0, 0, 0, 0, 0, 0, -1, //
    // faces z-up z-down y-up y-down x-up x-down xyz-up xyz-down xy-up xy-down yz-up yz-down
    0, -1, 0, -1, 0, -1, 0, -1, -1, -1, -1, -1, //
    // cells I-up I-down II-up II-down III-up III-down
    0, -2, -1, -1, -1, -1,
];

pub(crate) const VERTEX_OFFSETS: [[i32; 3]; 1] = [[0, 0, 0]];

pub(crate) const EDGE_OFFSETS: [[[i32; 3]; 2]; 7] = [
    [[0, 0, 0], [1, 0, 0]],
    [[0, 0, 0], [0, 1, 0]],
    [[0, 0, 0], [0, 0, 1]],
    [[1, 0, 0], [0, 1, 0]],
    [[1, 0, 0], [0, 0, 1]],
    [[0, 1, 0], [0, 0, 1]],
    [[0, 1, 0], [1, 0, 1]],
];

pub(crate) const FACE_OFFSETS: [[[i32; 3]; 3]; 12] = [
    [[0, 0, 0], [1, 0, 0], [0, 1, 0]],
    [[1, 0, 0], [0, 1, 0], [1, 1, 0]],
    [[0, 0, 0], [1, 0, 0], [0, 0, 1]],
    [[1, 0, 0], [0, 0, 1], [1, 0, 1]],
    [[0, 0, 0], [0, 1, 0], [0, 0, 1]],
    [[0, 1, 0], [0, 0, 1], [0, 1, 1]],
    [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
    [[1, 1, 0], [1, 0, 1], [0, 1, 1]],
    [[0, 1, 0], [1, 0, 1], [0, 1, 1]],
    [[1, 0, 0], [0, 1, 0], [1, 0, 1]],
    [[0, 1, 0], [0, 0, 1], [1, 0, 1]],
    [[0, 1, 0], [1, 1, 0], [1, 0, 1]],
];

pub(crate) const CELL_OFFSETS: [[[i32; 3]; 4]; 6] = [
    [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]],
    [[1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1]],
    [[0, 1, 0], [1, 1, 0], [1, 0, 1], [0, 1, 1]],
    [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1]],
    [[0, 1, 0], [0, 0, 1], [1, 0, 1], [0, 1, 1]],
    [[1, 0, 0], [0, 1, 0], [1, 1, 0], [1, 0, 1]],
];

/// Rows where the shipped width differs from the nominal side-length table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WidthDeviation {
    pub subgroup: &'static str,
    pub nominal_delta: i32,
    pub shipped_delta: i32,
}

pub const WIDTH_DEVIATIONS: [WidthDeviation; 1] = [WidthDeviation {
    subgroup: "face xyz-down",
    nominal_delta: -2,
    shipped_delta: -1,
}];
