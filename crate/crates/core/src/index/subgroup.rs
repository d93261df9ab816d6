//! The 26 translation-congruence classes of micro-primitives.
//!
//! Tag names follow a fixed geometric convention, frozen together with the
//! offset tables in `tables.rs`:
//!
//! * edges are named by their lattice direction (up to sign): `x` = (1,0,0), `y` = (0,1,0),
//!   `z` = (0,0,1), `xy` = (1,-1,0), `xz` = (1,0,-1), `yz` = (0,1,-1) and
//!   `xyz` = (1,-1,1), the inner edge of the Bey octahedron;
//! * faces are grouped by plane normal: `x`, `y`, `z` for the coordinate
//!   planes, `xyz` for normal (1,1,1), `xy` for normal (1,1,0) (faces that
//!   contain an `xy` edge) and `yz` for normal (0,1,1) (faces that contain a
//!   `yz` edge);
//! * cells are grouped into point-reflection pairs, `I` being the pair that
//!   contains the corner tetrahedron.
//!
//! Inside every pair, `up` is the class whose canonical key (sorted vertex
//! differences relative to the lexicographically smallest vertex) compares
//! smaller. Cell pairs are numbered by their smallest key.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::tables;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimitiveKind {
    Vertex,
    Edge,
    Face,
    Cell,
}

impl PrimitiveKind {
    pub fn vertex_count(self) -> usize {
        match self {
            PrimitiveKind::Vertex => 1,
            PrimitiveKind::Edge => 2,
            PrimitiveKind::Face => 3,
            PrimitiveKind::Cell => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PrimitiveKind::Vertex => "vertex",
            PrimitiveKind::Edge => "edge",
            PrimitiveKind::Face => "face",
            PrimitiveKind::Cell => "cell",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeDir {
    X,
    Y,
    Z,
    XY,
    XZ,
    YZ,
    XYZ,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaceType {
    ZUp,
    ZDown,
    YUp,
    YDown,
    XUp,
    XDown,
    XyzUp,
    XyzDown,
    XyUp,
    XyDown,
    YzUp,
    YzDown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellType {
    IUp,
    IDown,
    IIUp,
    IIDown,
    IIIUp,
    IIIDown,
}

impl EdgeDir {
    pub const ALL: [EdgeDir; 7] = [
        EdgeDir::X,
        EdgeDir::Y,
        EdgeDir::Z,
        EdgeDir::XY,
        EdgeDir::XZ,
        EdgeDir::YZ,
        EdgeDir::XYZ,
    ];

    pub fn tag(self) -> &'static str {
        ["x", "y", "z", "xy", "xz", "yz", "xyz"][self as usize]
    }

    /// Lattice direction vector of the edge class.
    pub fn direction(self) -> [i32; 3] {
        let o = tables::EDGE_OFFSETS[self as usize];
        [o[1][0] - o[0][0], o[1][1] - o[0][1], o[1][2] - o[0][2]]
    }
}

impl FaceType {
    pub const ALL: [FaceType; 12] = [
        FaceType::ZUp,
        FaceType::ZDown,
        FaceType::YUp,
        FaceType::YDown,
        FaceType::XUp,
        FaceType::XDown,
        FaceType::XyzUp,
        FaceType::XyzDown,
        FaceType::XyUp,
        FaceType::XyDown,
        FaceType::YzUp,
        FaceType::YzDown,
    ];

    pub fn tag(self) -> &'static str {
        [
            "z-up", "z-down", "y-up", "y-down", "x-up", "x-down", "xyz-up", "xyz-down", "xy-up",
            "xy-down", "yz-up", "yz-down",
        ][self as usize]
    }
}

impl CellType {
    pub const ALL: [CellType; 6] = [
        CellType::IUp,
        CellType::IDown,
        CellType::IIUp,
        CellType::IIDown,
        CellType::IIIUp,
        CellType::IIIDown,
    ];

    pub fn tag(self) -> &'static str {
        ["I-up", "I-down", "II-up", "II-down", "III-up", "III-down"][self as usize]
    }
}

/// Identifier of one micro-primitive subgroup.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubgroupId {
    Vertex,
    Edge(EdgeDir),
    Face(FaceType),
    Cell(CellType),
}

impl SubgroupId {
    pub const COUNT: usize = 26;

    /// All subgroups, vertex first, then edges, faces and cells.
    pub fn all() -> impl Iterator<Item = SubgroupId> {
        std::iter::once(SubgroupId::Vertex)
            .chain(EdgeDir::ALL.into_iter().map(SubgroupId::Edge))
            .chain(FaceType::ALL.into_iter().map(SubgroupId::Face))
            .chain(CellType::ALL.into_iter().map(SubgroupId::Cell))
    }

    pub fn of_kind(kind: PrimitiveKind) -> impl Iterator<Item = SubgroupId> {
        Self::all().filter(move |s| s.kind() == kind)
    }

    pub fn kind(self) -> PrimitiveKind {
        match self {
            SubgroupId::Vertex => PrimitiveKind::Vertex,
            SubgroupId::Edge(_) => PrimitiveKind::Edge,
            SubgroupId::Face(_) => PrimitiveKind::Face,
            SubgroupId::Cell(_) => PrimitiveKind::Cell,
        }
    }

    /// Dense position in `0..26`, matching the order of [`SubgroupId::all`].
    pub fn index(self) -> usize {
        match self {
            SubgroupId::Vertex => 0,
            SubgroupId::Edge(e) => 1 + e as usize,
            SubgroupId::Face(f) => 8 + f as usize,
            SubgroupId::Cell(c) => 20 + c as usize,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            SubgroupId::Vertex => "V",
            SubgroupId::Edge(e) => e.tag(),
            SubgroupId::Face(f) => f.tag(),
            SubgroupId::Cell(c) => c.tag(),
        }
    }

    /// Offset of the subgroup's polytope side length relative to `2^level`.
    pub fn width_delta(self) -> i32 {
        tables::WIDTH_DELTA[self.index()]
    }

    /// Vertex offsets of the instance anchored at `(0,0,0)`, in lattice units.
    pub fn vertex_offsets(self) -> &'static [[i32; 3]] {
        match self {
            SubgroupId::Vertex => &tables::VERTEX_OFFSETS,
            SubgroupId::Edge(e) => &tables::EDGE_OFFSETS[e as usize],
            SubgroupId::Face(f) => &tables::FACE_OFFSETS[f as usize],
            SubgroupId::Cell(c) => &tables::CELL_OFFSETS[c as usize],
        }
    }
}

impl fmt::Display for SubgroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind().as_str(), self.tag())
    }
}

impl FromStr for SubgroupId {
    type Err = Error;

    /// Parses the `Display` form, e.g. `"face xyz-down"` or `"vertex V"`.
    fn from_str(s: &str) -> Result<Self> {
        SubgroupId::all()
            .find(|id| id.to_string() == s.trim())
            .ok_or_else(|| Error::Unsupported(format!("unknown subgroup '{s}'")))
    }
}
