use thiserror::Error;

/// Errors produced by the blocktet library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("cell {cell} is degenerate (6*volume = {volume6:e})")]
    DegenerateCell { cell: usize, volume6: f64 },

    #[error("non-conforming mesh: {0}")]
    NonConforming(String),

    #[error("index out of bounds: {0}")]
    OutOfBounds(String),

    #[error("level {level} outside the allowed range {min}..={max}")]
    LevelRange { level: u32, min: u32, max: u32 },

    #[error("subgroup {subgroup} does not exist on level {level}")]
    AbsentSubgroup { subgroup: String, level: u32 },

    #[error("function descriptors or meshes do not match")]
    DescriptorMismatch,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("point ({0}, {1}, {2}) lies outside the domain")]
    OutsideDomain(f64, f64, f64),

    #[error("zero diagonal entry encountered")]
    ZeroDiagonal,

    #[error("CG breakdown: p^T A p = {0:e} is not positive")]
    Breakdown(f64),

    #[error("solver diverged: {0}")]
    Divergence(String),

    #[error("classification produced {found} {kind} classes, expected {expected}")]
    ClassCount { kind: &'static str, found: usize, expected: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
