pub mod assembly;
pub mod error;
pub mod index;
pub mod function;
pub mod mesh;
pub mod operator;
pub mod oracle;
pub mod solver;

pub use error::{Error, Result};
