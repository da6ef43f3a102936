pub mod circuit;
pub mod coding;
pub mod convex_split;
pub mod entropy;
pub mod error;
pub mod field;
pub mod flatten;
pub mod linalg;

pub use error::{Error, Result};
