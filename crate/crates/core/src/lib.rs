//! Quasi-metric spaces, semi-Lipschitz functions and Randers-type Finsler
//! structures, with tools to recover and certify almost isometries and the
//! transforms they induce on semi-Lipschitz function spaces.

pub mod cli;
pub mod error;
pub mod field;
pub mod finsler;
pub mod gen;
pub mod geom;
pub mod isometry;
pub mod qspace;
pub mod slip;
pub mod transform;

pub use error::{Error, Result};
