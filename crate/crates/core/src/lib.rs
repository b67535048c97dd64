//! Minimal AR-state-space estimation of VAR and VARX models.

pub mod blockops;
pub mod error;
pub mod estimation;
pub mod json;
pub mod likelihood;
pub mod linalg;
pub mod simulation;
pub mod structure;

pub use error::{Error, Result};
pub use structure::{enumerate_structures, StructureParams};
