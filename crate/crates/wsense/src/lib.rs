//! Dataset ingest, file formats, reports and experiment orchestration on top
//! of `wsense-core`.

pub mod audit;
pub mod error;
pub mod ingest;
pub mod plan;
pub mod report;
pub mod tensor_io;

pub use error::{AppError, Result};
