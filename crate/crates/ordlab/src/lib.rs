//! Standard-library side of the ordering laboratory: dataset files,
//! checkpoint files, configuration, CSV and SVG output, a thread-pool
//! executor and the `ordlab` command line.

pub mod checkpoint_io;
pub mod config;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod formats;
pub mod report;

pub use error::{Error, Result};
pub use ordlab_core as core;
