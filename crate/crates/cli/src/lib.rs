//! File formats and command-line pipelines around `persal-core`: the FGRD
//! binary grid format, PGM export, JSON mappings, preference vectors and
//! detection/annotation manifests, run manifests, and the `persal`
//! subcommands.

pub mod cli;
pub mod coco;
pub mod commands;
pub mod error;
pub mod fgrd;
pub mod formats;
pub mod manifest;
pub mod pgm;

pub use error::{CliError, CliResult};
