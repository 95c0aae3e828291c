//! Fixtures, file formats, export, and the command-line surface.

pub mod builders;
pub mod cli;
pub mod dot;
pub mod format;
