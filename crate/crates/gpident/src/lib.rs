//! File formats, run configuration and experiment drivers for `gpident-core`.

pub mod config;
pub mod fsdump;
pub mod runner;
pub mod trajfile;
