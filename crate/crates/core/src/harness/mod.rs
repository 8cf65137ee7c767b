//! File formats, instance generation and experiment orchestration.

pub mod experiment;
pub mod files;
pub mod generate;
pub mod gridfile;
pub mod metrics;
