//! Batch front door for the small-noise gradient-SDE laboratory: config
//! parsing, stage orchestration and artifact emission.

pub mod config;
pub mod ensemble_io;
pub mod manifest;
pub mod report;
pub mod stages;
