//! Experiment driver around `gwt-core`: config files, run orchestration and
//! CSV/snapshot artifacts.

pub mod config;
pub mod runner;
