//! Experiment campaigns over random polytope corpora, file-based tools and
//! report emission for the `jsantalo` CLI.

pub mod config;
pub mod corpus;
pub mod experiments;
pub mod report;

pub use config::Config;
pub use report::{CaseRecord, ExperimentReport, Verdict};
