//! Experiment harness around `privmed-core`: a suite of synthetic
//! distributions with exact oracles, statistical audits, seeded batch
//! experiments with CSV output, and the `privmed` command line tool.

pub mod audit;
pub mod distributions;
pub mod experiment;
pub mod numeric;
pub mod sample_size;
pub mod stats;
