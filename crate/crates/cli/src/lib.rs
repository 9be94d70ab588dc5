//! Experiment runners for `varanneal-core`: parameter scans, disorder
//! histograms, gap traces and kappa reports, written as CSV (and optionally
//! SVG) files.
//!
//! Every experiment has a `Params` type, built from a config [`config::Section`]
//! or directly, a `run` function returning the numbers, and a `write` function
//! that renders them to the output directory.

pub mod checkpoint;
pub mod coeffs;
pub mod config;
pub mod experiments;
pub mod fit;
pub mod output;
pub mod plot;
pub mod pool;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
