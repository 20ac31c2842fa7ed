//! Command-line harness for filler-gap experiments: train the n-gram
//! baseline, score experiments against a backend, analyze and report.

pub mod archive;
pub mod backends;
pub mod commands;
pub mod fmt;
pub mod svg;
