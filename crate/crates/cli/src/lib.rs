//! Resumable stage driver behind the `filing-corpus` binary.

pub mod checkpoint;
pub mod config;
pub mod io;
pub mod pipeline;
pub mod stages;
