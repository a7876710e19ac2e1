//! One module per pipeline stage.

pub mod audit;
pub mod clean;
pub mod dedup;
pub mod extract;
pub mod fetch;
pub mod report;
pub mod split;
