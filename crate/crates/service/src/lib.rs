//! Command-line and HTTP front ends over `wirebend-core`.

pub mod api;
pub mod cli;
pub mod pipeline;
