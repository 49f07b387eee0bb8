//! Command line and REST gateway for the lake engine.

pub mod cli;
pub mod plot;
pub mod server;
