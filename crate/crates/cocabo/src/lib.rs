//! File formats, grid runner and command line on top of [`cocabo_core`].

pub use cocabo_core as core;

pub mod commands;
pub mod config;
pub mod export;
pub mod grid;
pub mod io;
