//! Experiment front end for the ring averaging simulator: file formats,
//! experiment specs and sweeps, and the command implementations the
//! `ringavg` binary dispatches to. Everything the binary does is reachable
//! through this library.

pub mod commands;
pub mod experiment;
pub mod formats;
