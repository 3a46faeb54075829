//! Configuration, file formats, parameter sweeps and the `rendezvous`
//! command-line front end built on `rendezvous-core`.

pub mod cli;
pub mod config;
pub mod formats;
pub mod sweep;

pub use config::{Grid, RunConfig};
