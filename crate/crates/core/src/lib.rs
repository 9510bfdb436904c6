//! Variational search for small quantum error-correcting codes, with exact
//! statevector verification.

pub mod ansatz;
pub mod artifact;
pub mod catalog;
pub mod cli;
pub mod config;
pub mod cost;
pub mod error;
pub mod error_model;
pub mod expressibility;
pub mod graph;
pub mod noise;
pub mod optimize;
pub mod presets;
pub mod state;
pub mod verify;

pub use error::{Error, Result};
