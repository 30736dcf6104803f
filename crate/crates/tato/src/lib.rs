pub mod cli;
pub mod config;
pub mod densities;
pub mod error;
pub mod forward;
pub mod io;
pub mod geometry;
pub mod grid;
pub mod phantom;
pub mod specfun;
pub mod spectral;

pub use error::{Error, Result};
