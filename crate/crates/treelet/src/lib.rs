//! Distributed color-coding treelet counting: transports, the exchange
//! fabric, file formats and the estimation runner.

pub mod error;
pub mod fabric;
pub mod hockney;
pub mod io;
pub mod metrics;
pub mod runner;
pub mod templates;
pub mod transport;

pub use error::{Error, Result};
