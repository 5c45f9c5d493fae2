//! Command line and HTTP service for the filtering experiments.

pub mod cli;
#[cfg(feature = "serve")]
pub mod service;
#[cfg(feature = "serve")]
pub mod session;
