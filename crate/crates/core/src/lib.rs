//! Discrete-event multi-asset limit order book simulator.

pub mod agents;
pub mod book;
pub mod calibration;
pub mod config;
pub mod engine;
pub mod error;
pub mod exchange;
pub mod harness;
pub mod kernel;
pub mod rng;
pub mod types;

pub use error::{Error, Result};
