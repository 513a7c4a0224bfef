//! Invariance pressure of discrete-time control systems.

pub mod cover;
pub mod error;
pub mod experiment;
pub mod pressure;
pub mod properties;
pub mod stateset;
pub mod system;
pub mod trajectory;
pub mod transforms;

pub use error::{Error, Result};
