//! Library side of the `hydrofel` command-line tool: configuration schema,
//! file writers and the verification battery. The binary in `main.rs` is a
//! thin dispatcher over these modules so that integration tests can drive
//! them directly.

pub mod config;
pub mod output;
pub mod verify;
