//! Shared helpers for integration tests, including a brute-force metric
//! oracle that shares no code with the library scorers.
#![allow(dead_code)]

pub mod oracle;
pub mod synth;

use std::path::PathBuf;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn read_data(name: &str) -> String {
    std::fs::read_to_string(data(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}
