//! Shared fixtures for the benchmarks in `benches/`.

use prexpect_core::Program;

/// Source text of a program shipped in the repository's `programs/` directory.
pub fn source(name: &str) -> String {
    let path = format!("{}/../../programs/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn program(name: &str) -> Program {
    prexpect_cli::parse_program(name, &source(name)).expect("bundled programs parse")
}
