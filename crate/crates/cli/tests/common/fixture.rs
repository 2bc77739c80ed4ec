use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toa_core::oracle::OracleReport;

/// A scenario with reference values from the brute-force oracles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub description: String,
    /// Scenario file contents; table paths are relative to the fixtures directory.
    pub scenario: String,
    pub reports: Vec<OracleReport>,
}

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

#[allow(dead_code)]
pub fn load_all() -> Vec<Fixture> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixtures_dir())
        .expect("fixtures directory")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| serde_json::from_str(&std::fs::read_to_string(p).expect("fixture file")).expect("fixture JSON"))
        .collect()
}
