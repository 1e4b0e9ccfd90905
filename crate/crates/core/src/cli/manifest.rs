use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub seed: u64,
    pub tol: Option<f64>,
    /// Input path to SHA-256 of its bytes.
    pub input_digests: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub wall_time_ms: f64,
    pub passed: bool,
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
