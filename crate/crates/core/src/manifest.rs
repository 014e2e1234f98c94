//! Run manifests: ordered key-value records with a content fingerprint.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

/// Ordered key-value manifest. The fingerprint is the SHA-256 of the
/// rendered body, so two reports with equal fingerprints carry equal
/// numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn body(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.body().as_bytes());
        hex_string(&digest)
    }

    /// Render with the fingerprint trailer and write to disk.
    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let mut text = self.body();
        let _ = writeln!(text, "fingerprint = {}", self.fingerprint());
        std::fs::write(path, text)
    }
}

pub fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// SHA-256 hex of arbitrary text, used for fitted-artifact checksums.
pub fn sha256_hex(text: &str) -> String {
    hex_string(&Sha256::digest(text.as_bytes()))
}
