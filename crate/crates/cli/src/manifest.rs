//! Run manifests: every results file is written together with a JSON
//! manifest echoing the resolved flags, the input file hashes and the
//! content hash of the output it describes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub format_version: u32,
    pub command: &'static str,
    pub flags: BTreeMap<String, String>,
    pub input_sha256: BTreeMap<String, String>,
    pub output: OutputDigest,
    pub events_processed: u64,
    pub wall_clock_us: u128,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().fold(String::with_capacity(64), |mut acc, b| {
        use std::fmt::Write;
        write!(acc, "{b:02x}").expect("string write");
        acc
    })
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

impl RunManifest {
    pub fn new(command: &'static str) -> Self {
        RunManifest {
            tool: "dyperm",
            version: env!("CARGO_PKG_VERSION"),
            format_version: FORMAT_VERSION,
            command,
            flags: BTreeMap::new(),
            input_sha256: BTreeMap::new(),
            output: OutputDigest {
                path: String::new(),
                sha256: String::new(),
                rows: 0,
            },
            events_processed: 0,
            wall_clock_us: 0,
        }
    }

    pub fn flag(&mut self, key: &str, value: impl ToString) {
        self.flags.insert(key.to_string(), value.to_string());
    }

    pub fn input(&mut self, path: &Path) -> std::io::Result<()> {
        self.input_sha256
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Records the output digest and writes `<output>.manifest.json`.
    pub fn seal(mut self, output: &Path, rows: usize) -> std::io::Result<()> {
        self.output = OutputDigest {
            path: output.display().to_string(),
            sha256: sha256_file(output)?,
            rows,
        };
        let manifest_path = output.with_file_name(format!(
            "{}.manifest.json",
            output.file_name().and_then(|s| s.to_str()).unwrap_or("out")
        ));
        let body = serde_json::to_string_pretty(&self).expect("manifest serializes");
        std::fs::write(manifest_path, body)
    }
}
