//! Run manifests and the CSV files that point back to them.
//!
//! Each CSV opens with `#` lines holding the manifest hash and the manifest
//! itself. The hash covers everything but the wall-clock time, so equal
//! inputs give byte-identical CSVs; `manifest.json` adds the timing.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::config::Parameters;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub tool_version: &'static str,
    pub parameters: Parameters,
    pub grids: Map<String, Value>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &'static str, parameters: Parameters) -> Self {
        Self {
            command,
            tool_version: env!("CARGO_PKG_VERSION"),
            parameters,
            grids: Map::new(),
            outputs: Vec::new(),
        }
    }

    pub fn grid(&mut self, key: &str, value: impl Serialize) {
        self.grids.insert(key.to_string(), serde_json::to_value(value).expect("grid metadata serializes"));
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn header(&self) -> String {
        format!("# manifest_sha256 = {}\n# manifest = {}\n", self.hash(), self.canonical_json())
    }

    pub fn write_json(&self, dir: &Path, seconds: f64) -> Result<PathBuf> {
        let mut v = serde_json::to_value(self)?;
        let obj = v.as_object_mut().expect("manifest is an object");
        obj.insert("manifest_sha256".into(), Value::String(self.hash()));
        obj.insert("wall_clock_seconds".into(), serde_json::json!(seconds));
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string_pretty(&v)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Writes `name` in `dir` with the manifest header, a column line and
/// one line per row.
pub fn write_csv<R>(dir: &Path, name: &str, manifest: &RunManifest, columns: &[&str], rows: R) -> Result<()>
where
    R: IntoIterator,
    R::Item: AsRef<[f64]>,
{
    let path = dir.join(name);
    let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    out.write_all(manifest.header().as_bytes())?;
    writeln!(out, "{}", columns.join(","))?;
    let mut line = String::new();
    for row in rows {
        line.clear();
        for (i, x) in row.as_ref().iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            let _ = write!(line, "{x:?}");
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
