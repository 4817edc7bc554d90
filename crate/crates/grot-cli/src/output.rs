//! Artifact emission. Every artifact is built fully in memory and written
//! atomically — staged into a temp file in the target directory, then
//! renamed — so an interrupted or failed run never leaves partial files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// The resolved output directory for one run.
pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    /// Resolves the output directory: the `GROT_OUT_DIR` environment
    /// variable wins over the configured path. Creates the directory.
    pub fn resolve(config_dir: &Path) -> Result<OutDir> {
        let dir = match std::env::var_os("GROT_OUT_DIR") {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => config_dir.to_path_buf(),
        };
        fs::create_dir_all(&dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(OutDir { dir })
    }

    /// Writes `bytes` to `<dir>/<name>` atomically and reports the path on
    /// standard output.
    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)
            .with_context(|| format!("staging {}", path.display()))?;
        tmp.write_all(bytes)
            .with_context(|| format!("staging {}", path.display()))?;
        tmp.persist(&path)
            .with_context(|| format!("committing {}", path.display()))?;
        println!("wrote {}", path.display());
        Ok(path)
    }
}

/// Pretty JSON with a trailing newline. Key order is the declaration order
/// of the serialized types (maps are sorted), so output is deterministic.
pub fn to_json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(value).context("serializing JSON artifact")?;
    buf.push(b'\n');
    Ok(buf)
}

/// A header row plus data rows, RFC-4180-style.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).context("writing CSV header")?;
    for row in rows {
        w.write_record(row).context("writing CSV row")?;
    }
    w.into_inner().context("flushing CSV artifact")
}

/// Shortest-roundtrip decimal rendering, the same for every artifact.
pub fn fnum(v: f64) -> String {
    format!("{v}")
}
