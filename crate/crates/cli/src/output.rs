//! Output directory handling: every run writes a manifest describing the
//! resolved configuration, and every CSV starts with a comment line that
//! carries the manifest hash so data files can be traced back to the run
//! that made them.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use sha2::{Digest, Sha256};

use kdvlab::RunConfig;

pub struct OutputDir {
    dir: PathBuf,
    hash: String,
}

impl OutputDir {
    /// Creates the directory, computes the manifest hash from the resolved
    /// config + subcommand + artifact version (wall-clock excluded so that
    /// identical runs hash identically), and writes `manifest.txt`.
    pub fn create(dir: &Path, cfg: &RunConfig, subcommand: &str) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        let version = env!("CARGO_PKG_VERSION");
        let identity = format!(
            "subcommand = {subcommand}\nversion = {version}\n{}",
            cfg.canonical()
        );
        let mut hasher = Sha256::new();
        hasher.update(identity.as_bytes());
        let hash = hex_prefix(&hasher.finalize(), 16);
        let wall_clock = SystemTime::now()
            .duration_since(SystemTime::UNIX_EPOCH)
            .map(|d| d.as_secs().to_string())
            .unwrap_or_else(|_| "unknown".into());
        let manifest = format!(
            "# run manifest\nmanifest_hash = {hash}\nwall_clock_unix = {wall_clock}\n{identity}"
        );
        fs::write(dir.join("manifest.txt"), manifest)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Opens a CSV with the manifest comment and header row in place.
    pub fn csv(&self, name: &str, header: &str) -> std::io::Result<CsvFile> {
        let mut file = fs::File::create(self.dir.join(name))?;
        writeln!(file, "# manifest: {}", self.hash)?;
        writeln!(file, "{header}")?;
        Ok(CsvFile { file })
    }
}

pub struct CsvFile {
    file: fs::File,
}

impl CsvFile {
    pub fn row(&mut self, fields: &[String]) -> std::io::Result<()> {
        writeln!(self.file, "{}", fields.join(","))
    }
}

fn hex_prefix(bytes: &[u8], n: usize) -> String {
    bytes
        .iter()
        .take(n / 2)
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Deterministic numeric rendering used in all CSV bodies.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v:.12e}")
    }
}
