use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use delone_approx::config::Experiment;
use delone_approx::numerics::Scalar;
use delone_approx::{Error, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Significant digits of every decimal string written to disk.
pub const DECIMAL_DIGITS: usize = 20;

pub fn dec(x: &Scalar) -> String {
    x.to_decimal_string(DECIMAL_DIGITS)
}

/// `"p/q"` for exact values, empty for big-floats.
pub fn exact(x: &Scalar) -> String {
    if x.is_exact() {
        x.to_exact_string()
    } else {
        String::new()
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

/// Collects the files of one run and writes the manifest last.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<String>,
    started: Instant,
    started_unix: u64,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            started: Instant::now(),
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        })
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_error(&path, e))?;
        w.write_record(header).map_err(|e| io_error(&path, e))?;
        for row in rows {
            w.write_record(&row).map_err(|e| io_error(&path, e))?;
        }
        w.flush().map_err(|e| io_error(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(value).expect("json value serializes");
        fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn finish(self, command: &str, exp: &Experiment) -> Result<PathBuf> {
        let canonical = exp.file.canonical_json();
        let digest = hex::encode(Sha256::digest(canonical.as_bytes()));
        let manifest = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config_sha256": digest,
            "config": serde_json::from_str::<Value>(&canonical).expect("canonical json parses"),
            "seed": exp.seed(),
            "precision_bits": exp.config.precision().bits(),
            "decimal_digits": DECIMAL_DIGITS,
            "started_unix": self.started_unix,
            "wall_clock_seconds": self.started.elapsed().as_secs_f64(),
            "files": self.files,
        });
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("json value serializes");
        fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))?;
        Ok(self.dir)
    }
}
