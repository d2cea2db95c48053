//! Output plumbing: provenance-stamped CSV and JSON writers.
//!
//! Every file embeds the config hash and master seed. CSV files carry them
//! in a leading `#` comment line (gnuplot-style); JSON files carry them as
//! fields.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use ncusum_core::error::Result;
use serde::Serialize;

pub struct OutputDir {
    dir: PathBuf,
    config_hash: u64,
    seed: u64,
}

impl OutputDir {
    pub fn new(dir: &Path, config_hash: u64, seed: u64) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            config_hash,
            seed,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Opens a CSV file with the provenance comment and header row written.
    pub fn csv(&self, name: &str, header: &str) -> Result<File> {
        let mut f = self.csv_raw(name)?;
        writeln!(f, "{header}")?;
        Ok(f)
    }

    /// Opens a CSV file with only the provenance comment; the caller writes
    /// its own header.
    pub fn csv_raw(&self, name: &str) -> Result<File> {
        let mut f = File::create(self.path(name))?;
        writeln!(
            f,
            "# config_hash={:016x} seed={}",
            self.config_hash, self.seed
        )?;
        Ok(f)
    }

    /// Writes a JSON document wrapped with provenance fields.
    pub fn json<T: Serialize>(&self, name: &str, payload: &T) -> Result<()> {
        #[derive(Serialize)]
        struct Wrapped<'a, T: Serialize> {
            config_hash: String,
            seed: u64,
            #[serde(flatten)]
            payload: &'a T,
        }
        let doc = Wrapped {
            config_hash: format!("{:016x}", self.config_hash),
            seed: self.seed,
            payload,
        };
        let mut f = File::create(self.path(name))?;
        serde_json::to_writer_pretty(&mut f, &doc)
            .map_err(|e| ncusum_core::error::Error::Serialization(e.to_string()))?;
        writeln!(f)?;
        Ok(())
    }
}

/// 17-significant-digit float field.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}
