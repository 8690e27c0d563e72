use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};
use tramor::analysis::Table;
use tramor::experiments::ExperimentConfig;
use tramor::rom::RomTrajectory;

use crate::Failure;

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
struct ProducedFile {
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    tool_version: &'static str,
    library_version: &'static str,
    command: &'a str,
    config_sha256: String,
    seed: u64,
    jobs: usize,
    /// Seconds since the Unix epoch; the only field that differs between
    /// identical runs.
    timestamp: u64,
    files: Vec<ProducedFile>,
}

/// Output directory that remembers what was written to it.
pub struct OutputDir {
    root: PathBuf,
    gnuplot: bool,
    files: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: PathBuf, gnuplot: bool) -> Result<Self, Failure> {
        fs::create_dir_all(&root).map_err(|e| Failure::Io(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self { root, gnuplot, files: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn record(&mut self, name: &str) {
        self.files.push(PathBuf::from(name));
    }

    /// Runs `write` against `name` inside the directory and records it.
    pub fn write_with(&mut self, name: &str, write: impl FnOnce(&Path) -> tramor::Result<()>) -> Result<(), Failure> {
        write(&self.path(name))?;
        self.record(name);
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), Failure> {
        fs::write(self.path(name), text).map_err(|e| Failure::Io(format!("{name}: {e}")))?;
        self.record(name);
        Ok(())
    }

    pub fn table(&mut self, stem: &str, table: &Table) -> Result<(), Failure> {
        self.write_with(&format!("{stem}.csv"), |p| table.write_csv(p))?;
        if self.gnuplot {
            self.write_with(&format!("{stem}.dat"), |p| table.write_gnuplot(p))?;
        }
        Ok(())
    }

    pub fn trajectory(&mut self, stem: &str, traj: &RomTrajectory<f64>) -> Result<(), Failure> {
        self.write_with(&format!("{stem}.csv"), |p| traj.write_csv(p, ","))?;
        if self.gnuplot {
            self.write_with(&format!("{stem}.dat"), |p| traj.write_csv(p, " "))?;
        }
        Ok(())
    }

    pub fn gnuplot(&self) -> bool {
        self.gnuplot
    }

    pub fn finish(self, command: &str, config_sha256: String, seed: u64, jobs: usize) -> Result<PathBuf, Failure> {
        let mut files = Vec::with_capacity(self.files.len());
        for name in &self.files {
            let bytes = fs::read(self.root.join(name)).map_err(|e| Failure::Io(format!("{}: {e}", name.display())))?;
            files.push(ProducedFile { path: name.display().to_string(), bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) });
        }
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            tool_version: env!("CARGO_PKG_VERSION"),
            library_version: tramor::VERSION,
            command,
            config_sha256,
            seed,
            jobs,
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            files,
        };
        let path = self.root.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| Failure::Io(format!("manifest: {e}")))?;
        Ok(path)
    }
}

/// Canonical JSON of the effective configs and its hash.
pub fn config_digest(configs: &[(String, ExperimentConfig)]) -> (String, String) {
    let value: serde_json::Map<String, serde_json::Value> = configs
        .iter()
        .map(|(k, c)| (k.clone(), serde_json::to_value(c).expect("config serializes")))
        .collect();
    let compact = serde_json::to_string(&value).expect("config serializes");
    let pretty = serde_json::to_string_pretty(&value).expect("config serializes");
    (pretty, sha256_hex(compact.as_bytes()))
}
