//! CSV/JSON emission and the run manifest. Every file is written to a
//! temporary sibling and renamed into place, so a reader never sees a
//! partial output.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliResult;

/// Fixed numeric format: 17 significant digits, scientific, no locale.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_bytes<I>(header: &[String], rows: I) -> CliResult<Vec<u8>>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| std::io::Error::other(e.to_string()).into())
}

fn csv_err(e: csv::Error) -> crate::error::CliError {
    std::io::Error::other(e.to_string()).into()
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("report serializes");
    v.push(b'\n');
    v
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// The effective configuration (CLI overrides applied) as TOML; running it
    /// again reproduces every output byte for byte.
    pub config_toml: Option<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
    pub status: String,
    pub outputs: Vec<OutputRecord>,
}

/// An output directory owned by one run.
pub struct OutputDir {
    dir: PathBuf,
    records: Vec<OutputRecord>,
    started: Instant,
    started_unix_s: u64,
}

impl OutputDir {
    pub fn create(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            records: Vec::new(),
            started: Instant::now(),
            started_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        write_atomic(&self.dir, name, bytes)?;
        self.records.push(OutputRecord { file: name.to_string(), bytes: bytes.len(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    /// Writes `manifest.json` describing everything written so far.
    pub fn finish(
        self,
        command: &str,
        config: serde_json::Value,
        config_toml: Option<String>,
        seed: Option<u64>,
        status: &str,
    ) -> CliResult<RunManifest> {
        let manifest = RunManifest {
            tool: "rydberg",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_toml,
            config,
            seed,
            started_unix_s: self.started_unix_s,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
            status: status.to_string(),
            outputs: self.records,
        };
        write_atomic(&self.dir, "manifest.json", &json_bytes(&manifest))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_is_fixed() {
        assert_eq!(fmt_num(0.25), "2.5000000000000000e-1");
        assert_eq!(fmt_num(-1.0 / 3.0), "-3.3333333333333331e-1");
        assert_eq!(fmt_num(0.0), "0.0000000000000000e0");
    }

    #[test]
    fn csv_layout() {
        let b = csv_bytes(&["t_us".into(), "x".into()], vec![vec!["1".into(), "2".into()]]).unwrap();
        assert_eq!(String::from_utf8(b).unwrap(), "t_us,x\n1,2\n");
    }

    #[test]
    fn manifest_hashes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write("a.txt", b"abc").unwrap();
        let m = out.finish("test", serde_json::Value::Null, None, None, "ok").unwrap();
        assert_eq!(m.outputs[0].sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert!(dir.path().join("manifest.json").exists());
        assert_eq!(std::fs::read(dir.path().join("a.txt")).unwrap(), b"abc");
    }
}
