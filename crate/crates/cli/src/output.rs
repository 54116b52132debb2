//! Output directory: CSV tables, JSON sidecars and per-point checkpoints.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use floquet_east::io::{fmt_f64, sidecar_path, write_json};
use floquet_east::rng::RNG_ALGORITHM;
use serde::de::DeserializeOwned;
use serde::Serialize;

pub type CsvWriter = csv::Writer<BufWriter<File>>;

/// Metadata written next to every output. The configuration is flattened to
/// the top level so a sidecar can be passed back via `--config`.
#[derive(Debug, Serialize)]
pub struct Sidecar<'a, C: Serialize, E: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub rng: &'static str,
    pub file: String,
    #[serde(flatten)]
    pub extra: E,
    #[serde(flatten)]
    pub config: &'a C,
}

pub struct Output {
    dir: PathBuf,
    subcommand: &'static str,
    resume: bool,
}

impl Output {
    pub fn new(dir: &Path, subcommand: &'static str, resume: bool) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            subcommand,
            resume,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn csv(&self, name: &str, header: &[&str]) -> Result<CsvWriter> {
        let path = self.path(name);
        let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(header)?;
        Ok(w)
    }

    /// Writes `<name>.json` next to the data file `name`.
    pub fn sidecar<C: Serialize, E: Serialize>(&self, name: &str, config: &C, extra: E) -> Result<()> {
        let meta = Sidecar {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand: self.subcommand,
            rng: RNG_ALGORITHM,
            file: name.to_string(),
            extra,
            config,
        };
        write_json(&sidecar_path(&self.path(name)), &meta)?;
        Ok(())
    }

    fn checkpoint_path(&self, key: &str) -> PathBuf {
        let safe: String = key
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || "-_.=".contains(c) { c } else { '_' })
            .collect();
        self.dir.join("checkpoints").join(self.subcommand).join(format!("{safe}.json"))
    }

    /// Loads a stored result for `key`, or computes and stores it.
    pub fn checkpointed<T, F>(&self, key: &str, compute: F) -> Result<T>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        let path = self.checkpoint_path(key);
        if self.resume && path.exists() {
            if let Ok(v) = floquet_east::io::read_json(&path) {
                log::debug!("reusing checkpoint {}", path.display());
                return Ok(v);
            }
            log::warn!("ignoring unreadable checkpoint {}", path.display());
        }
        let value = compute()?;
        fs::create_dir_all(path.parent().expect("checkpoint dir"))?;
        // Write then rename so an interrupted run never leaves a torn file.
        let tmp = path.with_extension("tmp");
        write_json(&tmp, &value)?;
        fs::rename(&tmp, &path)?;
        Ok(value)
    }
}

/// Float cell with 17 significant digits; empty for `None`.
pub fn num(x: f64) -> String {
    fmt_f64(x)
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Checkpoint key component for a float that is exact (bit pattern).
pub fn key_f64(x: f64) -> String {
    format!("{:016x}", x.to_bits())
}
