//! File emission. Every file starts with the same provenance block: tool
//! versions, the config hash and the tolerance settings.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{RunConfig, Tolerances};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub subcommand: String,
    pub config_sha256: String,
    pub seed: u64,
    pub tolerances: Tolerances,
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    meta: &'a Meta,
    result: &'a T,
}

/// Writes artifacts for one subcommand into the output directory.
pub struct Emitter {
    dir: PathBuf,
    meta: Meta,
    plots: bool,
    written: Vec<PathBuf>,
}

/// One table cell; floats keep full round-trip precision.
pub fn cell(x: f64) -> String {
    format!("{x:e}")
}

impl Emitter {
    pub fn new(subcommand: &str, config: &RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(&config.out)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", config.out.display())))?;
        Ok(Emitter {
            dir: config.out.clone(),
            meta: Meta {
                tool: "kmslab".into(),
                version: VERSION.into(),
                core_version: kmslab_core::VERSION.into(),
                subcommand: subcommand.into(),
                config_sha256: config.hash(),
                seed: config.seed,
                tolerances: config.tolerances.clone(),
            },
            plots: config.plots,
            written: Vec::new(),
        })
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn header(&self) -> String {
        let t = &self.meta.tolerances;
        format!(
            "# kmslab {} (core {})\n# subcommand: {}\n# config-sha256: {}\n# seed: {}\n# tolerances: kinetic={:e} fit={:e} kms={:e} entropy={:e} dual={:e}\n",
            self.meta.version,
            self.meta.core_version,
            self.meta.subcommand,
            self.meta.config_sha256,
            self.meta.seed,
            t.kinetic,
            t.fit,
            t.kms,
            t.entropy,
            t.dual
        )
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    /// CSV with a `#` header block, then a column row, then the data.
    pub fn csv(&mut self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut file = fs::File::create(&path)?;
        file.write_all(self.header().as_bytes())?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(columns)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }

    /// JSON object `{"meta": ..., "result": ...}`, fields in declaration order.
    pub fn json<T: Serialize>(&mut self, name: &str, result: &T) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(&Document { meta: &self.meta, result })?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }

    /// Whitespace-separated data file plus a gnuplot script plotting it.
    /// Skipped unless plots are enabled.
    pub fn plot(&mut self, stem: &str, columns: &[&str], rows: &[Vec<String>], script: &str) -> Result<(), CliError> {
        if !self.plots {
            return Ok(());
        }
        let data = self.path(&format!("{stem}.dat"));
        let mut text = self.header();
        text.push_str(&format!("# {}\n", columns.join(" ")));
        for r in rows {
            text.push_str(&r.join(" "));
            text.push('\n');
        }
        fs::write(&data, text)?;
        let gp = self.path(&format!("{stem}.gp"));
        let body = script.replace("{data}", &format!("{stem}.dat"));
        fs::write(gp, format!("{}{body}\n", self.header()))?;
        Ok(())
    }
}
