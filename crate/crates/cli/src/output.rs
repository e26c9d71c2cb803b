//! Output directory bookkeeping: every written file is recorded in the run manifest.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use stocp_core::io::{CsvTable, Manifest};

pub struct OutputDir {
    dir: PathBuf,
    command: String,
    manifest: Manifest,
}

impl OutputDir {
    pub fn create(dir: &Path, command: &str, config: serde_json::Value) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutputDir { dir: dir.to_path_buf(), command: command.to_string(), manifest: Manifest::new(command, config) })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn manifest_mut(&mut self) -> &mut Manifest {
        &mut self.manifest
    }

    pub fn csv(&mut self, name: &str, table: &CsvTable) -> Result<PathBuf> {
        let p = self.path(name);
        table.write(&p).with_context(|| format!("writing {}", p.display()))?;
        self.record(&p)?;
        println!("wrote {}", p.display());
        Ok(p)
    }

    /// Registers a file written by other means.
    pub fn record(&mut self, path: &Path) -> Result<()> {
        self.manifest.add_file(path)?;
        Ok(())
    }

    /// Writes `<command>.manifest.json`; the manifest itself is not listed.
    pub fn finish(self) -> Result<PathBuf> {
        let p = self.dir.join(format!("{}.manifest.json", self.command));
        self.manifest.write(&p)?;
        Ok(p)
    }
}
