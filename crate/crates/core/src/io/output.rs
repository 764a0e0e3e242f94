use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::trajectory::fmt_f64;
use crate::error::{Error, Result};
use crate::experiments::{ExperimentOutput, SeriesTable};

pub fn write_table<W: Write>(w: &mut W, table: &SeriesTable) -> Result<()> {
    writeln!(w, "{}", table.columns.join(","))?;
    for row in &table.rows {
        if row.len() != table.columns.len() {
            return Err(Error::schema(format!("table {}: row of {} values for {} columns", table.name, row.len(), table.columns.len())));
        }
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Directory for a run: `<root>/<first 16 hex digits of the config hash>`.
pub fn run_dir(root: &Path, config_hash: &str) -> PathBuf {
    root.join(&config_hash[..16.min(config_hash.len())])
}

/// Writes `config.json`, `report.json` and every series table; returns the run directory.
pub fn write_run<C: Serialize>(root: &Path, config: &C, out: &ExperimentOutput) -> Result<PathBuf> {
    let dir = run_dir(root, &out.report.provenance.config_hash);
    fs::create_dir_all(&dir)?;
    write_json(&dir.join("config.json"), config)?;
    write_json(&dir.join("report.json"), &out.report)?;
    for table in &out.tables {
        let mut w = BufWriter::new(File::create(dir.join(table.file_name()))?);
        write_table(&mut w, table)?;
        w.flush()?;
    }
    Ok(dir)
}
