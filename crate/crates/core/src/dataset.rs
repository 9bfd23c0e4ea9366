//! Dataset persistence: JSON-lines units plus a sidecar metadata file
//! carrying the configuration digest and tool version.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::Unit;

/// Sidecar contents written next to every dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub tool_version: String,
    pub config_digest: String,
    pub config: SimConfig,
}

impl DatasetMeta {
    pub fn for_config(config: &SimConfig) -> Self {
        DatasetMeta {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest: config.digest(),
            config: config.clone(),
        }
    }
}

pub fn sidecar_path(dataset: &Path) -> PathBuf {
    let mut name = dataset.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    dataset.with_file_name(name)
}

/// Write one unit per line: `{id, x, u, t, y, pi_true, paragraphs}`.
pub fn write_dataset(path: &Path, units: &[Unit], config: &SimConfig) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for unit in units {
        serde_json::to_writer(&mut w, unit)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;

    let meta = DatasetMeta::for_config(config);
    let mut w = BufWriter::new(File::create(sidecar_path(path))?);
    serde_json::to_writer_pretty(&mut w, &meta)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Vec<Unit>> {
    let file = File::open(path)
        .map_err(|e| Error::Dataset(format!("cannot open {}: {e}", path.display())))?;
    let reader = BufReader::new(file);
    let mut units = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let unit: Unit = serde_json::from_str(&line)
            .map_err(|e| Error::Dataset(format!("line {}: {e}", lineno + 1)))?;
        units.push(unit);
    }
    if units.is_empty() {
        return Err(Error::Dataset("dataset contains no units".into()));
    }
    Ok(units)
}

/// Load the sidecar if present.
pub fn read_sidecar(dataset: &Path) -> Result<Option<DatasetMeta>> {
    let path = sidecar_path(dataset);
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path)?;
    let meta =
        serde_json::from_str(&text).map_err(|e| Error::Dataset(format!("sidecar: {e}")))?;
    Ok(Some(meta))
}
