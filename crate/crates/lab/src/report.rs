//! JSON reports and CSV artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

use kcost_core::geometry::{Point, WeightedSet};

use crate::cli::Cli;

/// Everything a run writes to `<out>/<command>.json`. Field order is fixed;
/// apart from `timestamp`, reruns with the same config are byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub timestamp: u64,
    pub config: Cli,
    /// `None` for commands that certify nothing.
    pub pass: Option<bool>,
    pub artifacts: Vec<PathBuf>,
    pub results: serde_json::Value,
}

impl Report {
    pub fn new(config: &Cli, results: impl Serialize, pass: Option<bool>, artifacts: Vec<PathBuf>) -> Result<Self> {
        Ok(Report {
            tool: "kcost",
            version: env!("CARGO_PKG_VERSION"),
            core_version: kcost_core::VERSION,
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            config: config.clone(),
            pass,
            artifacts,
            results: serde_json::to_value(results)?,
        })
    }
}

/// Writes the report as pretty JSON and returns its path.
pub fn emit_report(dir: &Path, name: &str, report: &Report) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(format!("{name}.json"));
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn write_text(dir: &Path, name: &str, text: String) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Point rows in the dataset CSV format.
pub fn write_points(dir: &Path, name: &str, dim: usize, points: &[Point]) -> Result<PathBuf> {
    let mut buf = Vec::new();
    kcost_core::io::write_points(&mut buf, dim, points.iter().map(|p| p.coords().to_vec()))?;
    write_text(dir, name, String::from_utf8(buf)?)
}

/// Weighted rows: coordinates followed by the weight.
pub fn write_weighted(dir: &Path, name: &str, set: &WeightedSet) -> Result<PathBuf> {
    let mut buf = Vec::new();
    kcost_core::io::write_weighted(&mut buf, set)?;
    write_text(dir, name, String::from_utf8(buf)?)
}

/// A table with a header row; values use shortest round-trip formatting.
pub fn write_table(dir: &Path, name: &str, header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> Result<PathBuf> {
    let mut text = format!("{header}\n");
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_text(dir, name, text)
}
