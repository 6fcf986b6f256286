// Copyright 2026 The fastoqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Output files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use fastoqc_core::dynamics::TrajectoryTable;
use fastoqc_core::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::OutputFormat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub format: OutputFormat,
    pub wall_clock_s: f64,
    pub outputs: Vec<OutputEntry>,
}

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Resource(format!("{}: {e}", path.display()))
}

pub struct OutputWriter {
    dir: PathBuf,
    format: OutputFormat,
    entries: Vec<OutputEntry>,
}

impl OutputWriter {
    pub fn create(dir: &Path, format: OutputFormat) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), format, entries: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entries(&self) -> &[OutputEntry] {
        &self.entries
    }

    fn put(&mut self, name: &str, bytes: Vec<u8>) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, &bytes).map_err(|e| io_error(&path, e))?;
        self.entries.push(OutputEntry { file: name.to_string(), sha256: sha256_hex(&bytes), bytes: bytes.len() });
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Numerical(format!("{name}: {e}")))?;
        bytes.push(b'\n');
        self.put(name, bytes)
    }

    /// `stem.csv` or `stem.json` depending on the format.
    pub fn table<T: Serialize>(&mut self, stem: &str, rows: &[T]) -> Result<()> {
        match self.format {
            OutputFormat::Json => self.json(&format!("{stem}.json"), rows),
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for r in rows {
                    w.serialize(r).map_err(|e| Error::Numerical(format!("{stem}: {e}")))?;
                }
                let bytes = w.into_inner().map_err(|e| Error::Numerical(format!("{stem}: {e}")))?;
                self.put(&format!("{stem}.csv"), bytes)
            }
        }
    }

    pub fn trajectory(&mut self, stem: &str, table: &TrajectoryTable) -> Result<()> {
        match self.format {
            OutputFormat::Json => self.json(&format!("{stem}.json"), table),
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let err = |e: csv::Error| Error::Numerical(format!("{stem}: {e}"));
                w.write_record(&table.header).map_err(err)?;
                for row in &table.rows {
                    w.write_record(row.iter().map(|v| v.to_string())).map_err(err)?;
                }
                let bytes = w.into_inner().map_err(|e| Error::Numerical(format!("{stem}: {e}")))?;
                self.put(&format!("{stem}.csv"), bytes)
            }
        }
    }

    pub fn finish(self, mut manifest: RunManifest) -> Result<Vec<OutputEntry>> {
        manifest.outputs = self.entries.clone();
        let path = self.dir.join(MANIFEST);
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Numerical(e.to_string()))?;
        bytes.push(b'\n');
        fs::write(&path, bytes).map_err(|e| io_error(&path, e))?;
        Ok(self.entries)
    }
}

/// Reads `stem.csv` or `stem.json` from `dir`; `None` if neither exists.
pub fn read_table<T: DeserializeOwned>(dir: &Path, stem: &str) -> Result<Option<Vec<T>>> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    if csv_path.exists() {
        let mut r = csv::Reader::from_path(&csv_path).map_err(|e| Error::Config(format!("{}: {e}", csv_path.display())))?;
        let rows = r
            .deserialize()
            .collect::<std::result::Result<Vec<T>, _>>()
            .map_err(|e| Error::Config(format!("{}: {e}", csv_path.display())))?;
        Ok(Some(rows))
    } else if json_path.exists() {
        let bytes = fs::read(&json_path).map_err(|e| io_error(&json_path, e))?;
        let rows = serde_json::from_slice(&bytes).map_err(|e| Error::Config(format!("{}: {e}", json_path.display())))?;
        Ok(Some(rows))
    } else {
        Ok(None)
    }
}

pub fn read_trajectory(dir: &Path, stem: &str) -> Result<Option<TrajectoryTable>> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    if csv_path.exists() {
        let bad = |e: &dyn std::fmt::Display| Error::Config(format!("{}: {e}", csv_path.display()));
        let mut r = csv::Reader::from_path(&csv_path).map_err(|e| bad(&e))?;
        let header: Vec<String> = r.headers().map_err(|e| bad(&e))?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| bad(&e))?;
            rows.push(rec.iter().map(|v| v.parse::<f64>().map_err(|e| bad(&e))).collect::<Result<Vec<_>>>()?);
        }
        Ok(Some(TrajectoryTable { header, rows }))
    } else if json_path.exists() {
        let bytes = fs::read(&json_path).map_err(|e| io_error(&json_path, e))?;
        #[derive(Deserialize)]
        struct Raw {
            header: Vec<String>,
            rows: Vec<Vec<f64>>,
        }
        let raw: Raw = serde_json::from_slice(&bytes).map_err(|e| Error::Config(format!("{}: {e}", json_path.display())))?;
        Ok(Some(TrajectoryTable { header: raw.header, rows: raw.rows }))
    } else {
        Ok(None)
    }
}
