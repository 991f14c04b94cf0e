//! Deterministic report and table emission: `report.json` with the resolved
//! config, a content hash of the inputs and per-criterion verdicts, plus one
//! CSV per table and a plot-ready CSV per figure.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use roughchaos_core::io::fmt_f64;
use roughchaos_core::Result;

#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub experiment: String,
    pub schema: u64,
    /// sha256 of the raw config file bytes.
    pub input_hash: String,
    pub config: BTreeMap<String, String>,
    pub results: serde_json::Value,
    pub criteria: Vec<Criterion>,
    pub pass: bool,
}

pub struct ReportBuilder {
    experiment: String,
    out_dir: PathBuf,
    input_hash: String,
    config: BTreeMap<String, String>,
    results: serde_json::Map<String, serde_json::Value>,
    criteria: Vec<Criterion>,
}

impl ReportBuilder {
    pub fn new(experiment: &str, cfg: &crate::config::ExperimentConfig) -> Result<Self> {
        std::fs::create_dir_all(&cfg.out_dir)?;
        let mut hasher = Sha256::new();
        hasher.update(&cfg.raw_bytes);
        let digest = hasher.finalize();
        let input_hash: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        Ok(ReportBuilder {
            experiment: experiment.to_string(),
            out_dir: cfg.out_dir.clone(),
            input_hash,
            config: cfg.raw.clone(),
            results: serde_json::Map::new(),
            criteria: Vec::new(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    pub fn insert(&mut self, key: &str, value: serde_json::Value) {
        self.results.insert(key.to_string(), value);
    }

    pub fn criterion(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        let detail = detail.into();
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("[{verdict}] {name}: {detail}");
        self.criteria.push(Criterion {
            name: name.to_string(),
            pass,
            detail,
        });
    }

    /// Write a CSV table; every cell formats through the 17-digit float
    /// form when numeric.
    pub fn table(&self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let path = self.out_dir.join(format!("{name}.csv"));
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            let cells: Vec<String> = row.iter().map(|x| fmt_f64(*x)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Plot-ready CSV with (x, y, lo, hi) columns.
    pub fn plot(&self, name: &str, rows: &[(f64, f64, f64, f64)]) -> Result<()> {
        let path = self.out_dir.join(format!("{name}.csv"));
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "x,y,lo,hi")?;
        for (x, y, lo, hi) in rows {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_f64(*x),
                fmt_f64(*y),
                fmt_f64(*lo),
                fmt_f64(*hi)
            )?;
        }
        w.flush()?;
        Ok(())
    }

    /// Finalize `report.json`; returns overall pass.
    pub fn finish(self) -> Result<bool> {
        let pass = !self.criteria.is_empty() && self.criteria.iter().all(|c| c.pass);
        let report = Report {
            experiment: self.experiment,
            schema: crate::config::SCHEMA_VERSION,
            input_hash: self.input_hash,
            config: self.config,
            results: serde_json::Value::Object(self.results),
            criteria: self.criteria,
            pass,
        };
        let path = self.out_dir.join("report.json");
        std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
        Ok(pass)
    }
}

/// Helper: json number (f64) that serializes deterministically.
pub fn num(x: f64) -> serde_json::Value {
    serde_json::json!(x)
}
