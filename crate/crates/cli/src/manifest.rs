//! Provenance record written next to every set of output files.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::ingest::Ingested;

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
    pub response: String,
    pub predictors: Vec<String>,
    pub rows_read: usize,
    pub rows_dropped: usize,
    pub n: usize,
    pub p: usize,
}

impl InputRecord {
    pub fn new(path: &str, ing: &Ingested) -> Self {
        Self {
            path: path.to_string(),
            sha256: ing.sha256.clone(),
            response: ing.response.clone(),
            predictors: ing.predictors.clone(),
            rows_read: ing.rows_read,
            rows_dropped: ing.rows_dropped,
            n: ing.n(),
            p: ing.p(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub library_version: String,
    /// Options that determine the numeric output; thread count and output
    /// location are excluded.
    pub config: serde_json::Value,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub input: Option<InputRecord>,
    pub outputs: Vec<String>,
    pub threads: Option<usize>,
    pub started_at: String,
    pub finished_at: String,
}

impl RunManifest {
    pub fn start(command: &str, config: serde_json::Value, seeds: Vec<u64>, threads: Option<usize>) -> Self {
        let canonical = serde_json::to_vec(&config).expect("config serializes");
        Self {
            command: command.to_string(),
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: hex::encode(Sha256::digest(&canonical)),
            config,
            seeds,
            input: None,
            outputs: Vec::new(),
            threads,
            started_at: now(),
            finished_at: String::new(),
        }
    }

    pub fn finish(mut self, outputs: &[String]) -> Self {
        self.outputs = outputs.to_vec();
        self.finished_at = now();
        self
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
